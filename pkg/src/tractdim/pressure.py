"""Topological pressure estimation and the Bowen-zero dimension solver.

The pressure of the model map at parameter t is the exponential growth
rate per step of iterated transfer sums,

    P(t) = lim (1/n) log (L_t^n 1)(w0),

independent of the base point w0.  It is estimated by iterating the
lattice transfer operator with running normalization and reading the
log-ratio of consecutive iterates at several base points; the reported
spread tracks both the base-point disagreement and the drift over the
last iterations.

P is strictly decreasing in t, positive near t = 1 (where single
applications diverge) and negative for large t, so its zero is found by
bisection on the sign; that zero is the hyperbolic-dimension estimate,
the infimum of parameters with nonpositive pressure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .corefn import ModelParams
from .tractgeom import RadiusConfig
from .transferop import DivergenceError, GridFunction, GridOperator


class BracketError(ValueError):
    """The initial t-bracket does not straddle the pressure zero."""


@dataclass(frozen=True)
class PressureEstimate:
    t: float
    value: float
    spread: float
    n_used: int
    per_point: list = field(default_factory=list)


@dataclass(frozen=True)
class DimEstimate:
    value: float
    bracket: tuple
    method: str
    residual: float

    def __post_init__(self):
        lo, hi = self.bracket
        if not lo <= self.value <= hi:
            raise ValueError(f"estimate {self.value} outside bracket {self.bracket}")


def default_base_points(grid: GridFunction) -> list[complex]:
    """Five probe points spread across the lattice interior."""
    span = grid.u_max - grid.u0
    fracs = (0.12, 0.30, 0.50, 0.70, 0.88)
    angles = (0.0, 2.0, -2.2, 1.1, -0.9)
    pts = []
    for fr, th in zip(fracs, angles):
        u = grid.u0 + fr * span
        pts.append(math.exp(u) * complex(math.cos(th), math.sin(th)))
    return pts


def _read_point(grid: GridFunction, w: complex) -> float:
    u = math.log(abs(w))
    th = math.atan2(w.imag, w.real)
    return float(grid.interp(np.array([u]), np.array([th]))[0])


def pressure_estimate(
    t: float,
    params: ModelParams,
    cfg: RadiusConfig,
    n_max: int = 12,
    base_points: list[complex] | None = None,
    nu: int = 512,
    nv: int = 256,
    span: float = 40.0,
    operator: GridOperator | None = None,
) -> PressureEstimate:
    """Estimate P(t) by operator iteration from the constant function.

    Iterates h_{n+1} = L_t h_n with running max-normalization and reports
    the median over base points of log(h_{n+1}/h_n) at the final step;
    the spread is the largest deviation from that value over the base
    points and the last three iterations.
    """
    if not t > 1.0:
        raise DivergenceError(f"pressure_estimate requires t > 1, got t = {t}")
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    h = GridFunction.ones(cfg, nu=nu, nv=nv, span=span, delta=(t - 1.0) / 2.0)
    op = operator if operator is not None else GridOperator(params, cfg, h)
    pts = base_points if base_points is not None else default_base_points(h)
    if not pts:
        raise ValueError("at least one base point is required")

    log_prev = [0.0 if (v := _read_point(h, w)) == 1.0 else math.log(v) for w in pts]
    slopes = np.zeros((n_max, len(pts)))
    log_norm_seen = 0.0
    for n in range(n_max):
        h_next, _ = op.apply(h, t)
        peak = float(np.max(h_next.values))
        if peak <= 0.0:
            raise ArithmeticError("iterate collapsed to zero; lattice too coarse")
        scaled = h_next.like(h_next.values / peak, delta=h_next.delta)
        log_peak = math.log(peak)
        for b, w in enumerate(pts):
            v = _read_point(scaled, w)
            if v <= 0.0:
                raise ArithmeticError(f"nonpositive iterate at base point {w!r}")
            cur = math.log(v) + log_peak + log_norm_seen
            slopes[n, b] = cur - log_prev[b]
            log_prev[b] = cur
        log_norm_seen += log_peak
        h = scaled

    value = float(np.median(slopes[-1]))
    last = slopes[max(0, n_max - 3):]
    spread = float(np.max(np.abs(last - value)))
    per_point = [(w, float(slopes[-1, b])) for b, w in enumerate(pts)]
    return PressureEstimate(t=t, value=value, spread=spread, n_used=n_max, per_point=per_point)


def bowen_zero(
    params: ModelParams,
    cfg: RadiusConfig,
    t_lo: float = 1.05,
    t_hi: float = 1.9,
    tol_t: float = 0.01,
    tol_P: float = 0.05,
    n_max: int = 12,
    nu: int = 512,
    nv: int = 256,
    span: float = 40.0,
    auto_widen: bool = False,
    operator: GridOperator | None = None,
    samples: list | None = None,
) -> DimEstimate:
    """Bisection for the pressure zero; dimension estimate with bracket.

    Requires P(t_lo) > 0 > P(t_hi); with auto_widen the lower endpoint is
    pulled toward 1 geometrically (and the upper pushed out) until the
    signs straddle, which the divergence of single applications at t = 1
    guarantees to terminate.  Pressure values are noisy, so the sign is
    what drives the bisection; the returned residual is |P| at the final
    midpoint and ``samples`` (if given) collects every (t, P, spread)
    evaluated along the way.
    """
    op = operator
    if op is None:
        probe = GridFunction.ones(cfg, nu=nu, nv=nv, span=span)
        op = GridOperator(params, cfg, probe)

    def P(t: float) -> PressureEstimate:
        est = pressure_estimate(
            t, params, cfg, n_max=n_max, nu=nu, nv=nv, span=span, operator=op
        )
        if samples is not None:
            samples.append((t, est.value, est.spread))
        return est

    lo, hi = float(t_lo), float(t_hi)
    p_lo = P(lo)
    for _ in range(16):
        if p_lo.value > 0.0:
            break
        if not auto_widen:
            raise BracketError(
                f"pressure at t_lo = {lo:g} is {p_lo.value:g} <= 0; widen the "
                "bracket toward 1"
            )
        hi = lo
        lo = 1.0 + 0.5 * (lo - 1.0)
        p_lo = P(lo)
    else:
        raise BracketError("pressure stayed nonpositive arbitrarily close to t = 1")
    p_hi = P(hi)
    for _ in range(8):
        if p_hi.value < 0.0:
            break
        if not auto_widen:
            raise BracketError(
                f"pressure at t_hi = {hi:g} is {p_hi.value:g} >= 0; widen the "
                "bracket upward"
            )
        hi += 0.9
        p_hi = P(hi)
    else:
        raise BracketError("pressure stayed nonnegative far above the expected zero")

    mid = 0.5 * (lo + hi)
    est = P(mid)
    steps = 1
    while True:
        if est.value > 0.0:
            lo = mid
        else:
            hi = mid
        width_ok = (hi - lo) <= tol_t
        res_ok = abs(est.value) <= tol_P + est.spread
        noise_dominated = est.spread >= max(tol_P, abs(est.value))
        if (width_ok and (res_ok or noise_dominated)) or steps >= 48:
            break
        mid = 0.5 * (lo + hi)
        est = P(mid)
        steps += 1
    return DimEstimate(value=mid, bracket=(lo, hi), method="bowen",
                       residual=abs(est.value))


@dataclass(frozen=True)
class SweepRow:
    l: float
    estimate: DimEstimate | None
    band: tuple | None
    spread: float
    error: str = ""


def hypdim_sweep(
    l_values,
    p: float,
    cfg: RadiusConfig,
    t_lo: float = 1.05,
    t_hi: float = 1.9,
    tol_t: float = 0.01,
    tol_P: float = 0.05,
    n_max: int = 12,
    nu: int = 512,
    nv: int = 256,
    span: float = 40.0,
    entire_band_Kcal: float | None = None,
) -> list[SweepRow]:
    """Bowen-zero estimates over a translation sweep.

    Each l gets its own solve (auto-widened bracket); per-l failures are
    recorded and the sweep continues.  When entire_band_Kcal is given,
    the two-sided operator comparison folds into the dimension as a band
    of half-width t * log(Kcal) / |dP/dt| around the model estimate.
    """
    rows: list[SweepRow] = []
    for l in l_values:
        if l < cfg.l_min:
            rows.append(
                SweepRow(l=l, estimate=None, band=None, spread=math.nan,
                         error=f"l below disjoint-type threshold {cfg.l_min:g}")
            )
            continue
        params = ModelParams(p=p, l=float(l))
        samples: list = []
        try:
            est = bowen_zero(
                params, cfg, t_lo=t_lo, t_hi=t_hi, tol_t=tol_t, tol_P=tol_P,
                n_max=n_max, nu=nu, nv=nv, span=span, auto_widen=True,
                samples=samples,
            )
        except (BracketError, ArithmeticError, DivergenceError) as exc:
            rows.append(SweepRow(l=l, estimate=None, band=None, spread=math.nan,
                                 error=str(exc)))
            continue
        spread = max((s for (_, _, s) in samples), default=0.0)
        band = None
        if entire_band_Kcal is not None:
            slope = _pressure_slope(samples, est.value)
            half = est.value * math.log(entire_band_Kcal) / max(slope, 1e-9)
            band = (est.value - half - tol_t / 2.0, est.value + half + tol_t / 2.0)
        rows.append(SweepRow(l=l, estimate=est, band=band, spread=spread))
    return rows


def _pressure_slope(samples: list, t_star: float) -> float:
    """|dP/dt| near the zero, from the bisection samples."""
    near = sorted(samples, key=lambda s: abs(s[0] - t_star))[:4]
    if len(near) < 2:
        return 1.0
    ts = np.array([s[0] for s in near])
    ps = np.array([s[1] for s in near])
    if np.ptp(ts) < 1e-12:
        return 1.0
    slope = np.polyfit(ts, ps, 1)[0]
    return abs(float(slope))


def trend_report(rows: list[SweepRow]) -> str:
    """Plain-text monotone-trend report for a dimension sweep."""
    lines = ["hyperbolic dimension trend over translation sweep", ""]
    lines.append(f"{'l':>12}  {'dim':>8}  {'bracket':>19}  {'residual':>9}  note")
    ok_rows = [r for r in rows if r.estimate is not None]
    for r in rows:
        if r.estimate is None:
            lines.append(f"{r.l:>12.4g}  {'-':>8}  {'-':>19}  {'-':>9}  {r.error}")
        else:
            e = r.estimate
            lines.append(
                f"{r.l:>12.4g}  {e.value:>8.4f}  "
                f"[{e.bracket[0]:.4f}, {e.bracket[1]:.4f}]  {e.residual:>9.3g}  "
            )
    if len(ok_rows) >= 2:
        vals = [r.estimate.value for r in ok_rows]
        tol = max(r.estimate.bracket[1] - r.estimate.bracket[0] for r in ok_rows)
        monotone = all(b <= a + tol for a, b in zip(vals, vals[1:]))
        lines.append("")
        lines.append(
            "trend: non-increasing within tolerance"
            if monotone
            else "trend: NOT monotone within tolerance"
        )
        lines.append(f"final estimate at largest l: {vals[-1]:.4f}")
    return "\n".join(lines) + "\n"
