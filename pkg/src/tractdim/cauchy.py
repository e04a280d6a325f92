"""Entire-function evaluation from boundary integrals of the model map.

The entire approximation E of the tract model f is reconstructed from
Cauchy-type integrals of f over boundaries of the wedge regions: with Q
denoting the normalized boundary average computed by ``quad_cauchy``,

    E(z) = -Q(f(t)/(t - z))   over the inner contour, z outside it,
    E(z) = f(z) - Q(f(t)/(t - z))   over the outer contour, z inside
           the approximation region,

and the derivative uses the kernel f(t)/(t - z)^2.  The sign convention
of Q is pinned by the residue oracle: for a kernel h(t)/(t - z) with h
decaying at infinity and z inside the region, Q returns +h(z).

Contours are truncated where the off-band decay majorant of |f| times
the kernel factor falls below tol/10; the discarded tail is estimated
from the majorant and added to the reported error.  The engine is a
deterministic adaptive Gauss-Kronrod 7-15 pair with corner-first panel
splits and a bounded subdivision depth.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable

from .corefn import (
    DomainError,
    LogComplex,
    ModelParams,
    OVERFLOW_EXPONENT,
    log_f,
    principal_log,
    tau_inner,
)
from .tractgeom import (
    TractRegion,
    boundary_point,
    boundary_s_of_x,
    boundary_tangent,
    fact_bound_log,
    in_region,
)

_TWO_PI_I = 2j * math.pi

# Gauss-Kronrod 7-15 pair on [-1, 1] (QUADPACK constants)
_XK = (
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
)
_WK = (
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
)
_WG = (
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
)


class QuadratureError(RuntimeError):
    """Adaptive subdivision failed to converge; carries the best value."""

    def __init__(self, message: str, best: complex, err_est: float):
        super().__init__(message)
        self.best = best
        self.err_est = err_est


class ConditioningError(ValueError):
    """Evaluation point too close to the integration contour."""


@dataclass(frozen=True)
class ContourSpec:
    """Truncated boundary contour of a wedge region, clockwise oriented."""

    region: TractRegion
    truncation_x: float
    orientation: str = "clockwise"

    def __post_init__(self):
        if not self.truncation_x > self.region.x0:
            raise DomainError("truncation abscissa must exceed the region cutoff")
        if self.orientation != "clockwise":
            raise DomainError("only the clockwise orientation is supported")

    @property
    def s_end(self) -> float:
        return boundary_s_of_x(self.truncation_x, self.region)

    def corner_params(self) -> tuple[float, float]:
        """Parameter values of the two segment corners."""
        h0 = self.region.half_width(self.region.x0)
        return -h0, h0


@dataclass(frozen=True)
class QuadResult:
    value: complex
    err_est: float
    panels: int


def _gk15(f: Callable[[float], complex], a: float, b: float) -> tuple[complex, float]:
    """Kronrod-15 value and |K15 - G7| error estimate on [a, b]."""
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    fk = 0.0 + 0.0j
    fg = 0.0 + 0.0j
    for i, x in enumerate(_XK):
        if x == 0.0:
            v = f(c)
            fk += _WK[i] * v
            fg += _WG[3] * v
        else:
            v1 = f(c - h * x)
            v2 = f(c + h * x)
            fk += _WK[i] * (v1 + v2)
            if i % 2 == 1:  # odd Kronrod indices are the Gauss nodes
                fg += _WG[i // 2] * (v1 + v2)
    return fk * h, abs(fk - fg) * abs(h)


def quad_cauchy(
    kernel: Callable[[complex], complex],
    contour: ContourSpec,
    tol: float,
    max_depth: int = 30,
) -> QuadResult:
    """Normalized boundary average of a Cauchy kernel over the contour.

    Integrates kernel(t) dt along the truncated region boundary and
    divides by -2*pi*i, the sign fixed so that kernel h(t)/(t - z) with
    decaying h gives +h(z) for z in the region interior and 0 outside.
    Panels split at the segment corners first, then adaptively.
    """
    if not tol > 0.0:
        raise DomainError("quadrature tolerance must be positive")
    region = contour.region
    lo, hi = contour.corner_params()
    s_end = contour.s_end

    def integrand(s: float) -> complex:
        return kernel(boundary_point(s, region)) * boundary_tangent(s, region)

    pieces = [(-s_end, lo), (lo, hi), (hi, s_end)]
    length = 2.0 * s_end
    # budget on the raw line integral; the result is divided by 2*pi
    budget_per_len = 2.0 * math.pi * tol / length
    total = 0.0 + 0.0j
    err = 0.0
    panels = 0
    max_panels = 20000
    for a0, b0 in pieces:
        stack = [(a0, b0, 0)]
        while stack:
            a, b, depth = stack.pop()
            val, e = _gk15(integrand, a, b)
            panels += 1
            # accept on the proportional budget or at the roundoff floor
            ok = e <= budget_per_len * (b - a) or e <= 200.0 * 2.2e-16 * abs(val)
            if ok or depth >= max_depth or panels >= max_panels:
                total += val
                err += e
                if not ok and depth >= max_depth:
                    raise QuadratureError(
                        f"subdivision depth {max_depth} exceeded on [{a:g}, {b:g}]",
                        best=-total / _TWO_PI_I,
                        err_est=err / (2.0 * math.pi),
                    )
                if not ok and panels >= max_panels:
                    raise QuadratureError(
                        f"panel limit {max_panels} exceeded",
                        best=-total / _TWO_PI_I,
                        err_est=err / (2.0 * math.pi),
                    )
            else:
                m = 0.5 * (a + b)
                # right first so the left half is processed next (LIFO)
                stack.append((m, b, depth + 1))
                stack.append((a, m, depth + 1))
    return QuadResult(value=-total / _TWO_PI_I, err_est=err / (2.0 * math.pi), panels=panels)


# ----------------------------------------------------------------------
# model values on contours and geometric helpers
# ----------------------------------------------------------------------


def _f_value(t: complex, p: float) -> complex:
    """f(t) = exp(exp((Log t)^(1+p))), finite on the contours in use."""
    u = tau_inner(t, ModelParams(p=p))
    tau = cmath.exp(u)
    if tau.real > OVERFLOW_EXPONENT:
        raise OverflowError(f"model value overflows on contour at t = {t!r}")
    return cmath.exp(tau)


def _cutoff_of(consts) -> float:
    return float(getattr(consts, "D_est", consts))


def inner_contour_region(cutoff: float, p: float) -> TractRegion:
    """Region whose boundary evaluates E off the approximation region."""
    return TractRegion(x0=cutoff + 1.0, kappa=5.0 / 6.0, p=p)


def outer_contour_region(cutoff: float, p: float) -> TractRegion:
    """Region whose boundary gives the in-region correction E - f."""
    return TractRegion(x0=cutoff - 1.0, kappa=7.0 / 6.0, p=p)


def contour_distance(z: complex, contour: ContourSpec, n: int = 400) -> float:
    """Distance from z to the truncated contour, by dense sampling."""
    s_end = contour.s_end
    best = math.inf
    for i in range(n + 1):
        s = -s_end + 2.0 * s_end * i / n
        best = min(best, abs(z - boundary_point(s, contour.region)))
    return best


def _pick_truncation(region: TractRegion, z: complex, tol: float) -> float:
    """Smallest scan abscissa where the decay majorant kills the tail."""
    p = region.p
    x = region.x0 + 2.0
    d_eff = max(1e-3, abs(z.imag) * 0.0 + 1e-3)  # conservative kernel factor
    while x < 1e7:
        if fact_bound_log(x, p) <= math.log(tol / 10.0 * d_eff):
            return x
        x *= 1.6
    return x


def _tail_estimate(region: TractRegion, x_trunc: float, z: complex) -> float:
    """Upper estimate of the discarded contour tail, from the majorant."""
    p = region.p
    total = 0.0
    x = x_trunc
    for _ in range(60):
        x_next = x * 1.3
        lm = fact_bound_log(x, p)
        if lm < -745.0:
            break
        dist = max(1e-3, abs(complex(x, region.half_width(x)) - z) * 0.5)
        arc = (x_next - x) * math.hypot(1.0, region.half_width_deriv(x))
        total += 2.0 * math.exp(lm) * arc / dist
        x = x_next
    return total / (2.0 * math.pi)


def _build_contour(region: TractRegion, z: complex, tol: float) -> ContourSpec:
    return ContourSpec(region=region, truncation_x=_pick_truncation(region, z, tol))


def _cauchy_average(
    z: complex,
    p: float,
    region: TractRegion,
    tol: float,
    power: int = 1,
    truncation_x: float | None = None,
) -> tuple[complex, float]:
    """Q over the region boundary with kernel f(t)/(t - z)^power."""
    if truncation_x is None:
        contour = _build_contour(region, z, tol)
    else:
        contour = ContourSpec(region=region, truncation_x=truncation_x)
    if contour_distance(z, contour) < 1e-3:
        raise ConditioningError(
            f"evaluation point {z!r} closer than 1e-3 to the contour"
        )

    if power == 1:
        def kern(t: complex) -> complex:
            return _f_value(t, p) / (t - z)
    else:
        def kern(t: complex) -> complex:
            return _f_value(t, p) / (t - z) ** power

    q = quad_cauchy(kern, contour, tol)
    tail = _tail_estimate(region, contour.truncation_x, z)
    return q.value, q.err_est + tail


# ----------------------------------------------------------------------
# public evaluation operations
# ----------------------------------------------------------------------


def eval_entire(
    z: complex,
    params: ModelParams,
    consts,
    tol: float = 1e-9,
    allow_inside: bool = False,
) -> complex:
    """E_l(z) for z outside the approximation region G(D_est, 1) + l.

    Computed as -Q over the inner contour.  With ``allow_inside`` the
    formula is analytically continued across the region boundary (the
    model value is added back), which requires |f_l(z)| representable.
    """
    cutoff = _cutoff_of(consts)
    zz = complex(z) - params.l
    approx = TractRegion(x0=cutoff, kappa=1.0, p=params.p)
    inner = inner_contour_region(cutoff, params.p)
    if in_region(zz, approx) and not allow_inside:
        raise DomainError(
            f"eval_entire: {z!r} lies in the approximation region; "
            "use eval_entire_in_tract"
        )
    q, _ = _cauchy_average(zz, params.p, inner, tol)
    value = -q
    if in_region(zz, inner):
        value += _f_value(zz, params.p)
    return value


def eval_entire_in_tract(
    z: complex,
    params: ModelParams,
    consts,
    tol: float = 1e-9,
) -> tuple[LogComplex, complex]:
    """(f_l(z) in log form, additive correction E_l(z) - f_l(z)).

    Valid for z in G(D_est, 1) + l.  The correction is bounded by C_est;
    when |f_l(z)| is representable the caller can form E_l exactly as
    f + correction.
    """
    cutoff = _cutoff_of(consts)
    zz = complex(z) - params.l
    approx = TractRegion(x0=cutoff, kappa=1.0, p=params.p)
    if not in_region(zz, approx):
        raise DomainError(f"eval_entire_in_tract: {z!r} outside the approximation region")
    outer = outer_contour_region(cutoff, params.p)
    q, _ = _cauchy_average(zz, params.p, outer, tol)
    return log_f(z, params), -q


def eval_entire_deriv_correction(
    z: complex,
    params: ModelParams,
    consts,
    tol: float = 1e-9,
) -> complex:
    """In-region derivative correction E_l'(z) - f_l'(z)."""
    cutoff = _cutoff_of(consts)
    zz = complex(z) - params.l
    approx = TractRegion(x0=cutoff, kappa=1.0, p=params.p)
    if not in_region(zz, approx):
        raise DomainError(f"derivative correction requested outside the region: {z!r}")
    outer = outer_contour_region(cutoff, params.p)
    q, _ = _cauchy_average(zz, params.p, outer, tol, power=2)
    return -q


def model_deriv(z: complex, params: ModelParams) -> complex:
    """f_l'(z) = f_l(z) * exp(u) * (1+p) (Log(z-l))^p / (z-l).

    Raises OverflowError when the modulus is not representable.
    """
    zz = complex(z) - params.l
    u = tau_inner(z, params)
    tau = cmath.exp(u)
    if tau.real > OVERFLOW_EXPONENT:
        raise OverflowError("model derivative overflows")
    lz = principal_log(zz)
    fac = tau * (1.0 + params.p) * cmath.exp(params.p * cmath.log(lz)) / zz
    lf = log_f(z, params)
    log_mod = lf.log_mod + math.log(abs(fac))
    if log_mod > OVERFLOW_EXPONENT:
        raise OverflowError("model derivative overflows")
    return lf.to_complex() * fac


def eval_entire_deriv(
    z: complex,
    params: ModelParams,
    consts,
    tol: float = 1e-9,
) -> complex:
    """E_l'(z): boundary integral off-region, f' plus correction in-region."""
    cutoff = _cutoff_of(consts)
    zz = complex(z) - params.l
    approx = TractRegion(x0=cutoff, kappa=1.0, p=params.p)
    if in_region(zz, approx):
        return model_deriv(z, params) + eval_entire_deriv_correction(z, params, consts, tol)
    inner = inner_contour_region(cutoff, params.p)
    q, _ = _cauchy_average(zz, params.p, inner, tol, power=2)
    return -q


def eval_entire_with_error(
    z: complex,
    params: ModelParams,
    consts,
    tol: float = 1e-9,
    truncation_x: float | None = None,
) -> tuple[complex, float]:
    """Off-region E_l(z) together with its quadrature + tail error estimate."""
    cutoff = _cutoff_of(consts)
    zz = complex(z) - params.l
    inner = inner_contour_region(cutoff, params.p)
    q, err = _cauchy_average(zz, params.p, inner, tol, truncation_x=truncation_x)
    value = -q
    if in_region(zz, inner):
        value += _f_value(zz, params.p)
    return value, err
