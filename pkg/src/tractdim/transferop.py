"""Transfer operators of the tract models and their entire corrections.

For the model map the transfer operator at parameter t acts by

    (L_t h)(w) = sum over preimages z_k of |f_l'(z_k)|_1^(-t) h(z_k),

where |.|_1 is the cylinder (logarithmic) derivative.  The preimages of
w are z_k = phi_l(xi_k) with xi_k = log|w| + i(Arg w + 2 pi k), and the
weight has the closed form |(log phi_l)'(xi_k)|^t, so each term is

    term(v) = [ |phi/(phi+l)| / ((1+p) |xi| |Log xi|^(p/(1+p))) ]^t,
    xi = log|w| + i v.

The sum converges iff t > 1, and near t = 1 it converges so slowly that
truncation alone is hopeless (the tail decays like K^(1-t)).  Values
are therefore computed as a truncated lattice sum over |k| <= K plus an
integral for the tail, justified by the Euler-Maclaurin midpoint rule:
the lattice has spacing 2 pi, the terms vary on scale |v|, and the
substitution v = exp(s) makes the tail integrand smooth and compactly
concentrated even for t - 1 ~ 1e-2 and translations l ~ 1e4.  The
reported tail_bound covers the Euler-Maclaurin remainder, the tail
quadrature error, and the final truncation of the s-range.

Summation order and panel layout are fixed, so results are reproducible
bit for bit regardless of how callers parallelize.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .corefn import DomainError, ModelParams, log_f, phi, wrap_angle
from .tractgeom import CalibratedConstants, RadiusConfig

_TWO_PI = 2.0 * math.pi


class DivergenceError(ValueError):
    """Transfer sums diverge at the requested parameter (t <= 1)."""


@dataclass(frozen=True)
class TransferValue:
    """Truncated transfer sum with a rigorous remainder bound."""

    value: float
    tail_bound: float
    K: int
    terms: int


@dataclass(frozen=True)
class EntireTransferValue(TransferValue):
    """Transfer value with entire-map corrections on refined preimages."""

    refined_fraction: float = 0.0
    fallback_count: int = 0
    uncertainty_factor: float = 1.0


def preimage_xi(w: complex, k: int) -> complex:
    """Logarithmic preimage coordinate xi_k = log|w| + i(Arg w + 2 pi k).

    The model preimage of w with index k is z_k = phi_l(xi_k).
    """
    w = complex(w)
    if w == 0:
        raise DomainError("preimage_xi: w must be nonzero")
    return complex(math.log(abs(w)), cmath.phase(w) + _TWO_PI * k)


def tail_bound(u: float, K: int, t: float, p: float) -> float:
    """Elementary overestimate of the discarded term sum beyond index K.

    Uses the term-wise majorant |(log phi_l)'(xi)| <= |xi|^(-1)/(1+p)
    (valid for every l >= 0 since Re phi > 0) together with an integral
    comparison:

        tail <= (1/pi) (1/(1+p))^t (2 pi K)^(1-t) / (t-1) + first pair.

    Requires t > 1 and 2 pi K >= max(u, e^2).
    """
    if not t > 1.0:
        raise DivergenceError(f"tail bound requires t > 1, got t = {t}")
    if _TWO_PI * K < max(u, math.e**2):
        raise DomainError("tail_bound requires 2 pi K >= max(u, e^2)")
    c = (1.0 / (1.0 + p)) ** t
    lead = c * (_TWO_PI * K) ** (1.0 - t) / (math.pi * (t - 1.0))
    first_pair = 2.0 * c * (_TWO_PI * (K + 1) - math.pi) ** (-t)
    return lead + first_pair


# ----------------------------------------------------------------------
# stable log-weights, in v and in s = log v coordinates
# ----------------------------------------------------------------------


def _weight_base_direct(u: float, v: np.ndarray, p: float, l: float):
    """log of the t=1 weight plus the preimage read coordinates.

    Returns (base, log|z|, arg z) with z = phi_l(u + iv); the weight at
    parameter t is exp(t * base).  Valid while phi stays representable,
    which holds for the direct summation range |v| <= ~1e6.
    """
    xi = u + 1j * v
    lxi = np.log(xi)
    root = np.exp(np.log(lxi) / (1.0 + p))  # (Log xi)^(1/(1+p))
    ph = np.exp(root)
    z = ph + l
    logabs_z = np.log(np.abs(z))
    arg_z = np.angle(z)
    base = (
        root.real
        - logabs_z
        - math.log(1.0 + p)
        - np.log(np.abs(xi))
        - (p / (1.0 + p)) * np.log(np.abs(lxi))
    )
    return base, logabs_z, arg_z


def _weight_base_far(u: float, s: np.ndarray, p: float, l: float):
    """Same as _weight_base_direct for v = exp(s), stable for huge s.

    Returns (psi0, log|z|, arg z) where psi0 = base + s already includes
    the Jacobian of the v = exp(s) substitution.
    """
    ue = u * np.exp(-s)  # underflows harmlessly for large s
    logabs_xi = s + 0.5 * np.log1p(ue * ue)
    arg_xi = np.arctan2(1.0, ue)
    lxi = logabs_xi + 1j * arg_xi
    llxi = np.log(lxi)
    root = np.exp(llxi / (1.0 + p))
    logabs_phi = root.real
    arg_phi = root.imag
    if l == 0.0:
        logabs_z = logabs_phi
        arg_z = arg_phi
    else:
        log_l = math.log(l)
        m = np.maximum(logabs_phi, log_l)
        re = np.exp(logabs_phi - m) * np.cos(arg_phi) + np.exp(log_l - m)
        im = np.exp(logabs_phi - m) * np.sin(arg_phi)
        logabs_z = m + 0.5 * np.log(re * re + im * im)
        arg_z = np.arctan2(im, re)
    base = (
        logabs_phi
        - logabs_z
        - math.log(1.0 + p)
        - logabs_xi
        - (p / (1.0 + p)) * np.log(np.abs(lxi))
    )
    return base + s, logabs_z, arg_z


# 10-point Gauss-Legendre on [-1, 1] and its 5-point embedded check
_GL10_X = np.array(
    [
        -0.973906528517172,
        -0.865063366688985,
        -0.679409568299024,
        -0.433395394129247,
        -0.148874338981631,
        0.148874338981631,
        0.433395394129247,
        0.679409568299024,
        0.865063366688985,
        0.973906528517172,
    ]
)
_GL10_W = np.array(
    [
        0.066671344308688,
        0.149451349150581,
        0.219086362515982,
        0.269266719309996,
        0.295524224714753,
        0.295524224714753,
        0.269266719309996,
        0.219086362515982,
        0.149451349150581,
        0.066671344308688,
    ]
)
_GL5_X = np.array(
    [-0.906179845938664, -0.538469310105683, 0.0, 0.538469310105683, 0.906179845938664]
)
_GL5_W = np.array(
    [0.236926885056189, 0.478628670499366, 0.568888888888889, 0.478628670499366, 0.236926885056189]
)


def _tail_panels(s0: float, t: float, p: float, l: float) -> np.ndarray:
    """Deterministic panel edges for the s-space tail integral.

    Panels grow geometrically but are capped so the decay rate (t-1)
    stays resolvable, and the range extends past the point where the
    translation factor saturates (s ~ (log l)^(1+p)).
    """
    s_sat = math.log(max(l, math.e)) ** (1.0 + p)
    s_end = max(s0 + 8.0, s_sat + 4.0) + 80.0 / (t - 1.0)
    cap = max(0.5, 2.0 / (t - 1.0))
    edges = [s0]
    width = 0.5
    while edges[-1] < s_end:
        edges.append(edges[-1] + width)
        width = min(width * 1.7, cap)
    return np.array(edges)


def _tail_integral_scalar(u: float, start_v: float, t: float, p: float, l: float):
    """(1/(2 pi)) * integral of term(v) dv over (start_v, infinity).

    Returns (value, error_estimate).  Integration runs in s = log v with
    fixed Gauss-Legendre panels; the error estimate combines the
    embedded 5-point check and the final range truncation.
    """
    s0 = math.log(start_v)
    edges = _tail_panels(s0, t, p, l)
    a = edges[:-1]
    b = edges[1:]
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    nodes10 = (mid[:, None] + half[:, None] * _GL10_X[None, :]).ravel()
    psi0, _, _ = _weight_base_far(u, nodes10, p, l)
    vals10 = np.exp(t * (psi0 - nodes10) + nodes10)  # t*base + s
    vals10 = vals10.reshape(len(a), 10)
    per_panel = (vals10 * _GL10_W[None, :]).sum(axis=1) * half

    nodes5 = (mid[:, None] + half[:, None] * _GL5_X[None, :]).ravel()
    psi0_5, _, _ = _weight_base_far(u, nodes5, p, l)
    vals5 = np.exp(t * (psi0_5 - nodes5) + nodes5).reshape(len(a), 5)
    per_panel5 = (vals5 * _GL5_W[None, :]).sum(axis=1) * half

    total = float(np.sum(per_panel))
    quad_err = float(np.sum(np.abs(per_panel - per_panel5)))
    # geometric bound on the truncated range: integrand decays at least
    # like exp(-(t-1)(s - s_end)) once the translation factor saturates
    last = float(vals10[-1, -1])
    trunc = last * 2.0 / (t - 1.0)
    return total / _TWO_PI, (quad_err + trunc) / _TWO_PI


def _em_error_bound(t: float, edge_v: float, tail_value: float) -> float:
    """Euler-Maclaurin midpoint remainder for the lattice-to-integral swap.

    Uses |g''| <= (16 t^2 + 8 t) g / v^2 on the tail, which follows from
    logarithmic-derivative bounds of the weight.
    """
    return (math.pi**2 / 6.0) * (16.0 * t * t + 8.0 * t) / (edge_v * edge_v) * tail_value


def _min_direct_k(u: float) -> int:
    return max(16, int(math.ceil(max(u, math.e**2) / _TWO_PI)))


def model_partial_sum(w: complex, t: float, params: ModelParams, K: int) -> float:
    """Plain truncated sum over |k| <= K, in ascending |k| order.

    Defined for every t > 0; at t <= 1 the partial sums grow without
    bound, which is exactly what the divergence checks exercise.
    """
    u = math.log(abs(w))
    theta = cmath.phase(w)
    ks = np.arange(-K, K + 1)
    base, _, _ = _weight_base_direct(u, theta + _TWO_PI * ks, params.p, params.l)
    terms = np.exp(t * base)
    order = np.argsort(np.abs(ks), kind="stable")
    return float(math.fsum(terms[order]))


def transfer_model(
    w: complex,
    t: float,
    params: ModelParams,
    cfg: RadiusConfig,
    eps_tail: float | None = None,
) -> TransferValue:
    """(L_t 1)(w) for the model map, with a rigorous remainder bound.

    Sums preimage terms over |k| <= K in fixed ascending-|k| order with
    exact compensated accumulation, then adds the Euler-Maclaurin tail
    integral.  K grows until the remainder bound drops below eps_tail
    (default: 1e-8 of the value, re-checked a posteriori).
    """
    w = complex(w)
    if not t > 1.0:
        raise DivergenceError(f"transfer_model requires t > 1, got t = {t}")
    if not abs(w) > cfg.r:
        raise DomainError(f"transfer_model requires |w| > r = {cfg.r:g}, got {abs(w):g}")
    u = math.log(abs(w))
    theta = cmath.phase(w)
    p, l = params.p, params.l

    K = max(64, _min_direct_k(u))
    target = eps_tail
    for _ in range(12):
        direct = model_partial_sum(w, t, params, K)
        edge_hi = _TWO_PI * (K + 0.5) + theta
        edge_lo = _TWO_PI * (K + 0.5) - theta
        tail_hi, err_hi = _tail_integral_scalar(u, edge_hi, t, p, l)
        tail_lo, err_lo = _tail_integral_scalar(u, edge_lo, t, p, l)
        tail = tail_hi + tail_lo
        bound = (
            err_hi
            + err_lo
            + _em_error_bound(t, min(edge_hi, edge_lo), tail)
            + 1e-15 * direct
        )
        value = direct + tail
        goal = target if target is not None else 1e-8 * value
        if bound <= goal or K >= 65536:
            if bound > 1e-3 * value and K < 65536:
                K *= 2
                continue
            return TransferValue(value=value, tail_bound=bound, K=K, terms=2 * K + 1)
        K *= 2
    return TransferValue(value=value, tail_bound=bound, K=K, terms=2 * K + 1)


# ----------------------------------------------------------------------
# entire-map refinement
# ----------------------------------------------------------------------


def _model_term(xi: complex, t: float, params: ModelParams) -> float:
    base, _, _ = _weight_base_direct(xi.real, np.array([xi.imag]), params.p, params.l)
    return float(np.exp(t * base[0]))


def _refine_preimage(
    w: complex, xi: complex, params: ModelParams, consts: CalibratedConstants, tol: float
):
    """Newton-refine the entire-map preimage seeded at the model preimage.

    Solves E_l(z) = w starting from z0 = phi_l(xi); returns (z, E_l'(z))
    or None when the iteration fails to reach |E_l(z) - w| <= tol |w|.
    """
    from . import cauchy

    z = phi(xi, params)
    for _ in range(8):
        lf, corr = cauchy.eval_entire_in_tract(z, params, consts, tol=1e-10 * abs(w))
        e_val = lf.to_complex() + corr
        resid = e_val - w
        dcorr = cauchy.eval_entire_deriv_correction(z, params, consts, tol=1e-10 * abs(w))
        e_der = cauchy.model_deriv(z, params) + dcorr
        if e_der == 0:
            return None
        if abs(resid) <= tol * abs(w):
            return z, e_der
        z = z - resid / e_der
    lf, corr = cauchy.eval_entire_in_tract(z, params, consts, tol=1e-10 * abs(w))
    if abs(lf.to_complex() + corr - w) <= tol * abs(w):
        dcorr = cauchy.eval_entire_deriv_correction(z, params, consts, tol=1e-10 * abs(w))
        return z, cauchy.model_deriv(z, params) + dcorr
    return None


def entire_term_ratios(
    w: complex,
    t: float,
    params: ModelParams,
    consts: CalibratedConstants,
    cfg: RadiusConfig,
    max_terms: int = 8,
) -> list[float]:
    """Per-preimage ratios (entire term) / (model term) for |k| small."""
    ratios = []
    for k in _refinement_order(max_terms):
        xi = preimage_xi(w, k)
        refined = _refine_preimage(w, xi, params, consts, tol=1e-8)
        if refined is None:
            continue
        z, e_der = refined
        ent = (abs(e_der) * abs(z) / abs(w)) ** (-t)
        mod = _model_term(xi, t, params)
        if mod > 0:
            ratios.append(ent / mod)
    return ratios


def _refinement_order(n: int) -> list[int]:
    order = [0]
    k = 1
    while len(order) < n:
        order.append(k)
        if len(order) < n:
            order.append(-k)
        k += 1
    return order[:n]


def transfer_entire(
    w: complex,
    t: float,
    params: ModelParams,
    consts: CalibratedConstants,
    cfg: RadiusConfig,
    eps_tail: float | None = None,
    refine_budget: int = 8,
) -> EntireTransferValue:
    """(L_t 1)(w) for the entire map, refining the dominant preimages.

    Preimages with small |k| are Newton-refined on the entire map and
    contribute exact cylinder-derivative terms; deeper preimages keep
    their model terms, which the two-sided comparison bounds justify.
    With refine_budget = 0 the result equals transfer_model exactly.
    A per-term Newton failure falls back to the model term and flags a
    multiplicative uncertainty of 2^t.
    """
    base = transfer_model(w, t, params, cfg, eps_tail=eps_tail)
    if refine_budget <= 0:
        return EntireTransferValue(
            value=base.value,
            tail_bound=base.tail_bound,
            K=base.K,
            terms=base.terms,
            refined_fraction=0.0,
        )
    value = base.value
    fallbacks = 0
    uncertainty = 1.0
    refined = 0
    for k in _refinement_order(min(refine_budget, base.terms)):
        xi = preimage_xi(w, k)
        mod = _model_term(xi, t, params)
        res = _refine_preimage(w, xi, params, consts, tol=1e-9)
        if res is None:
            fallbacks += 1
            uncertainty *= 2.0**t
            continue
        z, e_der = res
        ent = (abs(e_der) * abs(z) / abs(w)) ** (-t)
        value += ent - mod
        refined += 1
    return EntireTransferValue(
        value=value,
        tail_bound=base.tail_bound,
        K=base.K,
        terms=base.terms,
        refined_fraction=refined / base.terms,
        fallback_count=fallbacks,
        uncertainty_factor=uncertainty,
    )


# ----------------------------------------------------------------------
# lattice functions and the grid operator
# ----------------------------------------------------------------------


@dataclass
class GridFunction:
    """Nonnegative function sampled on a lattice in (log|w|, arg w).

    u runs over [u0, u0 + du*(nu-1)]; the angular nodes are the nv cell
    centers of (-pi, pi].  Reads beyond u_max use the asymptotic decay
    extension h(u_max, theta) * (u_max/u)^delta with delta = (t-1)/2.
    """

    u0: float
    du: float
    nu: int
    nv: int
    values: np.ndarray
    delta: float = 0.25

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.nu, self.nv):
            raise DomainError(
                f"values shape {self.values.shape} != lattice ({self.nu}, {self.nv})"
            )
        if np.any(~np.isfinite(self.values)) or np.any(self.values < 0):
            raise DomainError("grid values must be finite and nonnegative")

    @classmethod
    def ones(cls, cfg: RadiusConfig, nu: int = 512, nv: int = 256,
             span: float = 40.0, delta: float = 0.25) -> "GridFunction":
        u0 = cfg.log_r
        du = span / (nu - 1)
        return cls(u0=u0, du=du, nu=nu, nv=nv, values=np.ones((nu, nv)), delta=delta)

    @property
    def u_max(self) -> float:
        return self.u0 + self.du * (self.nu - 1)

    @property
    def thetas(self) -> np.ndarray:
        dtheta = _TWO_PI / self.nv
        return -math.pi + dtheta * (np.arange(self.nv) + 0.5)

    def like(self, values: np.ndarray, delta: float | None = None) -> "GridFunction":
        return GridFunction(
            u0=self.u0, du=self.du, nu=self.nu, nv=self.nv, values=values,
            delta=self.delta if delta is None else delta,
        )

    def interp(self, u: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """Bilinear read, periodic in theta, decay-extended above u_max."""
        u = np.asarray(u, dtype=float)
        theta = np.asarray(theta, dtype=float)
        dtheta = _TWO_PI / self.nv
        jf = (theta + math.pi) / dtheta - 0.5
        j0 = np.floor(jf).astype(np.int64)
        ft = jf - j0
        j0m = np.mod(j0, self.nv)
        j1m = np.mod(j0 + 1, self.nv)

        uc = np.clip(u, self.u0, self.u_max)
        if_ = (uc - self.u0) / self.du
        i0 = np.clip(np.floor(if_).astype(np.int64), 0, self.nu - 2)
        fu = np.clip(if_ - i0, 0.0, 1.0)

        v00 = self.values[i0, j0m]
        v01 = self.values[i0, j1m]
        v10 = self.values[i0 + 1, j0m]
        v11 = self.values[i0 + 1, j1m]
        out = (1 - fu) * ((1 - ft) * v00 + ft * v01) + fu * ((1 - ft) * v10 + ft * v11)

        over = u > self.u_max
        if np.any(over):
            top = (1 - ft) * self.values[-1, j0m] + ft * self.values[-1, j1m]
            decay = (self.u_max / np.where(over, u, self.u_max)) ** self.delta
            out = np.where(over, top * decay, out)
        return out


class _StaticReads:
    """Precomputed bilinear gather plan for a fixed set of read points.

    The lattice geometry of the iterated function never changes, so the
    interpolation indices, the bilinear weights, and the above-lattice
    decay ratio can all be frozen; only the decay exponent (which tracks
    t) enters per parameter.
    """

    def __init__(self, logz, argz, u0: float, du: float, nu: int, nv: int):
        u = np.asarray(logz, dtype=float).ravel()
        theta = np.asarray(argz, dtype=float).ravel()
        self.shape = np.shape(logz)
        dtheta = _TWO_PI / nv
        jf = (theta + math.pi) / dtheta - 0.5
        j0 = np.floor(jf).astype(np.int64)
        ft = (jf - j0).astype(np.float32)
        j0m = np.mod(j0, nv)
        j1m = np.mod(j0 + 1, nv)

        u_max = u0 + du * (nu - 1)
        over = u > u_max
        uc = np.clip(u, u0, u_max)
        if_ = (uc - u0) / du
        i0 = np.clip(np.floor(if_).astype(np.int64), 0, nu - 2)
        fu = np.clip(if_ - i0, 0.0, 1.0).astype(np.float32)
        fu[over] = 1.0
        i0[over] = nu - 2

        self.idx00 = (i0 * nv + j0m).astype(np.int32)
        self.idx01 = (i0 * nv + j1m).astype(np.int32)
        self.idx10 = ((i0 + 1) * nv + j0m).astype(np.int32)
        self.idx11 = ((i0 + 1) * nv + j1m).astype(np.int32)
        self.w0 = (1.0 - fu) * (1.0 - ft)
        self.w1 = (1.0 - fu) * ft
        self.w2 = fu * (1.0 - ft)
        self.w3 = fu * ft
        # log(u/u_max) > 0 where the decay extension applies, else 0
        self.logratio = np.where(over, np.log(u / u_max), 0.0).astype(np.float32)

    def ext_factor(self, delta: float) -> np.ndarray:
        return np.exp(-delta * self.logratio)

    def read_flat(self, values: np.ndarray) -> np.ndarray:
        """Bilinear reads as a flat array; decay extension applied by caller."""
        flat = values.ravel()
        return (
            self.w0 * flat[self.idx00]
            + self.w1 * flat[self.idx01]
            + self.w2 * flat[self.idx10]
            + self.w3 * flat[self.idx11]
        )


@dataclass
class _PreparedT:
    """Per-parameter caches reused across operator iterations."""

    weights: np.ndarray       # (nu, W, nv) direct-window term weights
    ext_direct: np.ndarray
    g10: np.ndarray           # (nu, N10) far-tail integrand at GL10 nodes
    reads10_up: "_StaticReads"
    reads10_dn: "_StaticReads"
    ext10: np.ndarray
    half10: np.ndarray        # (P,) panel half-widths
    g5: np.ndarray
    reads5_up: "_StaticReads"
    reads5_dn: "_StaticReads"
    ext5: np.ndarray
    gw: np.ndarray            # (nu, NW) local-window integrand weights
    ext_w: np.ndarray
    trunc_rel: float


class GridOperator:
    """Precomputed transfer-operator kernel for one (params, cfg, lattice).

    The direct window covers preimage indices |k| <= K0 through a fine
    angular lattice shared by all output nodes of a row; everything
    farther is handled by the s-space tail integral, with the angular
    offset of each output column folded in exactly through a cumulative
    correction over one lattice spacing around the common tail edge.
    Weight tables are cached per t so pressure iterations pay only for
    interpolation and reductions.
    """

    def __init__(self, params: ModelParams, cfg: RadiusConfig, grid: GridFunction,
                 K0: int = 32):
        self.params = params
        self.cfg = cfg
        self.K0 = K0
        self.nu, self.nv = grid.nu, grid.nv
        self.u0, self.du = grid.u0, grid.du
        p, l = params.p, params.l
        W = 2 * K0 + 1
        dtheta = _TWO_PI / grid.nv
        v = -_TWO_PI * K0 - math.pi + dtheta * (np.arange(W * grid.nv) + 0.5)
        us = self.u0 + self.du * np.arange(self.nu)
        xi = us[:, None] + 1j * v[None, :]
        base, logz, argz = _weight_base_direct_grid(xi, p, l)
        geom = (self.u0, self.du, self.nu, self.nv)
        self._base = base.reshape(self.nu, W, self.nv)
        self._reads_direct = _StaticReads(
            logz.reshape(self.nu, W, self.nv), argz.reshape(self.nu, W, self.nv), *geom
        )
        self._us = us
        self.S0 = _TWO_PI * (K0 + 0.5)
        self._edge_grid = np.linspace(-math.pi, math.pi, 129)
        vg = self.S0 + self._edge_grid
        xw = us[:, None] + 1j * vg[None, :]
        bw, lzw, azw = _weight_base_direct_grid(xw, p, l)
        self._base_w = bw
        self._reads_w_up = _StaticReads(lzw, azw, *geom)
        self._reads_w_dn = _StaticReads(lzw, -azw, *geom)
        self._geom = geom
        self._prepared: dict[float, _PreparedT] = {}

    def _prepare(self, t: float) -> _PreparedT:
        got = self._prepared.get(t)
        if got is not None:
            return got
        p, l = self.params.p, self.params.l
        delta = (t - 1.0) / 2.0
        edges = _tail_panels(math.log(self.S0), t, p, l)
        a, b = edges[:-1], edges[1:]
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        n10 = (mid[:, None] + half[:, None] * _GL10_X[None, :]).ravel()
        n5 = (mid[:, None] + half[:, None] * _GL5_X[None, :]).ravel()
        psi10, logz10, argz10 = _weight_base_far_grid(self._us, n10, p, l)
        psi5, logz5, argz5 = _weight_base_far_grid(self._us, n5, p, l)
        g10 = np.exp(t * (psi10 - n10[None, :]) + n10[None, :])
        g5 = np.exp(t * (psi5 - n5[None, :]) + n5[None, :])
        reads10_up = _StaticReads(logz10, argz10, *self._geom)
        reads10_dn = _StaticReads(logz10, -argz10, *self._geom)
        reads5_up = _StaticReads(logz5, argz5, *self._geom)
        reads5_dn = _StaticReads(logz5, -argz5, *self._geom)
        prep = _PreparedT(
            weights=np.exp(t * self._base),
            ext_direct=self._reads_direct.ext_factor(delta),
            g10=g10,
            reads10_up=reads10_up,
            reads10_dn=reads10_dn,
            ext10=reads10_up.ext_factor(delta),
            half10=half,
            g5=g5,
            reads5_up=reads5_up,
            reads5_dn=reads5_dn,
            ext5=reads5_up.ext_factor(delta),
            gw=np.exp(t * self._base_w),
            ext_w=self._reads_w_up.ext_factor(delta),
            trunc_rel=2.0 / (t - 1.0),
        )
        # single-slot cache: pressure solvers sweep t sequentially
        self._prepared = {t: prep}
        return prep

    def apply(self, h: GridFunction, t: float) -> tuple[GridFunction, float]:
        """One operator application; returns (L_t h, max relative error)."""
        if not t > 1.0:
            raise DivergenceError(f"grid operator requires t > 1, got t = {t}")
        prep = self._prepare(t)
        hv = prep.ext_direct * self._reads_direct.read_flat(h.values)
        direct = np.einsum(
            "iwj,iwj->ij", prep.weights, hv.reshape(self.nu, 2 * self.K0 + 1, self.nv)
        )

        P = len(prep.half10)
        far_up, err_up = self._far_sum(h, prep, prep.reads10_up, prep.reads5_up, P)
        far_dn, err_dn = self._far_sum(h, prep, prep.reads10_dn, prep.reads5_dn, P)

        cum_up = self._window_cum(h, prep, self._reads_w_up)
        cum_dn = self._window_cum(h, prep, self._reads_w_dn)
        thetas = h.thetas
        up = far_up[:, None] - _interp_rows(self._edge_grid, cum_up, thetas)
        dn = far_dn[:, None] - _interp_rows(self._edge_grid, cum_dn, -thetas)
        tail = (up + dn) / _TWO_PI

        out = np.maximum(direct + tail, 0.0)
        scale = max(float(np.max(out)), 1e-300)
        tail_scale = float(np.max(tail)) if tail.size else 0.0
        err_rel = (
            err_up + err_dn + _em_error_bound(t, self.S0 - math.pi, abs(tail_scale) + 1e-300)
        ) / scale
        return h.like(out, delta=(t - 1.0) / 2.0), err_rel

    def _far_sum(self, h, prep: _PreparedT, reads10: _StaticReads, reads5: _StaticReads, P: int):
        hv10 = (prep.ext10 * reads10.read_flat(h.values)).reshape(self.nu, P, 10)
        pv10 = (prep.g10.reshape(self.nu, P, 10) * hv10) @ _GL10_W
        pv10 *= prep.half10[None, :]
        hv5 = (prep.ext5 * reads5.read_flat(h.values)).reshape(self.nu, P, 5)
        pv5 = (prep.g5.reshape(self.nu, P, 5) * hv5) @ _GL5_W
        pv5 *= prep.half10[None, :]
        val = pv10.sum(axis=1)
        err = float(np.max(np.abs(pv10 - pv5).sum(axis=1)))
        err += float(np.max(pv10[:, -1])) * prep.trunc_rel
        return val, err

    def _window_cum(self, h, prep: _PreparedT, reads: _StaticReads) -> np.ndarray:
        gw = prep.gw * (prep.ext_w * reads.read_flat(h.values)).reshape(prep.gw.shape)
        dv = np.diff(self._edge_grid)
        cum = np.zeros((self.nu, len(self._edge_grid)))
        cum[:, 1:] = np.cumsum(0.5 * (gw[:, 1:] + gw[:, :-1]) * dv[None, :], axis=1)
        mid = len(self._edge_grid) // 2  # edge_grid[mid] == 0
        return cum - cum[:, mid : mid + 1]


def _interp_rows(xgrid: np.ndarray, ytable: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Row-wise linear interpolation of ytable (nu, NG) at points x (nv,)."""
    dx = xgrid[1] - xgrid[0]
    jf = (x - xgrid[0]) / dx
    j0 = np.clip(np.floor(jf).astype(np.int64), 0, len(xgrid) - 2)
    fr = jf - j0
    return (1 - fr)[None, :] * ytable[:, j0] + fr[None, :] * ytable[:, j0 + 1]


def _weight_base_direct_grid(xi: np.ndarray, p: float, l: float):
    """Vectorized _weight_base_direct for a complex array of xi."""
    lxi = np.log(xi)
    root = np.exp(np.log(lxi) / (1.0 + p))
    ph = np.exp(root)
    z = ph + l
    logabs_z = np.log(np.abs(z))
    arg_z = np.angle(z)
    base = (
        root.real
        - logabs_z
        - math.log(1.0 + p)
        - np.log(np.abs(xi))
        - (p / (1.0 + p)) * np.log(np.abs(lxi))
    )
    return base, logabs_z, arg_z


def _weight_base_far_grid(us: np.ndarray, s: np.ndarray, p: float, l: float):
    """_weight_base_far broadcast over rows of u and a shared s-grid."""
    ue = us[:, None] * np.exp(-s)[None, :]
    logabs_xi = s[None, :] + 0.5 * np.log1p(ue * ue)
    arg_xi = np.arctan2(1.0, ue)
    lxi = logabs_xi + 1j * arg_xi
    root = np.exp(np.log(lxi) / (1.0 + p))
    logabs_phi = root.real
    arg_phi = root.imag
    if l == 0.0:
        logabs_z = logabs_phi
        arg_z = arg_phi
    else:
        log_l = math.log(l)
        m = np.maximum(logabs_phi, log_l)
        re = np.exp(logabs_phi - m) * np.cos(arg_phi) + np.exp(log_l - m)
        im = np.exp(logabs_phi - m) * np.sin(arg_phi)
        logabs_z = m + 0.5 * np.log(re * re + im * im)
        arg_z = np.arctan2(im, re)
    base = (
        logabs_phi
        - logabs_z
        - math.log(1.0 + p)
        - logabs_xi
        - (p / (1.0 + p)) * np.log(np.abs(lxi))
    )
    return base + s[None, :], logabs_z, arg_z


def apply_operator_grid(
    h: GridFunction, t: float, params: ModelParams, cfg: RadiusConfig, K0: int = 32
) -> GridFunction:
    """(L_t h) on the lattice of h.  Convenience wrapper over GridOperator."""
    op = GridOperator(params, cfg, h, K0=K0)
    out, _ = op.apply(h, t)
    return out
