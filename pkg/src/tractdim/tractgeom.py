"""Tract geometry, disjoint-type checks, and numerical constant calibration.

The tract of the model map lives inside wedge-like regions

    G(x0, kappa) = { x + iy : x > x0, |y| < kappa * pi * x / ((1+p) (log x)^p) },

whose boundaries also serve as integration contours for the entire
approximation.  The approximation theory needs a handful of constants
that the analysis only proves to exist:

    C_est  -- bound on |E - f|, |E' - f'| inside the approximation region
              and on |E| outside it,
    D_est  -- left cutoff of the approximation region G(D_est, 1),
    r0_est -- base working radius (> 4 C_est),
    K_est  -- distortion constant of the tract chart phi,
    Kcal   -- two-sided transfer-operator comparison constant.

``calibrate`` estimates them numerically on documented sample grids with
an explicit x2 safety factor and emits a reproducible key = value report
that the CLI caches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .corefn import DomainError, ModelParams, log_abs_f, phi, phi_deriv


@dataclass(frozen=True)
class TractRegion:
    """Wedge region G(x0, kappa) for growth exponent p."""

    x0: float
    kappa: float
    p: float

    def __post_init__(self):
        if not self.x0 > 1.0:
            raise DomainError(f"region cutoff x0 must exceed 1, got {self.x0}")
        if not 0.0 < self.kappa <= 2.0:
            raise DomainError(f"width factor kappa must lie in (0, 2], got {self.kappa}")
        if not self.p > 0.0:
            raise DomainError(f"growth exponent p must be positive, got {self.p}")

    def half_width(self, x: float) -> float:
        """Half opening |y| at abscissa x > 1."""
        return self.kappa * math.pi * x / ((1.0 + self.p) * math.log(x) ** self.p)

    def half_width_deriv(self, x: float) -> float:
        lx = math.log(x)
        return self.kappa * math.pi / ((1.0 + self.p) * lx**self.p) * (1.0 - self.p / lx)


@dataclass(frozen=True)
class CalibratedConstants:
    """Numerically calibrated stand-ins for the existence constants."""

    p: float
    C_est: float
    D_est: float
    r0_est: float
    K_est: float
    Kcal: float
    doc: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.r0_est > 4.0 * self.C_est:
            raise DomainError("r0_est must exceed 4 * C_est")
        if not self.D_est > 3.0:
            raise DomainError("D_est must exceed 3")
        for name in ("C_est", "D_est", "r0_est", "K_est", "Kcal"):
            v = getattr(self, name)
            if not (v > 0.0 and math.isfinite(v)):
                raise DomainError(f"{name} must be positive and finite, got {v}")

    def approx_region(self) -> TractRegion:
        """G(D_est, 1): where the entire function tracks the model."""
        return TractRegion(x0=self.D_est, kappa=1.0, p=self.p)


@dataclass(frozen=True)
class RadiusConfig:
    """Working radius r and the translation threshold for disjoint type."""

    r: float
    l_min: float
    cutoff: float | None = None  # approximation-region cutoff, when known

    @classmethod
    def from_constants(cls, consts: CalibratedConstants, r: float | None = None) -> "RadiusConfig":
        rr = consts.r0_est / 2.0 if r is None else float(r)
        if rr < consts.r0_est / 2.0:
            raise DomainError(
                f"working radius {rr:g} is below r0_est/2 = {consts.r0_est / 2.0:g}"
            )
        return cls(r=rr, l_min=max(0.0, rr - consts.D_est), cutoff=consts.D_est)

    @property
    def log_r(self) -> float:
        return math.log(self.r)

    def region_cutoff(self) -> float:
        """Cutoff of the wedge containing the tract."""
        if self.cutoff is not None:
            return self.cutoff
        return self.r - self.l_min if self.l_min > 0.0 else 3.25


def in_region(z: complex, region: TractRegion) -> bool:
    """Membership test for G(x0, kappa)."""
    z = complex(z)
    if not z.real > region.x0:
        return False
    return abs(z.imag) < region.half_width(z.real)


def boundary_point(s: float, region: TractRegion) -> complex:
    """Continuous parameterization of the boundary of G(x0, kappa).

    s = 0 is the midpoint of the vertical segment at x = x0; |s| <= h0
    (the segment half-height) traverses the segment; s beyond that
    follows the width curve |y| = kappa*pi*x/((1+p)(log x)^p), upper
    branch for s > 0, lower for s < 0.  Lipschitz in s and conjugation
    symmetric: boundary_point(-s) = conj(boundary_point(s)).
    """
    h0 = region.half_width(region.x0)
    if s >= 0:
        if s <= h0:
            return complex(region.x0, s)
        x = region.x0 + (s - h0)
        return complex(x, region.half_width(x))
    return boundary_point(-s, region).conjugate()


def boundary_tangent(s: float, region: TractRegion) -> complex:
    """d/ds of boundary_point, for contour integration."""
    h0 = region.half_width(region.x0)
    if -h0 <= s <= h0:
        return 1j
    if s > h0:
        x = region.x0 + (s - h0)
        return complex(1.0, region.half_width_deriv(x))
    x = region.x0 + (-s - h0)
    return complex(-1.0, region.half_width_deriv(x))


def boundary_s_of_x(x: float, region: TractRegion) -> float:
    """Parameter value of the upper-branch point with abscissa x >= x0."""
    return region.half_width(region.x0) + (x - region.x0)


def in_tract(z: complex, params: ModelParams, cfg: RadiusConfig) -> bool:
    """Whether z lies in the tract: log|f_l(z)| > log r within the wedge.

    The +inf overflow sentinel counts as inside; points where the map is
    undefined (branch cut, |z - l| <= 1) are outside.  The wedge
    membership matters: the principal-power formula is also large on
    side branches where the true function is bounded, and those are not
    part of the tract.
    """
    wedge = TractRegion(x0=cfg.region_cutoff(), kappa=1.0, p=params.p)
    if not in_region(complex(z) - params.l, wedge):
        return False
    try:
        return log_abs_f(z, params) > cfg.log_r
    except DomainError:
        return False


def min_l_for_disjoint(cfg: RadiusConfig) -> float:
    """Smallest translation making the tract avoid the working disk."""
    return cfg.l_min


# ----------------------------------------------------------------------
# calibration
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class CalibrationBudget:
    """Sampling sizes for calibrate; the defaults match the emitted report.

    region_grid is the per-axis node count: each sample region carries a
    region_grid x region_grid lattice, logarithmically spaced along the
    abscissa.
    """

    region_grid: int = 200
    koebe_samples: int = 1000
    ratio_samples: int = 24
    seed: int = 0


def fact_bound_log(x: float, p: float) -> float:
    """log of the off-band decay majorant, -(1/2) exp((1/2) (log x)^(1+p)).

    Valid for points of the kappa in [5/6, 7/6] boundary band at
    abscissa x; used both to validate the approximation cutoff D_est and
    to truncate integration contours.
    """
    return -0.5 * math.exp(0.5 * math.log(x) ** (1.0 + p))


def _band_inequality_holds(D: float, p: float) -> bool:
    """Sampled check of the band decay bound at abscissas >= D."""
    for fac in (1.0, 1.1, 1.3, 1.6, 2.0, 3.0, 5.0, 10.0, 40.0, 200.0):
        x = D * fac
        cap = fact_bound_log(x, p)
        for kappa in (5.0 / 6.0, 0.9, 1.0, 1.1, 7.0 / 6.0):
            region = TractRegion(x0=3.0, kappa=1.0, p=p)
            y = kappa * region.half_width(x)
            v = log_abs_f(complex(x, y), ModelParams(p=p))
            if not v <= cap:
                return False
    return True


def calibrate_cutoff(p: float) -> float:
    """Smallest scan abscissa D > 3 where the band decay bound holds."""
    x = 3.25
    while x < 64.0:
        if _band_inequality_holds(x, p):
            return x
        x += 0.25
    raise DomainError(f"no valid approximation cutoff found for p = {p}")


def _representable_abscissa(p: float) -> float:
    """Largest x with log|f(x)| below the overflow threshold."""
    # log|f(x)| = exp((log x)^(1+p)) <= 700
    return math.exp(math.log(700.0) ** (1.0 / (1.0 + p)))


def in_tract_sample_grid(consts_D: float, p: float, n: int) -> list[complex]:
    """Deterministic n x n grid inside G(D, 1) where |f| stays representable.

    Abscissas are logarithmically spaced; ordinates sweep fractions of
    the local opening.
    """
    region = TractRegion(x0=consts_D, kappa=1.0, p=p)
    x_hi = 0.98 * _representable_abscissa(p)
    nx = max(4, n)
    ny = max(3, n)
    pts = []
    for x in np.geomspace(consts_D * 1.05, x_hi, nx):
        for frac in np.linspace(-0.9, 0.9, ny):
            pts.append(complex(x, frac * region.half_width(x)))
    return pts


def off_tract_sample_grid(consts_D: float, p: float, n: int) -> list[complex]:
    """Deterministic grids outside G(D, 1): left strip, flanks, far plane.

    Each sub-region carries an n x n lattice (the far ring a fixed small
    set), logarithmically spaced along the abscissa where applicable.
    """
    region = TractRegion(x0=consts_D, kappa=1.0, p=p)
    pts: list[complex] = []
    nx = max(4, n)
    ny = max(3, n)
    # strip left of the cutoff, including the real axis
    for x in np.linspace(1.5, consts_D - 0.05, nx):
        for frac in np.linspace(-1.0, 1.0, ny):
            w = region.half_width(max(x, 1.8))
            pts.append(complex(x, 1.4 * frac * w))
    # flanks beyond the opening for abscissas past the cutoff
    for x in np.geomspace(consts_D, 30.0 * consts_D, nx):
        for frac in np.linspace(1.35, 3.0, max(3, ny // 2)):
            w = region.half_width(x)
            pts.append(complex(x, frac * w))
            pts.append(complex(x, -frac * w))
    # far plane
    for rad in (4.0 * consts_D, 40.0 * consts_D, 400.0 * consts_D):
        for ang in np.linspace(0.35 * math.pi, 1.65 * math.pi, 9):
            pts.append(rad * complex(math.cos(ang), math.sin(ang)))
    return pts


def koebe_distortion_sample(
    r0: float, p: float, n: int, rng: np.random.Generator
) -> tuple[float, float]:
    """(max, min) of |phi'(xi + iy)| / |phi'(xi)| over a random sample."""
    params = ModelParams(p=p)
    lo, hi = 1.0, 1.0
    logr0 = math.log(r0)
    for _ in range(n):
        xi = complex(
            rng.uniform(logr0, logr0 + 30.0), rng.uniform(-1e3, 1e3)
        )
        base = abs(phi_deriv(xi, params))
        y = rng.uniform(0.0, 2.0 * math.pi)
        ratio = abs(phi_deriv(xi + 1j * y, params)) / base
        hi = max(hi, ratio)
        lo = min(lo, ratio)
    return hi, lo


def calibrate(p: float, budget: CalibrationBudget = CalibrationBudget()) -> CalibratedConstants:
    """Numerically calibrate the approximation and comparison constants.

    D_est is the first scan abscissa where the band decay bound holds on
    a sampled boundary band; C_est is twice the largest of |E - f| and
    |E' - f'| over an in-region grid (where |f| is representable) and of
    |E| over an off-region grid; r0_est = 8 C_est; K_est and Kcal come
    from sampled distortion and per-preimage operator-term ratios.  The
    sample grids are recorded in the returned ``doc`` mapping.
    """
    from . import cauchy  # deferred: cauchy depends on this module's types

    params = ModelParams(p=p)
    D = calibrate_cutoff(p)

    n = budget.region_grid
    quad_tol = 1e-9

    max_in = 0.0
    pts_in = in_tract_sample_grid(D, p, n)
    for z in pts_in:
        lf, corr = cauchy.eval_entire_in_tract(z, params, D, tol=quad_tol)
        max_in = max(max_in, abs(corr))
        dcorr = cauchy.eval_entire_deriv_correction(z, params, D, tol=quad_tol)
        max_in = max(max_in, abs(dcorr))

    max_out = 0.0
    pts_out = off_tract_sample_grid(D, p, n)
    for z in pts_out:
        ev = cauchy.eval_entire(z, params, D, tol=quad_tol)
        max_out = max(max_out, abs(ev))

    C = 2.0 * max(max_in, max_out, 1.0)
    r0 = 8.0 * C
    if not r0 > 4.0 * C:
        r0 = 4.0 * C * 1.01

    rng = np.random.default_rng(budget.seed)
    hi, lo = koebe_distortion_sample(r0, p, budget.koebe_samples, rng)
    K_est = 1.02 * max(hi, 1.0 / lo)

    Kcal = _calibrate_operator_ratio(params, C, D, r0, budget, rng)

    doc = {
        "region_grid_axis": n,
        "in_region_points": len(pts_in),
        "off_region_points": len(pts_out),
        "max_in_region_deviation": max_in,
        "max_off_region_modulus": max_out,
        "koebe_samples": budget.koebe_samples,
        "ratio_samples": budget.ratio_samples,
        "seed": budget.seed,
        "quad_tol": quad_tol,
        "safety_factor": 2.0,
    }
    return CalibratedConstants(
        p=p, C_est=C, D_est=D, r0_est=r0, K_est=K_est, Kcal=Kcal, doc=doc
    )


def _calibrate_operator_ratio(
    params: ModelParams,
    C: float,
    D: float,
    r0: float,
    budget: CalibrationBudget,
    rng: np.random.Generator,
) -> float:
    """Estimate the two-sided operator comparison constant from samples."""
    from . import transferop

    consts = CalibratedConstants(
        p=params.p, C_est=C, D_est=D, r0_est=r0, K_est=2.0, Kcal=1.5
    )
    cfg = RadiusConfig.from_constants(consts)
    worst = 1.0
    for _ in range(budget.ratio_samples):
        u = rng.uniform(cfg.log_r + 0.05, cfg.log_r + 6.0)
        theta = rng.uniform(-math.pi, math.pi)
        t = rng.uniform(1.1, 2.0)
        w = math.exp(u) * complex(math.cos(theta), math.sin(theta))
        ratios = transferop.entire_term_ratios(
            w, t, params, consts, cfg, max_terms=6
        )
        for rho in ratios:
            worst = max(worst, max(rho, 1.0 / rho) ** (1.0 / t))
    return min(2.0, 1.05 * worst)


# ----------------------------------------------------------------------
# constants cache I/O
# ----------------------------------------------------------------------

_CONST_FIELDS = ("p", "C_est", "D_est", "r0_est", "K_est", "Kcal")


def save_constants(consts: CalibratedConstants, path) -> None:
    """Write the key = value constants report (doc entries included)."""
    lines = ["# tractdim calibrated constants"]
    for name in _CONST_FIELDS:
        lines.append(f"{name} = {getattr(consts, name)!r}")
    for key in sorted(consts.doc):
        lines.append(f"doc.{key} = {consts.doc[key]!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


_BUNDLED = {0.5: "constants_p05.txt", 1.0: "constants_p10.txt", 2.0: "constants_p20.txt"}


def bundled_constants(p: float) -> CalibratedConstants:
    """Constants shipped with the package for the standard exponents."""
    from importlib import resources

    name = _BUNDLED.get(float(p))
    if name is None:
        raise DomainError(
            f"no bundled constants for p = {p}; run the calibration first "
            f"(bundled exponents: {sorted(_BUNDLED)})"
        )
    path = resources.files("tractdim").joinpath("data", name)
    with resources.as_file(path) as fp:
        return load_constants(fp)


def load_constants(path) -> CalibratedConstants:
    """Read a constants report produced by save_constants."""
    values: dict[str, float] = {}
    doc: dict[str, object] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            if key.startswith("doc."):
                try:
                    doc[key[4:]] = float(val)
                except ValueError:
                    doc[key[4:]] = val.strip("'\"")
            else:
                values[key] = float(val)
    missing = [k for k in _CONST_FIELDS if k not in values]
    if missing:
        raise DomainError(f"constants file {path} is missing fields: {missing}")
    return CalibratedConstants(doc=doc, **{k: values[k] for k in _CONST_FIELDS})
