"""Escape-time classification, rendering, and box-counting dimension.

For disjoint-type translates the Julia set is the set of points whose
entire forward orbit keeps modulus above the working radius r.  Orbits
are iterated in logarithmic coordinates; a point is

    Escaped(n)    when its modulus drops to <= r at step n,
    Undecided(n)  when the inner exponent overflows at step n (the orbit
                  is racing to infinity and the thin tract can no longer
                  be resolved in float64),
    InJulia(n_max) when it survives n_max steps.

Undecided orbits are escaping to infinity inside the tract, which for
disjoint type belongs to the Julia set, but overflow prevents verifying
that they stay inside it, so box counts are reported twice: the upper
variant counts InJulia together with Undecided, the lower variant only
InJulia.  The dynamics here are those of the model map; the entire
function differs from it by two-sided factor bounds on the tract.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .corefn import DomainError, ModelParams
from .pressure import DimEstimate
from .tractgeom import RadiusConfig

IN_JULIA = 0
ESCAPED = 1
UNDECIDED = 2
ESCAPED_FLAGGED = 3

_UNDECIDED_SHADE = 160


@dataclass(frozen=True)
class Classification:
    """Orbit fate: tag in {in-julia, escaped, undecided} plus the step."""

    tag: str
    step: int
    flagged: bool = False


@dataclass(frozen=True)
class BoxCountReport:
    scales: list
    counts_upper: list
    counts_lower: list
    fitted_dim: DimEstimate
    dim_upper: DimEstimate
    dim_lower: DimEstimate
    undecided_fraction: float
    fit_residual: float


def classify(z0: complex, params: ModelParams, cfg: RadiusConfig, n_max: int) -> Classification:
    """Escape-time classification of a single starting point.

    Delegates to the vectorized engine so scalar and grid classification
    agree bit for bit (orbit boundaries are chaotic, so even one-ulp
    library differences would flip outcomes).
    """
    status, steps = classify_grid(np.array([complex(z0)]), params, cfg, n_max)
    tag = {IN_JULIA: "in-julia", ESCAPED: "escaped", UNDECIDED: "undecided",
           ESCAPED_FLAGGED: "escaped"}[int(status[0])]
    return Classification(tag=tag, step=int(steps[0]),
                          flagged=int(status[0]) == ESCAPED_FLAGGED)


def _wedge_test(zeta: np.ndarray, p: float, l: float, x0: float):
    """(inside, unresolvable) for the tract wedge at z = exp(zeta) - l.

    The model formula also produces large values on side branches where
    the inner exponent's argument is near a nonzero multiple of 2 pi;
    those lie outside the wedge containing the tract, where the entire
    function is small, so an orbit entering them falls into the working
    disk at the following step and is marked escaped.  Once the angle of
    the orbit point carries an absolute rounding error comparable to the
    wedge opening (error ~ |zeta| * eps against width ~ pi/((1+p) a^p)),
    membership cannot be verified either way and the point is flagged
    unresolvable (classified Undecided by the caller).
    """
    inside = np.zeros(zeta.shape, dtype=bool)
    unresolvable = np.zeros(zeta.shape, dtype=bool)
    a = zeta.real
    moderate = a <= 700.0
    zm = np.exp(zeta[moderate]) - l
    x = zm.real
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        width = math.pi * x / ((1.0 + p) * np.log(np.maximum(x, 1.0 + 1e-9)) ** p)
        inside[moderate] = (x > x0) & (np.abs(zm.imag) < width)
    big = ~moderate
    if np.any(big):
        ab = a[big]
        with np.errstate(over="ignore"):
            half_angle = math.pi / ((1.0 + p) * ab**p)
        half_angle = np.where(np.isfinite(half_angle), half_angle, 0.0)
        err = np.abs(zeta[big]) * 4.4e-16
        im = np.abs(zeta.imag[big])
        inside_big = (im < half_angle - err) & (err <= 0.25 * half_angle)
        outside_big = im > half_angle + err
        inside[big] = inside_big
        unresolvable[big] = ~inside_big & ~outside_big
    return inside, unresolvable


def classify_grid(
    z0: np.ndarray, params: ModelParams, cfg: RadiusConfig, n_max: int
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized classification; returns (status, step) arrays.

    Status codes: 0 in-julia, 1 escaped, 2 undecided, 3 escaped after a
    branch-cut hit (flagged).  Escape is detected both by the modulus
    dropping to <= r and by the orbit leaving the tract wedge (where the
    approximated map is bounded, so the true next iterate re-enters the
    disk); overflow of the inner exponent yields Undecided.
    """
    z0 = np.asarray(z0, dtype=complex)
    p, l = params.p, params.l
    log_r = cfg.log_r
    x0 = cfg.region_cutoff()
    status = np.zeros(z0.shape, dtype=np.uint8)
    steps = np.zeros(z0.shape, dtype=np.int32)

    escaped0 = np.abs(z0) <= cfg.r
    status[escaped0] = ESCAPED
    active_flat = (~escaped0).reshape(-1).copy()
    zeta_flat = np.where(
        active_flat, np.log(np.where(z0 == 0, 1.0, z0)).reshape(-1), 0.0
    ).astype(complex)
    status_flat = status.reshape(-1)
    steps_flat = steps.reshape(-1)

    for n in range(1, n_max + 1):
        idx = np.flatnonzero(active_flat)
        if len(idx) == 0:
            break
        za = zeta_flat[idx]
        # points already outside the tract wedge escape on this step;
        # points whose angle no longer resolves the wedge are undecided
        in_wedge, unresolvable = _wedge_test(za, p, l, x0)
        za = za[in_wedge]
        if l == 0.0:
            m = za.copy()
        else:
            m = za + np.log(1.0 - l * np.exp(-za))
        on_cut = ((m.imag == 0.0) & (m.real <= 0.0)) | ~np.isfinite(m.real) | ~np.isfinite(m.imag)
        s = (1.0 + p) * np.log(np.where(on_cut, 1.0, m))
        big = s.real > 709.0
        cospart = np.cos(s.imag)
        # overflow of the inner exponent: huge positive -> undecided,
        # huge negative -> the map collapses to 1 and the orbit escapes
        over = big & (cospart > 0.0)
        collapse = big & ~over
        u = np.exp(np.where(big, 0.0, s))
        over |= (~big) & (u.real > 700.0)
        tau = np.exp(np.where(over | big, 0.0, u))
        new_zeta = np.where(
            collapse,
            0.0,
            tau.real + 1j * (np.remainder(tau.imag + math.pi, 2.0 * math.pi) - math.pi),
        )
        esc = new_zeta.real <= log_r

        fate = np.full(len(idx), ESCAPED, dtype=np.uint8)  # wedge exits
        fate[unresolvable] = UNDECIDED
        done = np.ones(len(idx), dtype=bool)
        widx = np.flatnonzero(in_wedge)
        fate_w = np.zeros(len(widx), dtype=np.uint8)
        done_w = esc | over | on_cut
        fate_w[esc] = ESCAPED
        fate_w[over] = UNDECIDED
        fate_w[on_cut] = ESCAPED_FLAGGED
        fate[widx] = fate_w
        done[widx] = done_w

        steps_flat[idx[done]] = n
        status_flat[idx[done]] = fate[done]
        zeta_flat[idx[widx]] = new_zeta
        active_flat[idx[done]] = False

    steps_flat[active_flat] = n_max
    return status_flat.reshape(z0.shape), steps_flat.reshape(z0.shape)


def default_window(params: ModelParams, cfg: RadiusConfig) -> tuple[float, float, float, float]:
    """A window over the near part of the tract where structure resolves.

    Spans the abscissas whose image modulus runs from just above the
    working radius to a couple of powers beyond it, which is where the
    first preimage generations are thick enough for box counting at a
    few thousand pixels.
    """
    p, l = params.p, params.l
    ur = cfg.log_r

    def level_x(level):
        return math.exp(math.log(level) ** (1.0 / (1.0 + p)))

    x_lo = level_x(1.05 * ur)
    x_hi = level_x(2.4 * ur)
    y_half = 0.5 * (x_hi - x_lo)
    return (l + x_lo, l + x_hi, -y_half, y_half)


def render(
    window: tuple[float, float, float, float],
    resolution: int | tuple[int, int],
    params: ModelParams,
    cfg: RadiusConfig,
    n_max: int,
    supersample: bool = False,
) -> np.ndarray:
    """Grayscale escape-time image (uint8, row 0 at the lowest y).

    Black = InJulia, a fixed mid shade = Undecided, and Escaped pixels
    brighten with earlier escape.  Deterministic pixel-center sampling;
    optional 2x2 supersampling averages four sub-pixel shades.
    """
    status, steps = _window_classification(window, resolution, params, cfg, n_max,
                                           factor=2 if supersample else 1)
    shades = _shade(status, steps, n_max)
    if supersample:
        ny, nx = shades.shape
        shades = shades.reshape(ny // 2, 2, nx // 2, 2).mean(axis=(1, 3))
    return np.round(shades).astype(np.uint8)


def _window_classification(window, resolution, params, cfg, n_max, factor=1):
    x0, x1, y0, y1 = window
    if not (x1 > x0 and y1 > y0):
        raise DomainError("window must have positive extent")
    if isinstance(resolution, int):
        nx = ny = resolution
    else:
        nx, ny = resolution
    nx *= factor
    ny *= factor
    xs = x0 + (x1 - x0) * (np.arange(nx) + 0.5) / nx
    ys = y0 + (y1 - y0) * (np.arange(ny) + 0.5) / ny
    zz = xs[None, :] + 1j * ys[:, None]
    return classify_grid(zz, params, cfg, n_max)


def _shade(status: np.ndarray, steps: np.ndarray, n_max: int) -> np.ndarray:
    shades = np.zeros(status.shape, dtype=float)
    esc = (status == ESCAPED) | (status == ESCAPED_FLAGGED)
    shades[esc] = np.clip(255.0 - steps[esc] * (191.0 / max(n_max, 1)), 64.0, 255.0)
    shades[status == UNDECIDED] = _UNDECIDED_SHADE
    return shades


def write_pgm(path, image: np.ndarray) -> None:
    """Binary portable graymap (P5) writer."""
    img = np.asarray(image, dtype=np.uint8)
    ny, nx = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{nx} {ny}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def boxcount_from_mask(mask: np.ndarray, scales) -> list[int]:
    """Occupied-box counts of a boolean mask at the given pixel scales."""
    mask = np.asarray(mask, dtype=bool)
    counts = []
    for s in scales:
        s = int(s)
        if s < 1:
            raise DomainError("box scales must be positive integers")
        ny = (mask.shape[0] // s) * s
        nx = (mask.shape[1] // s) * s
        if ny == 0 or nx == 0:
            counts.append(0)
            continue
        blocks = mask[:ny, :nx].reshape(ny // s, s, nx // s, s)
        counts.append(int(blocks.any(axis=(1, 3)).sum()))
    return counts


def fit_box_dimension(scales, counts) -> tuple[DimEstimate, float]:
    """Least-squares slope of log N against log(1/delta), with residual."""
    scales = np.asarray(scales, dtype=float)
    counts = np.asarray(counts, dtype=float)
    if np.any(counts <= 0):
        raise DomainError("degenerate occupancy: some scale has an empty box count")
    x = np.log(1.0 / scales)
    y = np.log(counts)
    n = len(x)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss = float(np.sum(resid**2))
    sx = float(np.sum((x - x.mean()) ** 2))
    se = math.sqrt(ss / max(n - 2, 1) / sx) if sx > 0 else 0.0
    dim = float(slope)
    est = DimEstimate(
        value=dim, bracket=(dim - 2.0 * se, dim + 2.0 * se), method="boxcount",
        residual=math.sqrt(ss / n),
    )
    return est, math.sqrt(ss / n)


_DEGENERATE = DimEstimate(value=0.0, bracket=(0.0, 0.0), method="boxcount-degenerate",
                          residual=0.0)


def box_dimension(
    window: tuple[float, float, float, float],
    params: ModelParams,
    cfg: RadiusConfig,
    n_max: int,
    scales=(4, 8, 16, 32, 64),
    resolution: int = 2048,
) -> BoxCountReport:
    """Box-counting dimension estimate of the escape-classified window.

    Requires at least 4 scales spanning two dyadic octaves.  The
    headline estimate is the upper variant (InJulia together with
    Undecided); the lower variant can be degenerate when overflow
    classifies every deep orbit, and is then reported as such rather
    than raising.
    """
    scales = [int(s) for s in scales]
    if len(scales) < 4 or max(scales) < 4 * min(scales):
        raise DomainError("need >= 4 box scales spanning >= 2 dyadic octaves")
    status, _ = _window_classification(window, resolution, params, cfg, n_max)
    upper_mask = (status == IN_JULIA) | (status == UNDECIDED)
    lower_mask = status == IN_JULIA
    counts_upper = boxcount_from_mask(upper_mask, scales)
    counts_lower = boxcount_from_mask(lower_mask, scales)
    if not any(counts_upper):
        raise DomainError("degenerate occupancy: window contains no candidate points")
    dim_upper, resid = fit_box_dimension(scales, counts_upper)
    try:
        dim_lower, _ = fit_box_dimension(scales, counts_lower)
    except DomainError:
        dim_lower = _DEGENERATE
    undecided_fraction = float(np.mean(status == UNDECIDED))
    return BoxCountReport(
        scales=scales,
        counts_upper=counts_upper,
        counts_lower=counts_lower,
        fitted_dim=dim_upper,
        dim_upper=dim_upper,
        dim_lower=dim_lower,
        undecided_fraction=undecided_fraction,
        fit_residual=resid,
    )
