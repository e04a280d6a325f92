"""Self-check suite: runs the library's cross-validation invariants.

Each check recomputes one of the structural properties the package is
built on (coordinate identities, derivative closed forms, distortion
and comparison constants, transfer decay and divergence) on seeded
samples and reports pass/fail with the measured extremes.  The output
is deliberately timing-free so repeated runs are byte-identical.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from .cauchy import eval_entire_deriv_correction, eval_entire_in_tract, model_deriv
from .corefn import ModelParams, log_phi_l_deriv, phi, phi_deriv, tau_inner
from .tractgeom import CalibratedConstants, RadiusConfig
from .transferop import model_partial_sum, transfer_entire, transfer_model


def check_round_trip(consts: CalibratedConstants, cfg: RadiusConfig, seed: int,
                     samples: int = 1000) -> dict:
    """Half-plane / tract coordinate identity and reality on the axis."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    p = consts.p
    for l in (0.0, cfg.l_min + 1.0):
        params = ModelParams(p=p, l=l)
        for _ in range(samples // 2):
            xi = complex(rng.uniform(cfg.log_r, cfg.log_r + 20.0), rng.uniform(-1e3, 1e3))
            back = cmath.exp(tau_inner(phi(xi, params), params))
            worst = max(worst, abs(back - xi) / abs(xi))
    worst_imag = 0.0
    params = ModelParams(p=p)
    for x in np.linspace(math.e + 0.3, math.e + 25.0, 40):
        worst_imag = max(worst_imag, abs(tau_inner(x, params).imag))
    passed = worst <= 1e-10 and worst_imag < 1e-12
    return {"name": "coordinate-round-trip", "passed": bool(passed),
            "max_rel_error": worst, "max_axis_imag": worst_imag}


def check_derivative(consts: CalibratedConstants, cfg: RadiusConfig, seed: int,
                     samples: int = 100) -> dict:
    """Closed-form weight derivative against central finite differences."""
    rng = np.random.default_rng(seed + 1)
    params = ModelParams(p=consts.p)
    worst = 0.0
    for _ in range(samples):
        xi = complex(rng.uniform(2.0, 8.0), rng.uniform(-6.0, 6.0))
        z = phi(xi, params)
        h = 1e-6 * abs(z)
        taup = (cmath.exp(tau_inner(z + h, params)) - cmath.exp(tau_inner(z - h, params))) / (2 * h)
        want = 1.0 / (abs(taup) * abs(z))
        got = abs(log_phi_l_deriv(xi, params))
        worst = max(worst, abs(got - want) / want)
    return {"name": "cylinder-derivative-fd", "passed": bool(worst <= 1e-6),
            "max_rel_error": worst}


def check_koebe(consts: CalibratedConstants, cfg: RadiusConfig, seed: int,
                samples: int = 400) -> dict:
    """Distortion ratios of the tract chart stay within the calibrated K."""
    rng = np.random.default_rng(seed + 2)
    params = ModelParams(p=consts.p)
    logr0 = math.log(consts.r0_est)
    hi, lo = 1.0, 1.0
    for _ in range(samples):
        xi = complex(rng.uniform(logr0, logr0 + 25.0), rng.uniform(-1e3, 1e3))
        y = rng.uniform(0.0, 2.0 * math.pi)
        ratio = abs(phi_deriv(xi + 1j * y, params)) / abs(phi_deriv(xi, params))
        hi, lo = max(hi, ratio), min(lo, ratio)
    passed = hi <= consts.K_est and 1.0 / lo <= consts.K_est
    return {"name": "koebe-distortion", "passed": bool(passed),
            "max_ratio": hi, "min_ratio": lo, "K_est": consts.K_est}


def check_factor_two(consts: CalibratedConstants, cfg: RadiusConfig, seed: int,
                     samples: int = 30) -> dict:
    """Two-sided value/derivative comparison on representable tract points."""
    rng = np.random.default_rng(seed + 3)
    params = ModelParams(p=consts.p)
    region = consts.approx_region()
    x_hi = 0.9 * math.exp(math.log(650.0) ** (1.0 / (1.0 + consts.p)))
    lo_v, hi_v, lo_d, hi_d = 2.0, 0.0, 2.0, 0.0
    n = 0
    while n < samples:
        x = rng.uniform(consts.D_est + 0.3, x_hi)
        z = complex(x, rng.uniform(-0.5, 0.5) * region.half_width(x))
        lf, corr = eval_entire_in_tract(z, params, consts, tol=1e-9)
        if lf.log_mod <= cfg.log_r or lf.log_mod > 600.0:
            continue
        f = lf.to_complex()
        rv = abs(f + corr) / abs(f)
        fd = model_deriv(z, params)
        rd = abs(fd + eval_entire_deriv_correction(z, params, consts)) / abs(fd)
        lo_v, hi_v = min(lo_v, rv), max(hi_v, rv)
        lo_d, hi_d = min(lo_d, rd), max(hi_d, rd)
        n += 1
    passed = 0.5 <= lo_v and hi_v <= 2.0 and 0.5 <= lo_d and hi_d <= 2.0
    return {"name": "factor-two-bounds", "passed": bool(passed),
            "value_ratio_range": [lo_v, hi_v], "deriv_ratio_range": [lo_d, hi_d]}


def check_operator_ratio(consts: CalibratedConstants, cfg: RadiusConfig, seed: int,
                         samples: int = 10) -> dict:
    """Entire/model transfer comparison within the calibrated band."""
    rng = np.random.default_rng(seed + 4)
    params = ModelParams(p=consts.p, l=cfg.l_min + 1.0)
    lo, hi = math.inf, 0.0
    for _ in range(samples):
        t = rng.uniform(1.2, 2.0)
        u = rng.uniform(cfg.log_r + 0.05, cfg.log_r + 5.0)
        w = math.exp(u) * cmath.exp(1j * rng.uniform(-math.pi, math.pi))
        ratio = (
            transfer_entire(w, t, params, consts, cfg, refine_budget=6).value
            / transfer_model(w, t, params, cfg).value
        )
        band = consts.Kcal**t
        lo = min(lo, ratio * band)  # scaled so the pass test is uniform
        hi = max(hi, ratio / band)
        if not (1.0 / band <= ratio <= band):
            return {"name": "operator-comparison", "passed": False,
                    "violating_ratio": ratio, "t": t, "Kcal": consts.Kcal}
    return {"name": "operator-comparison", "passed": True, "Kcal": consts.Kcal,
            "min_scaled": lo, "max_scaled": hi}


def check_divergence_at_one(consts: CalibratedConstants, cfg: RadiusConfig, seed: int) -> dict:
    """Partial sums are non-Cauchy at t = 1 and settle at t = 1.2."""
    params = ModelParams(p=consts.p)
    w = cfg.r * 3.0
    gaps = []
    for K in (100, 1000):
        gaps.append(
            model_partial_sum(w, 1.0, params, 10 * K) - model_partial_sum(w, 1.0, params, K)
        )
    tv = transfer_model(w, 1.2, params, cfg)
    settle = abs(
        model_partial_sum(w, 1.2, params, 2 * tv.K) - model_partial_sum(w, 1.2, params, tv.K)
    )
    passed = all(g >= 0.05 for g in gaps) and settle <= (tv.value - model_partial_sum(
        w, 1.2, params, tv.K)) + tv.tail_bound + 1e-12
    return {"name": "divergence-boundary", "passed": bool(passed),
            "gaps_at_t1": gaps, "stabilization_gap_t12": settle}


def check_decay(consts: CalibratedConstants, cfg: RadiusConfig, seed: int,
                samples: int = 60) -> dict:
    """value * (log|w|)^((t-1)/2) bounded along |w| from r to 1e6."""
    params = ModelParams(p=consts.p, l=cfg.l_min + 1.0)
    t = 1.5
    prods = []
    for u in np.linspace(cfg.log_r + 0.05, math.log(1e6), samples):
        tv = transfer_model(math.exp(u), t, params, cfg)
        prods.append(float(tv.value * u ** ((t - 1.0) / 2.0)))
    spread = max(prods) / min(prods)
    return {"name": "transfer-decay", "passed": bool(spread <= 50.0),
            "product_spread": spread}


ALL_CHECKS = (
    check_round_trip,
    check_derivative,
    check_koebe,
    check_factor_two,
    check_operator_ratio,
    check_divergence_at_one,
    check_decay,
)


def run_verify(consts: CalibratedConstants, cfg: RadiusConfig, seed: int = 0) -> dict:
    """Run every check; returns a JSON-ready report."""
    results = [chk(consts, cfg, seed) for chk in ALL_CHECKS]
    return {
        "p": consts.p,
        "r": cfg.r,
        "seed": seed,
        "checks": results,
        "all_pass": bool(all(r["passed"] for r in results)),
    }
