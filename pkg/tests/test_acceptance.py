"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines and timings.  Criteria 8 and 9 iterate the full-resolution lattice
operator and dominate the runtime (a few minutes each); everything else
is seconds.
"""

import cmath
import math
import time

import numpy as np
import pytest

from tractdim.cauchy import (
    ContourSpec,
    eval_entire,
    eval_entire_deriv_correction,
    eval_entire_in_tract,
    model_deriv,
    quad_cauchy,
)
from tractdim.cli import main as cli_main
from tractdim.corefn import ModelParams, log_phi_l_deriv, phi, tau_inner
from tractdim.juliadim import box_dimension, boxcount_from_mask, default_window, fit_box_dimension
from tractdim.pressure import bowen_zero, pressure_estimate
from tractdim.tractgeom import RadiusConfig, TractRegion, in_region
from tractdim.transferop import (
    GridFunction,
    GridOperator,
    model_partial_sum,
    tail_bound,
    transfer_entire,
    transfer_model,
)

from conftest import bundled_constants

PRESSURE_NU, PRESSURE_NV, PRESSURE_SPAN = 512, 256, 40.0


def _ok(num, label, elapsed, budget):
    print(f"criterion {num:>2}: PASS  {label}  ({elapsed:.2f} s / budget {budget:.0f} s)")


@pytest.fixture(scope="module")
def p1():
    consts = bundled_constants(1.0)
    cfg = RadiusConfig.from_constants(consts)
    return consts, cfg


def test_criterion_01_coordinate_identities():
    t0 = time.time()
    rng = np.random.default_rng(101)
    for p in (0.5, 1.0, 2.0):
        consts = bundled_constants(p)
        cfg = RadiusConfig.from_constants(consts)
        params = ModelParams(p=p)
        for _ in range(1000):
            xi = complex(
                rng.uniform(cfg.log_r, cfg.log_r + 20.0), rng.uniform(-1e3, 1e3)
            )
            back = cmath.exp(tau_inner(phi(xi, params), params))
            assert abs(back - xi) <= 1e-10 * abs(xi)
        for x in np.linspace(math.e + 0.2, math.e + 30.0, 20):
            assert abs(tau_inner(x, params).imag) < 1e-12
            assert abs(log_phi_l_deriv(x + 1.5, params).imag) < 1e-12
    elapsed = time.time() - t0
    assert elapsed < 1.0
    _ok(1, "phi/tau round trip and reality, 1000 x 3 samples at 1e-10", elapsed, 1)


def test_criterion_02_derivative_correctness():
    t0 = time.time()
    rng = np.random.default_rng(102)
    params = ModelParams(p=1.0)
    for _ in range(100):
        xi = complex(rng.uniform(2.0, 8.0), rng.uniform(-6.0, 6.0))
        z = phi(xi, params)
        h = 1e-6 * abs(z)
        taup = (
            cmath.exp(tau_inner(z + h, params)) - cmath.exp(tau_inner(z - h, params))
        ) / (2 * h)
        want = 1.0 / (abs(taup) * abs(z))
        got = abs(log_phi_l_deriv(xi, params))
        assert abs(got - want) <= 1e-6 * want
    elapsed = time.time() - t0
    assert elapsed < 1.0
    _ok(2, "cylinder derivative vs finite differences, 100 samples at 1e-6", elapsed, 1)


def test_criterion_03_divergence_boundary(p1):
    t0 = time.time()
    consts, cfg = p1
    params = ModelParams(p=1.0)
    w = cfg.r * 3.0
    c_fixed = 0.05
    for K in (100, 1000, 10000):
        gap = model_partial_sum(w, 1.0, params, 10 * K) - model_partial_sum(
            w, 1.0, params, K
        )
        assert gap >= c_fixed
    tv = transfer_model(w, 1.2, params, cfg)
    coarse = model_partial_sum(w, 1.2, params, tv.K)
    finer = model_partial_sum(w, 1.2, params, 2 * tv.K)
    assert finer - coarse <= (tv.value - coarse) + tv.tail_bound
    assert tv.tail_bound < 1e-3 * tv.value
    elapsed = time.time() - t0
    assert elapsed < 30.0
    _ok(3, "non-Cauchy sums at t=1, stabilization within tail bound at t=1.2",
        elapsed, 30)


def test_criterion_04_decay_law(p1):
    t0 = time.time()
    consts, cfg = p1
    params = ModelParams(p=1.0, l=cfg.l_min + 1.0)
    prods = []
    for u in np.linspace(cfg.log_r + 0.02, math.log(1e6), 40):
        tv = transfer_model(math.exp(u), 1.5, params, cfg)
        prods.append(tv.value * u**0.25)
    assert max(prods) / min(prods) <= 50.0
    elapsed = time.time() - t0
    assert elapsed < 30.0
    _ok(4, f"decay product spread {max(prods) / min(prods):.2f} <= 50 over [r, 1e6]",
        elapsed, 30)


def test_criterion_05_epsilon_smallness(p1):
    t0 = time.time()
    consts, cfg = p1
    rng = np.random.default_rng(105)
    us = rng.uniform(cfg.log_r + 0.02, cfg.log_r + 10.0, 1000)
    thetas = rng.uniform(-math.pi, math.pi, 1000)
    ws = np.exp(us) * np.exp(1j * thetas)
    l_grid = sorted({cfg.l_min + 1.0, 1e2, 1e3, 1e4})
    sups = []
    for l in l_grid:
        params = ModelParams(p=1.0, l=l)
        sups.append(max(transfer_model(w, 1.5, params, cfg).value for w in ws))
    assert all(b <= a * (1.0 + 1e-9) for a, b in zip(sups, sups[1:]))
    assert sups[-1] < 0.1
    elapsed = time.time() - t0
    assert elapsed < 120.0
    _ok(5, f"sup transfer non-increasing over l grid, final {sups[-1]:.2e} < 0.1",
        elapsed, 120)


def test_criterion_06_approximation_bounds(p1):
    t0 = time.time()
    consts, cfg = p1
    params = ModelParams(p=1.0)
    region = consts.approx_region()
    rng = np.random.default_rng(106)
    x_hi = 0.95 * math.exp(math.log(650.0) ** 0.5)
    n_in = 0
    while n_in < 200:
        x = rng.uniform(consts.D_est + 0.1, x_hi)
        z = complex(x, rng.uniform(-0.85, 0.85) * region.half_width(x))
        if not in_region(z, region):
            continue
        lf, corr = eval_entire_in_tract(z, params, consts, tol=1e-8)
        dcorr = eval_entire_deriv_correction(z, params, consts, tol=1e-8)
        assert abs(corr) <= consts.C_est
        assert abs(dcorr) <= consts.C_est
        if cfg.log_r < lf.log_mod <= 600.0:
            f = lf.to_complex()
            assert 0.5 <= abs(f + corr) / abs(f) <= 2.0
            fd = model_deriv(z, params)
            assert 0.5 <= abs(fd + dcorr) / abs(fd) <= 2.0
        n_in += 1
    n_out = 0
    from tractdim.tractgeom import off_tract_sample_grid

    for z in off_tract_sample_grid(consts.D_est, 1.0, 15):
        if n_out >= 200:
            break
        assert abs(eval_entire(z, params, consts, tol=1e-8)) <= consts.C_est
        n_out += 1
    assert n_out >= 200
    elapsed = time.time() - t0
    assert elapsed < 300.0
    _ok(6, "approximation and factor-two bounds on 200+200 samples", elapsed, 300)


def test_criterion_07_operator_comparability(p1):
    t0 = time.time()
    consts, cfg = p1
    assert consts.Kcal <= 2.0
    rng = np.random.default_rng(107)
    for i in range(100):
        l = 0.0 if i % 2 == 0 else cfg.l_min + 1.0
        params = ModelParams(p=1.0, l=l)
        t = rng.uniform(1.1, 2.0)
        u = rng.uniform(cfg.log_r + 0.05, cfg.log_r + 6.0)
        w = math.exp(u) * cmath.exp(1j * rng.uniform(-math.pi, math.pi))
        ratio = (
            transfer_entire(w, t, params, consts, cfg, refine_budget=6).value
            / transfer_model(w, t, params, cfg).value
        )
        assert consts.Kcal**-t <= ratio <= consts.Kcal**t
    elapsed = time.time() - t0
    assert elapsed < 600.0
    _ok(7, f"entire/model ratios within Kcal = {consts.Kcal:.3f} band, 100 pairs",
        elapsed, 600)


@pytest.fixture(scope="module")
def pressure_operator(p1):
    consts, cfg = p1
    params = ModelParams(p=1.0, l=cfg.l_min + 1.0)
    probe = GridFunction.ones(cfg, nu=PRESSURE_NU, nv=PRESSURE_NV, span=PRESSURE_SPAN)
    return params, GridOperator(params, cfg, probe)


def test_criterion_08_pressure_behavior(p1, pressure_operator):
    t0 = time.time()
    consts, cfg = p1
    params, op = pressure_operator
    ests = [
        pressure_estimate(t, params, cfg, nu=PRESSURE_NU, nv=PRESSURE_NV,
                          span=PRESSURE_SPAN, operator=op)
        for t in (1.1, 1.3, 1.5, 2.0)
    ]
    for a, b in zip(ests, ests[1:]):
        assert a.value - b.value > a.spread + b.spread
    samples = []
    est = bowen_zero(params, cfg, tol_t=0.01, tol_P=0.05, nu=PRESSURE_NU,
                     nv=PRESSURE_NV, span=PRESSURE_SPAN, operator=op,
                     auto_widen=True, samples=samples)
    spread = max(s for (_, _, s) in samples)
    assert est.residual <= 0.05 + spread
    est2 = bowen_zero(params, cfg, tol_t=0.005, tol_P=0.05, nu=PRESSURE_NU,
                      nv=PRESSURE_NV, span=PRESSURE_SPAN, operator=op,
                      auto_widen=True)
    assert est.bracket[0] <= est2.bracket[0] and est2.bracket[1] <= est.bracket[1]
    elapsed = time.time() - t0
    assert elapsed < 600.0
    _ok(8, f"pressure strictly decreasing; Bowen zero {est.value:.4f} with "
           f"residual {est.residual:.3f}", elapsed, 600)


def test_criterion_09_hypdim_trend(p1):
    t0 = time.time()
    consts, cfg = p1
    base = cfg.l_min + 1.0
    l_grid = [base * 10.0 ** (2.0 * i / 5.0) for i in range(6)]
    estimates = []
    for l in l_grid:
        params = ModelParams(p=1.0, l=l)
        probe = GridFunction.ones(cfg, nu=PRESSURE_NU, nv=PRESSURE_NV,
                                  span=PRESSURE_SPAN)
        op = GridOperator(params, cfg, probe)
        est = bowen_zero(params, cfg, tol_t=0.01, tol_P=0.05, nu=PRESSURE_NU,
                         nv=PRESSURE_NV, span=PRESSURE_SPAN, operator=op,
                         auto_widen=True)
        estimates.append(est)
    vals = [e.value for e in estimates]
    widths = [e.bracket[1] - e.bracket[0] for e in estimates]
    for i in range(len(vals) - 1):
        assert vals[i + 1] <= vals[i] + widths[i] + widths[i + 1]
    assert all(v >= 0.95 for v in vals)
    assert vals[-1] <= 1.2
    elapsed = time.time() - t0
    assert elapsed < 3600.0
    _ok(9, "dimension trend " + " -> ".join(f"{v:.4f}" for v in vals), elapsed, 3600)


def test_criterion_10_boxcount_proxy(p1):
    t0 = time.time()
    scales = (4, 8, 16, 32, 64)
    line = np.zeros((2048, 2048), dtype=bool)
    line[1024, :] = True
    est_line, _ = fit_box_dimension(scales, boxcount_from_mask(line, scales))
    assert abs(est_line.value - 1.0) <= 0.05
    square = np.zeros((2048, 2048), dtype=bool)
    square[512:1536, 512:1536] = True
    est_sq, _ = fit_box_dimension(scales, boxcount_from_mask(square, scales))
    assert abs(est_sq.value - 2.0) <= 0.05

    consts, cfg = p1
    params = ModelParams(p=1.0, l=cfg.l_min + 1.0)
    window = default_window(params, cfg)
    rep = box_dimension(window, params, cfg, n_max=50, scales=scales, resolution=2048)
    assert 1.2 <= rep.fitted_dim.value <= 1.8
    assert rep.dim_lower.value <= rep.fitted_dim.value <= rep.dim_upper.value + 1e-12
    elapsed = time.time() - t0
    assert elapsed < 600.0
    _ok(10, f"synthetic masks 1.00/2.00; julia box dim {rep.fitted_dim.value:.3f} "
            f"in [1.2, 1.8]", elapsed, 600)


def test_criterion_11_quadrature_oracle():
    t0 = time.time()
    region = TractRegion(x0=3.0, kappa=1.0, p=1.0)
    contour = ContourSpec(region=region, truncation_x=3e4)

    def h(t):
        return (t + 1.0) ** -2

    for z in (6.0 + 0.5j, 9.0 - 2.0j):
        q = quad_cauchy(lambda s: h(s) / (s - z), contour, 1e-11)
        assert abs(q.value - h(z)) <= 1e-8
    for z in (-4.0 + 2.0j, -50.0 + 0j):
        q = quad_cauchy(lambda s: h(s) / (s - z), contour, 1e-11)
        assert abs(q.value) <= 1e-8
    z = 6.0 + 0.5j
    doubled = ContourSpec(region=region, truncation_x=6e4)
    q1 = quad_cauchy(lambda s: h(s) / (s - z), contour, 1e-11)
    q2 = quad_cauchy(lambda s: h(s) / (s - z), doubled, 1e-11)
    assert abs(q1.value - q2.value) <= 1e-8
    elapsed = time.time() - t0
    assert elapsed < 30.0
    _ok(11, "residue oracle to 1e-8 in/out of region, truncation stable", elapsed, 30)


def test_criterion_12_determinism(tmp_path):
    t0 = time.time()
    outs = []
    for w in (1, 4, 8):
        out = tmp_path / f"w{w}"
        assert cli_main(["verify", "--out", str(out), "--workers", str(w)]) == 0
        outs.append((out / "verify.json").read_bytes())
    assert outs[0] == outs[1] == outs[2]
    elapsed = time.time() - t0
    _ok(12, "verify outputs byte-identical for workers 1, 4, 8", elapsed, 60)
