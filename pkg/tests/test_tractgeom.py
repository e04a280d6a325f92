import math

import numpy as np
import pytest

from tractdim.corefn import DomainError, ModelParams, log_abs_f, phi, phi_deriv
from tractdim.tractgeom import (
    CalibratedConstants,
    CalibrationBudget,
    RadiusConfig,
    TractRegion,
    boundary_point,
    boundary_s_of_x,
    calibrate_cutoff,
    fact_bound_log,
    in_region,
    in_tract,
    load_constants,
    min_l_for_disjoint,
    save_constants,
)

from conftest import bundled_constants

E = math.e


class TestInRegion:
    def test_real_axis_point(self):
        assert in_region(10.0, TractRegion(3.0, 1.0, 1.0))

    def test_left_of_cutoff(self):
        assert not in_region(2.0, TractRegion(3.0, 1.0, 1.0))

    def test_above_opening(self):
        # width at x = 10 is pi*10/(2 ln 10) ~ 6.82 < 20
        assert not in_region(complex(10.0, 20.0), TractRegion(3.0, 1.0, 1.0))

    def test_nesting_in_kappa(self):
        narrow = TractRegion(3.0, 0.6, 1.0)
        wide = TractRegion(3.0, 1.3, 1.0)
        rng = np.random.default_rng(0)
        for _ in range(200):
            z = complex(rng.uniform(1.0, 40.0), rng.uniform(-20.0, 20.0))
            if in_region(z, narrow):
                assert in_region(z, wide)


class TestBoundaryPoint:
    def test_midpoint_convention(self):
        region = TractRegion(3.0, 1.0, 1.0)
        assert boundary_point(0.0, region) == complex(3.0, 0.0)

    def test_width_equality_beyond_segment(self):
        region = TractRegion(3.0, 1.0, 1.0)
        h0 = region.half_width(3.0)
        for s in (h0 + 0.5, h0 + 3.0, h0 + 40.0):
            z = boundary_point(s, region)
            assert z.imag == pytest.approx(region.half_width(z.real), rel=1e-12)

    def test_conjugation_symmetry(self):
        region = TractRegion(4.0, 5.0 / 6.0, 0.5)
        for s in (0.3, 2.0, 9.0, 55.0):
            assert boundary_point(-s, region) == boundary_point(s, region).conjugate()

    def test_lipschitz_sampled(self):
        region = TractRegion(3.0, 1.0, 2.0)
        ss = np.linspace(-60.0, 60.0, 4001)
        pts = np.array([boundary_point(s, region) for s in ss])
        steps = np.abs(np.diff(pts)) / np.diff(ss)
        assert steps.max() < 5.0

    def test_s_of_x_inverts_abscissa(self):
        region = TractRegion(3.0, 1.0, 1.0)
        s = boundary_s_of_x(17.0, region)
        assert boundary_point(s, region).real == pytest.approx(17.0)


class TestInTract:
    def test_base_point_outside(self):
        cfg = RadiusConfig(r=100.0, l_min=0.0)
        for l in (0.0, 50.0):
            params = ModelParams(p=1.0, l=l)
            assert not in_tract(E + l, params, cfg)  # |f| = e^e ~ 15.15 < 100

    def test_e_squared_inside(self):
        cfg = RadiusConfig(r=100.0, l_min=0.0)
        for l in (0.0, 50.0):
            params = ModelParams(p=1.0, l=l)
            assert in_tract(E**2 + l, params, cfg)  # log|f| = e^4 ~ 54.6

    def test_overflow_counts_inside(self):
        cfg = RadiusConfig(r=100.0, l_min=0.0)
        assert in_tract(1e12, ModelParams(p=1.0), cfg)

    def test_branch_cut_is_outside(self):
        cfg = RadiusConfig(r=100.0, l_min=0.0)
        assert not in_tract(-5.0, ModelParams(p=1.0), cfg)

    def test_tract_contained_in_wedge(self):
        # every sampled tract point lies in the approximation wedge + l
        consts = bundled_constants(1.0)
        cfg = RadiusConfig.from_constants(consts)
        l = cfg.l_min + 1.0
        params = ModelParams(p=1.0, l=l)
        region = consts.approx_region()
        rng = np.random.default_rng(1)
        found = 0
        while found < 300:
            z = complex(rng.uniform(l + 1.0, l + 14.0), rng.uniform(-8.0, 8.0))
            if in_tract(z, params, cfg):
                assert in_region(z - l, region)
                found += 1


class TestMinL:
    def test_formula(self):
        assert min_l_for_disjoint(RadiusConfig(r=100.0, l_min=80.0)) == 80.0
        consts = CalibratedConstants(p=1.0, C_est=20.0, D_est=20.0, r0_est=200.0,
                                     K_est=2.0, Kcal=1.5)
        assert RadiusConfig.from_constants(consts, r=100.0).l_min == 80.0

    def test_zero_when_radius_small(self):
        consts = CalibratedConstants(p=1.0, C_est=1.0, D_est=20.0, r0_est=9.0,
                                     K_est=2.0, Kcal=1.5)
        assert RadiusConfig.from_constants(consts, r=8.0).l_min == 0.0

    def test_disjoint_type_on_tract_boundary(self):
        # at l = l_min + 1 every boundary point phi_l(log r + iv) has
        # modulus exceeding r
        consts = bundled_constants(1.0)
        cfg = RadiusConfig.from_constants(consts)
        params = ModelParams(p=1.0, l=cfg.l_min + 1.0)
        rng = np.random.default_rng(2)
        for _ in range(400):
            v = rng.uniform(-1e3, 1e3)
            z = phi(complex(cfg.log_r, v), params)
            assert abs(z) > cfg.r


class TestCalibration:
    def test_cutoff_scan_validates_band_bound(self):
        for p in (0.5, 1.0, 2.0):
            D = calibrate_cutoff(p)
            assert D > 3.0
            # the bound holds on a fresh band sample at the cutoff
            region = TractRegion(x0=3.0, kappa=1.0, p=p)
            for fac in (1.0, 2.5, 20.0):
                x = D * fac
                for kap in (5.0 / 6.0, 1.0, 7.0 / 6.0):
                    z = complex(x, kap * region.half_width(x))
                    assert log_abs_f(z, ModelParams(p=p)) <= fact_bound_log(x, p)

    def test_small_budget_calibration_consistent(self):
        from tractdim.tractgeom import calibrate

        c = calibrate(1.0, CalibrationBudget(region_grid=25, koebe_samples=60,
                                             ratio_samples=2, seed=0))
        assert c.r0_est > 4.0 * c.C_est
        assert c.D_est > 3.0
        assert 1.0 <= c.Kcal <= 2.0
        assert c.K_est >= 1.0
        # sampled deviation is at most half of C_est by the x2 safety factor
        assert c.doc["max_in_region_deviation"] <= c.C_est / 2.0
        assert c.doc["max_off_region_modulus"] <= c.C_est / 2.0

    def test_koebe_distortion_with_bundled_constant(self):
        for p in (0.5, 1.0, 2.0):
            consts = bundled_constants(p)
            params = ModelParams(p=p)
            rng = np.random.default_rng(3)
            logr0 = math.log(consts.r0_est)
            for _ in range(300):
                xi = complex(rng.uniform(logr0, logr0 + 25.0), rng.uniform(-1e3, 1e3))
                y = rng.uniform(0.0, 2.0 * math.pi)
                ratio = abs(phi_deriv(xi + 1j * y, params)) / abs(phi_deriv(xi, params))
                assert 1.0 / consts.K_est <= ratio <= consts.K_est

    def test_roundtrip_save_load(self, tmp_path):
        consts = CalibratedConstants(p=1.0, C_est=50.0, D_est=3.25, r0_est=400.0,
                                     K_est=1.8, Kcal=1.4, doc={"seed": 0})
        path = tmp_path / "c.txt"
        save_constants(consts, path)
        back = load_constants(path)
        assert back.C_est == consts.C_est
        assert back.D_est == consts.D_est
        assert back.r0_est == consts.r0_est
        assert back.doc["seed"] == 0

    def test_invariants_enforced(self):
        with pytest.raises(DomainError):
            CalibratedConstants(p=1.0, C_est=50.0, D_est=3.25, r0_est=100.0,
                                K_est=1.8, Kcal=1.4)
        with pytest.raises(DomainError):
            CalibratedConstants(p=1.0, C_est=50.0, D_est=2.5, r0_est=400.0,
                                K_est=1.8, Kcal=1.4)
        consts = bundled_constants(1.0)
        with pytest.raises(DomainError):
            RadiusConfig.from_constants(consts, r=consts.r0_est / 4.0)
