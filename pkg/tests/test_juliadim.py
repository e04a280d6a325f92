import math

import numpy as np
import pytest

from tractdim.corefn import DomainError, ModelParams
from tractdim.juliadim import (
    ESCAPED,
    IN_JULIA,
    UNDECIDED,
    BoxCountReport,
    box_dimension,
    boxcount_from_mask,
    classify,
    classify_grid,
    default_window,
    fit_box_dimension,
    render,
    write_pgm,
)
from tractdim.tractgeom import RadiusConfig, in_tract

from conftest import bundled_constants


@pytest.fixture(scope="module")
def setup():
    consts = bundled_constants(1.0)
    cfg = RadiusConfig.from_constants(consts)
    params = ModelParams(p=1.0, l=cfg.l_min + 1.0)
    return consts, cfg, params


class TestClassify:
    def test_inside_disk_escapes_immediately(self, setup):
        _, cfg, params = setup
        c = classify(1.0 + 0j, params, cfg, 50)
        assert c.tag == "escaped" and c.step == 0

    def test_one_step_escape(self, setup):
        # a point of the wedge whose image has modulus <= r
        _, cfg, params = setup
        z = params.l + 3.6 + 0.0j  # log|f| = e^{(log 3.6)^2} ~ e^1.64 ~ 5.2 < log r
        assert abs(z) > cfg.r
        c = classify(z, params, cfg, 50)
        assert c.tag == "escaped" and c.step == 1

    def test_conjugation_invariance(self, setup):
        _, cfg, params = setup
        rng = np.random.default_rng(11)
        for _ in range(80):
            z = complex(params.l + rng.uniform(3.0, 8.0), rng.uniform(0.1, 4.0))
            a = classify(z, params, cfg, 40)
            b = classify(z.conjugate(), params, cfg, 40)
            assert (a.tag, a.step) == (b.tag, b.step)

    def test_escape_stable_under_more_iterations(self, setup):
        _, cfg, params = setup
        rng = np.random.default_rng(12)
        pts = [
            complex(params.l + rng.uniform(3.0, 7.0), rng.uniform(-3.0, 3.0))
            for _ in range(150)
        ]
        st20, sp20 = classify_grid(np.array(pts), params, cfg, 20)
        st60, sp60 = classify_grid(np.array(pts), params, cfg, 60)
        for a20, n20, a60, n60 in zip(st20, sp20, st60, sp60):
            if a20 == ESCAPED and n20 <= 20:
                assert a60 == ESCAPED and n60 == n20

    def test_grid_matches_scalar(self, setup):
        _, cfg, params = setup
        rng = np.random.default_rng(13)
        zs = np.array(
            [
                complex(params.l + rng.uniform(2.5, 9.0), rng.uniform(-5.0, 5.0))
                for _ in range(120)
            ]
        )
        st, sp = classify_grid(zs, params, cfg, 30)
        for i, z in enumerate(zs):
            c = classify(z, params, cfg, 30)
            assert c.step == sp[i]
            want = {"in-julia": IN_JULIA, "escaped": ESCAPED, "undecided": UNDECIDED}
            if not c.flagged:
                assert st[i] == want[c.tag]

    def test_survivors_start_in_tract(self, setup):
        # anything not escaped at step <= 1 passes the tract test at time 0
        _, cfg, params = setup
        win = default_window(params, cfg)
        xs = np.linspace(win[0], win[1], 256)
        ys = np.linspace(win[2], win[3], 256)
        zz = xs[None, :] + 1j * ys[:, None]
        st, sp = classify_grid(zz, params, cfg, 30)
        deep = (st != ESCAPED) | (sp > 1)
        checked = 0
        for (i, j) in zip(*np.nonzero(deep)):
            if checked >= 60:
                break
            assert in_tract(zz[i, j], params, cfg)
            checked += 1


class TestRender:
    def test_window_inside_disk_is_uniform(self, setup):
        _, cfg, params = setup
        img = render((0.0, 1.0, 0.0, 1.0), 32, params, cfg, 10)
        assert img.shape == (32, 32)
        assert np.all(img == img[0, 0])
        assert img[0, 0] == 255  # escape at step 0 renders brightest

    def test_vertical_flip_symmetry(self, setup):
        _, cfg, params = setup
        win = (params.l + 3.0, params.l + 6.0, -2.0, 2.0)
        img = render(win, 64, params, cfg, 30)
        assert np.array_equal(img, img[::-1, :])

    def test_black_reserved_for_in_julia(self, setup):
        _, cfg, params = setup
        win = default_window(params, cfg)
        img = render(win, 128, params, cfg, 30)
        # no verified 30-step survivor at this resolution, so no black pixel
        assert np.all(img > 0)

    def test_in_julia_fraction_decreases_with_radius(self, setup):
        consts, cfg, params = setup
        win = default_window(params, cfg)
        imgs = {}
        for fac in (1.0, 1.6):
            big = RadiusConfig(r=cfg.r * fac, l_min=cfg.l_min, cutoff=cfg.cutoff)
            imgs[fac] = render(win, 256, params, big, 30)
        dark1 = np.mean(imgs[1.0] <= 160)
        dark2 = np.mean(imgs[1.6] <= 160)
        assert dark2 <= dark1 + 1e-9

    def test_supersampling_deterministic(self, setup):
        _, cfg, params = setup
        win = (params.l + 3.2, params.l + 5.2, -1.0, 1.0)
        a = render(win, 64, params, cfg, 20, supersample=True)
        b = render(win, 64, params, cfg, 20, supersample=True)
        assert np.array_equal(a, b)

    def test_pgm_writer(self, setup, tmp_path):
        _, cfg, params = setup
        img = render((0.0, 1.0, 0.0, 1.0), 16, params, cfg, 5)
        path = tmp_path / "img.pgm"
        write_pgm(path, img)
        data = path.read_bytes()
        assert data.startswith(b"P5\n16 16\n255\n")
        assert len(data) == len(b"P5\n16 16\n255\n") + 256


class TestBoxCount:
    def test_straight_line_mask(self):
        mask = np.zeros((1024, 1024), dtype=bool)
        mask[512, :] = True
        est, _ = fit_box_dimension((4, 8, 16, 32, 64), boxcount_from_mask(mask, (4, 8, 16, 32, 64)))
        assert est.value == pytest.approx(1.0, abs=0.05)

    def test_filled_square_mask(self):
        # offsets divisible by every scale, so the count is exact
        mask = np.zeros((1024, 1024), dtype=bool)
        mask[256:768, 256:768] = True
        est, _ = fit_box_dimension((4, 8, 16, 32, 64), boxcount_from_mask(mask, (4, 8, 16, 32, 64)))
        assert est.value == pytest.approx(2.0, abs=0.05)

    def test_counts_non_increasing_in_scale(self):
        rng = np.random.default_rng(14)
        mask = rng.random((512, 512)) < 0.02
        counts = boxcount_from_mask(mask, (4, 8, 16, 32, 64))
        assert all(a >= b for a, b in zip(counts, counts[1:]))

    def test_degenerate_occupancy_raises(self):
        with pytest.raises(DomainError):
            fit_box_dimension((4, 8, 16, 32), [0, 0, 0, 0])

    def test_scale_span_validation(self, setup):
        _, cfg, params = setup
        with pytest.raises(DomainError):
            box_dimension((0, 1, 0, 1), params, cfg, 10, scales=(4, 8))

    def test_julia_window_report(self, setup):
        _, cfg, params = setup
        win = default_window(params, cfg)
        rep = box_dimension(win, params, cfg, 50, resolution=1024)
        assert isinstance(rep, BoxCountReport)
        assert 1.0 <= rep.dim_upper.value <= 2.0
        assert rep.dim_lower.value <= rep.dim_upper.value
        assert 0.0 <= rep.undecided_fraction <= 1.0
        assert all(a >= b for a, b in zip(rep.counts_upper, rep.counts_upper[1:]))
        # upper-variant counts do not grow when n_max increases
        rep2 = box_dimension(win, params, cfg, 70, resolution=1024)
        assert all(b <= a for a, b in zip(rep.counts_upper, rep2.counts_upper))
