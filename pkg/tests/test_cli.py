import json
import math
import os

import numpy as np
import pytest

from tractdim.cli import main

from conftest import bundled_constants


def _run(argv):
    return main(argv)


@pytest.fixture()
def outdir(tmp_path):
    return tmp_path


class TestEval:
    def test_record_matches_known_values(self, outdir):
        # z = e^2, p = 1, l = 0: tau_inner = 4, log|f| = e^4
        cfg = outdir / "cfg.ini"
        cfg.write_text("[common]\np = 1.0\nl = 0.0\n\n[eval]\nz = 7.38905609893065, 0.0\n")
        assert _run(["eval", "--config", str(cfg), "--out", str(outdir)]) == 0
        rec = json.loads((outdir / "eval.json").read_text())
        assert rec["tau_inner"]["re"] == pytest.approx(4.0, rel=1e-12)
        assert rec["log_abs_f"] == pytest.approx(math.e**4, rel=1e-12)
        assert rec["phi_of_tau"]["re"] == pytest.approx(7.38905609893065, rel=1e-12)


class TestTransfer:
    def test_csv_and_jsonl_outputs(self, outdir):
        cfg = outdir / "cfg.ini"
        cfg.write_text(
            "[transfer]\nt_values = 1.5\nl_values = 0.0\nu_count = 3\nu_span = 2.0\n"
        )
        assert _run(["transfer", "--config", str(cfg), "--out", str(outdir),
                     "--no-figures"]) == 0
        lines = (outdir / "transfer.csv").read_text().splitlines()
        assert lines[0] == "w_re,w_im,t,l,value,tail_bound,K"
        assert len(lines) == 4
        rows = [json.loads(s) for s in (outdir / "transfer.jsonl").read_text().splitlines()]
        assert all(r["tail_bound"] < r["value"] * 1e-3 for r in rows)

    def test_worker_determinism(self, outdir):
        cfg = outdir / "cfg.ini"
        cfg.write_text(
            "[transfer]\nt_values = 1.3,1.7\nl_values = 0.0\nu_count = 4\nu_span = 3.0\n"
        )
        out1 = outdir / "w1"
        out4 = outdir / "w4"
        for out, w in ((out1, "1"), (out4, "4")):
            assert _run(["transfer", "--config", str(cfg), "--out", str(out),
                         "--workers", w, "--no-figures"]) == 0
        assert (out1 / "transfer.csv").read_bytes() == (out4 / "transfer.csv").read_bytes()
        assert (out1 / "transfer.jsonl").read_bytes() == (out4 / "transfer.jsonl").read_bytes()

    def test_figure_emitted_on_report_path(self, outdir):
        cfg = outdir / "cfg.ini"
        cfg.write_text("[transfer]\nt_values = 1.5\nl_values = 0.0\nu_count = 2\n")
        assert _run(["transfer", "--config", str(cfg), "--out", str(outdir)]) == 0
        assert (outdir / "transfer.png").exists()


class TestJulia:
    def test_render_emits_pgm(self, outdir):
        cfg = outdir / "cfg.ini"
        cfg.write_text("[julia-render]\nresolution = 48\nn_max = 12\n")
        assert _run(["julia-render", "--config", str(cfg), "--out", str(outdir),
                     "--no-figures"]) == 0
        data = (outdir / "julia.pgm").read_bytes()
        assert data.startswith(b"P5\n48 48\n255\n")

    def test_dynamics_threshold_enforced(self, outdir):
        cfg = outdir / "cfg.ini"
        cfg.write_text("[common]\nl = 1.0\n\n[julia-render]\nresolution = 16\n")
        rcode = _run(["julia-render", "--config", str(cfg), "--out", str(outdir)])
        assert rcode == 2

    def test_boxcount_outputs(self, outdir):
        cfg = outdir / "cfg.ini"
        cfg.write_text("[julia-dim]\nresolution = 256\nn_max = 20\n")
        assert _run(["julia-dim", "--config", str(cfg), "--out", str(outdir),
                     "--no-figures"]) == 0
        rep = json.loads((outdir / "boxcount.json").read_text())
        assert set(rep) >= {"dim", "dim_upper", "dim_lower", "counts_upper",
                            "undecided_fraction"}
        lines = (outdir / "boxcount.csv").read_text().splitlines()
        assert lines[0] == "scale,count_upper,count_lower"


class TestHypdimCmd:
    def test_csv_rows_match_sweep(self, outdir):
        from tractdim.pressure import hypdim_sweep
        from tractdim.tractgeom import RadiusConfig

        consts = bundled_constants(1.0)
        cfg_r = RadiusConfig.from_constants(consts)
        l = cfg_r.l_min + 1.0
        cfg = outdir / "cfg.ini"
        cfg.write_text(
            f"[hypdim]\nl_values = {l!r}\nnu = 96\nnv = 48\nspan = 25.0\ntol_t = 0.02\n"
        )
        assert _run(["hypdim", "--config", str(cfg), "--out", str(outdir),
                     "--no-figures"]) == 0
        lines = (outdir / "hypdim.csv").read_text().splitlines()
        assert lines[0].startswith("l,h_lo,h,h_hi")
        rows = hypdim_sweep([l], 1.0, cfg_r, nu=96, nv=48, span=25.0, tol_t=0.02)
        want = rows[0].estimate.value
        got = float(lines[1].split(",")[2])
        assert got == pytest.approx(want, abs=1e-12)
        assert (outdir / "hypdim_trend.txt").read_text().startswith("hyperbolic")


class TestPressureCmd:
    def test_table(self, outdir):
        cfg = outdir / "cfg.ini"
        cfg.write_text(
            "[pressure]\nt_values = 1.3,1.8\nnu = 64\nnv = 32\nspan = 20.0\nn_max = 6\n"
        )
        assert _run(["pressure", "--config", str(cfg), "--out", str(outdir),
                     "--no-figures"]) == 0
        lines = (outdir / "pressure.csv").read_text().splitlines()
        assert lines[0] == "l,t,P,spread,n_used"
        rows = [json.loads(s) for s in (outdir / "pressure.jsonl").read_text().splitlines()]
        assert rows[0]["P"] > rows[1]["P"]


class TestVerifyCmd:
    def test_exit_zero_and_pass_records(self, outdir):
        assert _run(["verify", "--out", str(outdir)]) == 0
        rep = json.loads((outdir / "verify.json").read_text())
        assert rep["all_pass"] is True
        assert len(rep["checks"]) == 7

    def test_deterministic_across_workers(self, outdir):
        a, b = outdir / "a", outdir / "b"
        assert _run(["verify", "--out", str(a), "--workers", "1"]) == 0
        assert _run(["verify", "--out", str(b), "--workers", "8"]) == 0
        assert (a / "verify.json").read_bytes() == (b / "verify.json").read_bytes()


class TestConfigHandling:
    def test_missing_config_errors(self, outdir):
        assert _run(["eval", "--config", str(outdir / "nope.ini"),
                     "--out", str(outdir)]) == 2

    def test_env_overrides_worker_count(self, outdir, monkeypatch):
        cfg = outdir / "cfg.ini"
        cfg.write_text("[common]\nworkers = 1\n\n[transfer]\nt_values = 1.5\n"
                       "l_values = 0.0\nu_count = 2\n")
        monkeypatch.setenv("TRACTDIM_WORKERS", "2")
        assert _run(["transfer", "--config", str(cfg), "--out", str(outdir),
                     "--no-figures"]) == 0

    def test_calibrate_small_budget(self, outdir):
        cfg = outdir / "cfg.ini"
        cfg.write_text("[common]\np = 1.0\n\n[calibrate]\nregion_grid = 16\n"
                       "koebe_samples = 40\nratio_samples = 1\n")
        assert _run(["calibrate", "--config", str(cfg), "--out", str(outdir)]) == 0
        files = list(outdir.glob("constants_p*.txt"))
        assert len(files) == 1
        from tractdim.tractgeom import load_constants

        consts = load_constants(files[0])
        assert consts.r0_est > 4.0 * consts.C_est
