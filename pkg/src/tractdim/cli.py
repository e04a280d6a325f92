"""Command-line front end.

Subcommands cover every computation in the package: constant
calibration, point evaluations, transfer-operator sweeps, pressure
tables, the Bowen-zero dimension sweep, Julia-set rendering and box
counting, and the self-check suite.  Configuration comes from an INI
file (flat key = value lines, one section per subcommand); the
TRACTDIM_WORKERS environment variable overrides only the worker count.

Outputs are machine readable: CSV with a header row, JSON (one object
per line for sweeps), portable graymaps, and plain-text trend reports.
Report paths also render matplotlib figures alongside the delimited
output unless figures are disabled.  Identical configuration and
constants cache produce byte-identical outputs for any worker count.
"""

from __future__ import annotations

import argparse
import cmath
import configparser
import json
import math
import multiprocessing
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, report
from .cauchy import eval_entire, eval_entire_in_tract
from .corefn import DomainError, ModelParams, OVERFLOW_EXPONENT, log_f, phi, tau_inner
from .juliadim import box_dimension, default_window, render, write_pgm
from .pressure import bowen_zero, hypdim_sweep, pressure_estimate, trend_report
from .tractgeom import (
    CalibrationBudget,
    RadiusConfig,
    bundled_constants,
    calibrate,
    load_constants,
    min_l_for_disjoint,
    save_constants,
)
from .transferop import transfer_entire, transfer_model
from .verify import run_verify

WORKERS_ENV = "TRACTDIM_WORKERS"
_DYNAMICS_SUBCOMMANDS = {"julia-render", "julia-dim"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Validated run configuration for one subcommand invocation."""

    subcommand: str
    p: float
    l: float
    r: float | None
    constants_path: str | None
    seed: int
    workers: int
    outdir: Path
    figures: bool
    options: dict = field(default_factory=dict)

    @property
    def params(self) -> ModelParams:
        return ModelParams(p=self.p, l=self.l)


def _parse_floats(text: str) -> list[float]:
    return [float(tok) for tok in text.replace(";", ",").split(",") if tok.strip()]


def load_run_config(subcommand: str, args) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    if args.config:
        if not Path(args.config).exists():
            raise ConfigError(f"config file not found: {args.config}")
        cp.read(args.config)
    com = cp["common"] if cp.has_section("common") else {}
    sec = cp[subcommand] if cp.has_section(subcommand) else {}

    def pick(key, default=None):
        if key in sec:
            return sec[key]
        if key in com:
            return com[key]
        return default

    p = float(pick("p", 1.0))
    l_raw = pick("l", "auto")
    r_raw = pick("r", None)
    workers = 1
    if pick("workers") is not None:
        workers = int(pick("workers"))
    if os.environ.get(WORKERS_ENV):
        workers = int(os.environ[WORKERS_ENV])
    if args.workers is not None:
        workers = int(args.workers)
    seed = int(args.seed if args.seed is not None else pick("seed", 0))
    outdir = Path(args.out if args.out else pick("out", "."))
    figures = str(pick("figures", "true")).lower() not in ("0", "false", "no")
    if getattr(args, "no_figures", False):
        figures = False
    options = dict(sec)
    cfgdata = RunConfig(
        subcommand=subcommand,
        p=p,
        l=math.nan if l_raw == "auto" else float(l_raw),
        r=None if r_raw in (None, "", "auto") else float(r_raw),
        constants_path=pick("constants", None),
        seed=seed,
        workers=max(1, workers),
        outdir=outdir,
        figures=figures,
        options=options,
    )
    return cfgdata


def _resolve_constants(rc: RunConfig):
    if rc.constants_path:
        return load_constants(rc.constants_path)
    return bundled_constants(rc.p)


def _resolve_radius(rc: RunConfig, consts) -> RadiusConfig:
    return RadiusConfig.from_constants(consts, r=rc.r)


def _resolve_l(rc: RunConfig, cfg: RadiusConfig) -> float:
    if math.isnan(rc.l):
        return cfg.l_min + 1.0
    return rc.l


def _validate_dynamics(rc: RunConfig, cfg: RadiusConfig, l: float):
    if rc.subcommand in _DYNAMICS_SUBCOMMANDS and l < min_l_for_disjoint(cfg):
        raise ConfigError(
            f"{rc.subcommand} needs a disjoint-type translation: l = {l:g} is "
            f"below the threshold {cfg.l_min:g}"
        )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), sort_keys=True, indent=1) + "\n",
                    encoding="utf-8")


def _write_jsonl(path: Path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(_jsonable(row), sort_keys=True) + "\n")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n")


def parallel_map(fn, items, workers: int):
    """Order-preserving map, optionally fanned out over processes."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    ctx = multiprocessing.get_context("fork")
    with ctx.Pool(min(workers, len(items))) as pool:
        return pool.map(fn, items)


# ----------------------------------------------------------------------
# subcommand implementations
# ----------------------------------------------------------------------


def cmd_calibrate(rc: RunConfig) -> int:
    budget = CalibrationBudget(
        region_grid=int(rc.options.get("region_grid", 200)),
        koebe_samples=int(rc.options.get("koebe_samples", 1000)),
        ratio_samples=int(rc.options.get("ratio_samples", 24)),
        seed=rc.seed,
    )
    consts = calibrate(rc.p, budget)
    tag = repr(rc.p).replace(".", "_")
    path = rc.outdir / f"constants_p{tag}.txt"
    save_constants(consts, path)
    print(f"wrote {path}")
    return 0


def cmd_eval(rc: RunConfig) -> int:
    consts = _resolve_constants(rc)
    cfg = _resolve_radius(rc, consts)
    l = 0.0 if math.isnan(rc.l) else rc.l
    params = ModelParams(p=rc.p, l=l)
    zs = _parse_floats(rc.options.get("z", "7.38905609893065, 0.0"))
    z = complex(zs[0], zs[1] if len(zs) > 1 else 0.0)
    tol = float(rc.options.get("tol", 1e-9))
    rec: dict = {"z": z, "p": rc.p, "l": l}
    u = tau_inner(z, params)
    rec["tau_inner"] = u
    rec["phi_of_tau"] = None
    if u.real <= OVERFLOW_EXPONENT:
        lf = log_f(z, params)
        rec["log_abs_f"] = lf.log_mod
        rec["arg_f"] = lf.arg
        tau = cmath.exp(u)
        if tau.real > 1.0:
            rec["phi_of_tau"] = phi(tau, params)
    else:
        rec["log_abs_f"] = "overflow"
    region = consts.approx_region()
    from .tractgeom import in_region

    if in_region(z - l, region):
        lf2, corr = eval_entire_in_tract(z, params, consts, tol=tol)
        rec["entire_correction"] = corr
        if lf2.log_mod <= OVERFLOW_EXPONENT:
            rec["entire_value"] = lf2.to_complex() + corr
    else:
        rec["entire_value"] = eval_entire(z, params, consts, tol=tol)
    path = rc.outdir / "eval.json"
    _write_json(path, rec)
    print(f"wrote {path}")
    return 0


def _transfer_point(arg):
    (u, theta, t, l, p, r, l_min, cutoff, entire, cpath) = arg
    cfg = RadiusConfig(r=r, l_min=l_min, cutoff=cutoff)
    params = ModelParams(p=p, l=l)
    w = math.exp(u) * complex(math.cos(theta), math.sin(theta))
    if entire:
        consts = load_constants(cpath) if cpath else bundled_constants(p)
        tv = transfer_entire(w, t, params, consts, cfg)
    else:
        tv = transfer_model(w, t, params, cfg)
    return {
        "u": u, "w_re": w.real, "w_im": w.imag, "t": t, "l": l,
        "value": tv.value, "tail_bound": tv.tail_bound, "K": tv.K,
    }


def cmd_transfer(rc: RunConfig) -> int:
    consts = _resolve_constants(rc)
    cfg = _resolve_radius(rc, consts)
    l_default = _resolve_l(rc, cfg)
    ts = _parse_floats(rc.options.get("t_values", "1.2,1.5,2.0"))
    ls = _parse_floats(rc.options.get("l_values", repr(l_default)))
    n_u = int(rc.options.get("u_count", 12))
    u_span = float(rc.options.get("u_span", 8.0))
    theta = float(rc.options.get("theta", 0.0))
    entire = str(rc.options.get("entire", "false")).lower() in ("1", "true", "yes")
    us = np.linspace(cfg.log_r + 0.05, cfg.log_r + u_span, n_u)
    tasks = [
        (float(u), theta, t, l, rc.p, cfg.r, cfg.l_min, cfg.region_cutoff(),
         entire, rc.constants_path)
        for t in ts for l in ls for u in us
    ]
    rows = parallel_map(_transfer_point, tasks, rc.workers)
    _write_csv(
        rc.outdir / "transfer.csv",
        ["w_re", "w_im", "t", "l", "value", "tail_bound", "K"],
        [(r["w_re"], r["w_im"], r["t"], r["l"], r["value"], r["tail_bound"], r["K"])
         for r in rows],
    )
    _write_jsonl(rc.outdir / "transfer.jsonl", rows)
    print(f"wrote {rc.outdir / 'transfer.csv'}")
    if rc.figures:
        report.fig_transfer_sweep(rows, rc.outdir / "transfer.png")
        print(f"wrote {rc.outdir / 'transfer.png'}")
    return 0


def cmd_pressure(rc: RunConfig) -> int:
    consts = _resolve_constants(rc)
    cfg = _resolve_radius(rc, consts)
    l = _resolve_l(rc, cfg)
    params = ModelParams(p=rc.p, l=l)
    ts = _parse_floats(rc.options.get("t_values", "1.1,1.3,1.5,2.0"))
    n_max = int(rc.options.get("n_max", 12))
    nu = int(rc.options.get("nu", 512))
    nv = int(rc.options.get("nv", 256))
    span = float(rc.options.get("span", 40.0))
    from .transferop import GridFunction, GridOperator

    probe = GridFunction.ones(cfg, nu=nu, nv=nv, span=span)
    op = GridOperator(params, cfg, probe)
    rows = []
    for t in ts:
        est = pressure_estimate(t, params, cfg, n_max=n_max, nu=nu, nv=nv,
                                span=span, operator=op)
        rows.append({"l": l, "t": t, "P": est.value, "spread": est.spread,
                     "n_used": est.n_used})
    _write_csv(rc.outdir / "pressure.csv", ["l", "t", "P", "spread", "n_used"],
               [(r["l"], r["t"], r["P"], r["spread"], r["n_used"]) for r in rows])
    _write_jsonl(rc.outdir / "pressure.jsonl", rows)
    print(f"wrote {rc.outdir / 'pressure.csv'}")
    if rc.figures:
        report.fig_pressure(rows, rc.outdir / "pressure.png")
        print(f"wrote {rc.outdir / 'pressure.png'}")
    return 0


def _hypdim_point(arg):
    (l, p, r, l_min, cutoff, t_lo, t_hi, tol_t, tol_P, n_max, nu, nv, span, kcal) = arg
    cfg = RadiusConfig(r=r, l_min=l_min, cutoff=cutoff)
    rows = hypdim_sweep([l], p, cfg, t_lo=t_lo, t_hi=t_hi, tol_t=tol_t, tol_P=tol_P,
                        n_max=n_max, nu=nu, nv=nv, span=span, entire_band_Kcal=kcal)
    return rows[0]


def cmd_hypdim(rc: RunConfig) -> int:
    consts = _resolve_constants(rc)
    cfg = _resolve_radius(rc, consts)
    if "l_values" in rc.options:
        ls = _parse_floats(rc.options["l_values"])
    else:
        decades = float(rc.options.get("l_decades", 2.0))
        count = int(rc.options.get("l_count", 6))
        base = max(cfg.l_min + 1.0, 1.0)
        ls = [float(base * 10.0 ** (decades * i / (count - 1))) for i in range(count)]
    tol_t = float(rc.options.get("tol_t", 0.01))
    tol_P = float(rc.options.get("tol_p", 0.05))
    n_max = int(rc.options.get("n_max", 12))
    nu = int(rc.options.get("nu", 512))
    nv = int(rc.options.get("nv", 256))
    span = float(rc.options.get("span", 40.0))
    entire_band = str(rc.options.get("entire_band", "false")).lower() in ("1", "true", "yes")
    kcal = consts.Kcal if entire_band else None
    tasks = [
        (l, rc.p, cfg.r, cfg.l_min, cfg.region_cutoff(), 1.05, 1.9, tol_t, tol_P,
         n_max, nu, nv, span, kcal)
        for l in ls
    ]
    sweep = parallel_map(_hypdim_point, tasks, rc.workers)
    rows = []
    for row in sweep:
        if row.estimate is None:
            rows.append({"l": row.l, "h": math.nan, "h_lo": math.nan, "h_hi": math.nan,
                         "bracket_lo": math.nan, "bracket_hi": math.nan,
                         "residual": math.nan, "spread": row.spread, "error": row.error})
            continue
        e = row.estimate
        band = row.band if row.band is not None else e.bracket
        rows.append({"l": row.l, "h": e.value, "h_lo": band[0], "h_hi": band[1],
                     "bracket_lo": e.bracket[0], "bracket_hi": e.bracket[1],
                     "residual": e.residual, "spread": row.spread, "error": ""})
    _write_csv(
        rc.outdir / "hypdim.csv",
        ["l", "h_lo", "h", "h_hi", "bracket_lo", "bracket_hi", "residual", "spread"],
        [(r["l"], r["h_lo"], r["h"], r["h_hi"], r["bracket_lo"], r["bracket_hi"],
          r["residual"], r["spread"]) for r in rows],
    )
    _write_jsonl(rc.outdir / "hypdim.jsonl", rows)
    (rc.outdir / "hypdim_trend.txt").write_text(trend_report(sweep), encoding="utf-8")
    print(f"wrote {rc.outdir / 'hypdim.csv'}")
    if rc.figures:
        report.fig_hypdim_trend(rows, rc.outdir / "hypdim.png")
        print(f"wrote {rc.outdir / 'hypdim.png'}")
    return 0


def _window_from_options(rc: RunConfig, params, cfg):
    raw = rc.options.get("window", "auto")
    if raw == "auto":
        return default_window(params, cfg)
    vals = _parse_floats(raw)
    if len(vals) != 4:
        raise ConfigError("window must be 'auto' or four comma-separated numbers")
    return tuple(vals)


def cmd_julia_render(rc: RunConfig) -> int:
    consts = _resolve_constants(rc)
    cfg = _resolve_radius(rc, consts)
    l = _resolve_l(rc, cfg)
    _validate_dynamics(rc, cfg, l)
    params = ModelParams(p=rc.p, l=l)
    window = _window_from_options(rc, params, cfg)
    resolution = int(rc.options.get("resolution", 1024))
    n_max = int(rc.options.get("n_max", 50))
    supersample = str(rc.options.get("supersample", "false")).lower() in ("1", "true", "yes")
    img = render(window, resolution, params, cfg, n_max, supersample=supersample)
    write_pgm(rc.outdir / "julia.pgm", img)
    print(f"wrote {rc.outdir / 'julia.pgm'}")
    if rc.figures:
        report.fig_julia(img, window, rc.outdir / "julia.png")
        print(f"wrote {rc.outdir / 'julia.png'}")
    return 0


def cmd_julia_dim(rc: RunConfig) -> int:
    consts = _resolve_constants(rc)
    cfg = _resolve_radius(rc, consts)
    l = _resolve_l(rc, cfg)
    _validate_dynamics(rc, cfg, l)
    params = ModelParams(p=rc.p, l=l)
    window = _window_from_options(rc, params, cfg)
    resolution = int(rc.options.get("resolution", 2048))
    n_max = int(rc.options.get("n_max", 50))
    scales = [int(s) for s in _parse_floats(rc.options.get("scales", "4,8,16,32,64"))]
    rep = box_dimension(window, params, cfg, n_max, scales=scales, resolution=resolution)
    _write_csv(
        rc.outdir / "boxcount.csv",
        ["scale", "count_upper", "count_lower"],
        list(zip(rep.scales, rep.counts_upper, rep.counts_lower)),
    )
    _write_json(rc.outdir / "boxcount.json", {
        "window": list(window),
        "resolution": resolution,
        "n_max": n_max,
        "scales": rep.scales,
        "counts_upper": rep.counts_upper,
        "counts_lower": rep.counts_lower,
        "dim": rep.fitted_dim.value,
        "dim_bracket": list(rep.fitted_dim.bracket),
        "dim_upper": rep.dim_upper.value,
        "dim_lower": rep.dim_lower.value,
        "dim_lower_method": rep.dim_lower.method,
        "undecided_fraction": rep.undecided_fraction,
        "fit_residual": rep.fit_residual,
        "note": "dynamics are the tract model; the entire map differs by "
                "two-sided factor bounds on the tract",
    })
    print(f"wrote {rc.outdir / 'boxcount.json'}")
    if rc.figures:
        report.fig_boxcount(rep.scales, rep.counts_upper, rep.counts_lower,
                            rep.dim_upper.value, rc.outdir / "boxcount.png")
        print(f"wrote {rc.outdir / 'boxcount.png'}")
    return 0


def cmd_verify(rc: RunConfig) -> int:
    consts = _resolve_constants(rc)
    cfg = _resolve_radius(rc, consts)
    rep = run_verify(consts, cfg, seed=rc.seed)
    path = rc.outdir / "verify.json"
    _write_json(path, rep)
    for chk in rep["checks"]:
        print(f"{'PASS' if chk['passed'] else 'FAIL'}  {chk['name']}")
    print(f"wrote {path}")
    return 0 if rep["all_pass"] else 1


_COMMANDS = {
    "calibrate": cmd_calibrate,
    "eval": cmd_eval,
    "transfer": cmd_transfer,
    "pressure": cmd_pressure,
    "hypdim": cmd_hypdim,
    "julia-render": cmd_julia_render,
    "julia-dim": cmd_julia_dim,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="tractdim",
        description="transfer operators, pressure and dimension estimates "
                    "for logarithmic tract models",
    )
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name in _COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None, help="INI configuration file")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--no-figures", action="store_true", dest="no_figures")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rc = load_run_config(args.subcommand, args)
        rc.outdir.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.subcommand](rc)
    except (ConfigError, DomainError, ValueError) as exc:
        sys.stderr.write(json.dumps({"error": str(exc), "kind": type(exc).__name__}) + "\n")
        return 2
    except (ArithmeticError, RuntimeError) as exc:
        sys.stderr.write(json.dumps({"error": str(exc), "kind": type(exc).__name__}) + "\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
