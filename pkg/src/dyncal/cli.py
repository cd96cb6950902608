"""Command-line interface.

Subcommands: ``calibrate`` (user CSV data), ``simulate`` (variance-grid
campaign), ``compare`` (radiometer 3- vs 5-point), ``example <name>``
(bundled scenarios), ``manifest-rerun`` (bit-identical replay of a previous
run), ``plot-script`` (emit a self-contained matplotlib script for the
output files).

Exit codes: 0 success, 1 compute error, 2 input error.  ``--threads``
changes wall time only; results are identical for any thread count.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, campaign, config, datasets
from .errors import DyncalError, InputError, InputOrderError
from .metrics import replication_metrics
from .model import build_design
from .sir import CalibrationConfig, CalibrationRun, dynamic_calibrate

_FLOAT_FMT = "%.17g"


def _fmt(v: float) -> str:
    return _FLOAT_FMT % v


def _resolve_threads(args_threads: int | None, cfg_threads: int | None) -> int:
    if args_threads is not None:
        return args_threads
    if cfg_threads is not None:
        return cfg_threads
    env = os.environ.get("DYNCAL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InputError(f"DYNCAL_THREADS must be an integer, got {env!r}")
    return 1


def _calib_config(cfg: config.CampaignConfig, threads: int) -> CalibrationConfig:
    return CalibrationConfig(alpha_E=cfg.alpha_E, M=cfg.M, N=cfg.N_resample,
                             seed=cfg.seed, posterior_mode=cfg.posterior_mode,
                             threads=threads, keep_samples=False)


def read_first_stage(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """CSV with header ``t,ref_<v1>,...,ref_<vr>``; returns (refs, T x r)."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file")
        if not header or header[0].strip() != "t" or len(header) < 2:
            raise InputError(f"{path}: header must be 't,ref_<x1>,...', got {header}")
        refs = []
        for col, name in enumerate(header[1:], start=2):
            name = name.strip()
            if not name.startswith("ref_"):
                raise InputError(
                    f"{path}: column {col} must be named 'ref_<value>', got {name!r}")
            try:
                refs.append(float(name[4:]))
            except ValueError:
                raise InputError(
                    f"{path}: column {col} has non-numeric reference {name!r}")
        rows = []
        last_t = None
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise InputError(
                    f"{path}: line {lineno}: expected {len(header)} fields, "
                    f"got {len(row)}")
            try:
                t = int(row[0])
            except ValueError:
                raise InputError(f"{path}: line {lineno}, column 1: bad time index {row[0]!r}")
            if last_t is not None and t <= last_t:
                raise InputOrderError(
                    f"{path}: line {lineno}: time index {t} not increasing")
            last_t = t
            vals = []
            for col, cell in enumerate(row[1:], start=2):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise InputError(
                        f"{path}: line {lineno}, column {col}: bad value {cell!r}")
            rows.append(vals)
    if not rows:
        raise InputError(f"{path}: no data rows")
    refs = np.array(refs)
    Y = np.array(rows)
    # Downstream designs keep references ascending; realign columns to match.
    order = np.argsort(refs)
    return refs[order], Y[:, order]


def read_second_stage(path: str | Path) -> np.ndarray:
    """CSV with header ``t,y0``; returns the y0 series."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file")
        if [h.strip() for h in header] != ["t", "y0"]:
            raise InputError(f"{path}: header must be 't,y0', got {header}")
        vals = []
        last_t = None
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise InputError(
                    f"{path}: line {lineno}: expected 2 fields, got {len(row)}")
            try:
                t = int(row[0])
            except ValueError:
                raise InputError(f"{path}: line {lineno}, column 1: bad time index {row[0]!r}")
            if last_t is not None and t <= last_t:
                raise InputOrderError(
                    f"{path}: line {lineno}: time index {t} not increasing")
            last_t = t
            try:
                vals.append(float(row[1]))
            except ValueError:
                raise InputError(
                    f"{path}: line {lineno}, column 2: bad value {row[1]!r}")
    if not vals:
        raise InputError(f"{path}: no data rows")
    return np.array(vals)


def write_posterior_csv(path: Path, run: CalibrationRun):
    with path.open("w", newline="\n", encoding="utf-8") as fh:
        fh.write("t,median,lo95,hi95,censored,clamped\n")
        for p in run.posterior:
            fh.write(f"{p.t},{_fmt(p.median)},{_fmt(p.lower95)},{_fmt(p.upper95)},"
                     f"{int(p.censored)},{int(p.clamped)}\n")


def write_manifest(out_dir: Path, cfg: config.CampaignConfig, threads: int,
                   outputs: list[str]):
    manifest = {
        "tool": "dyncal",
        "version": __version__,
        "config": cfg.to_dict(),
        "threads": threads,
        "outputs": outputs,
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _out_dir(args, cfg: config.CampaignConfig) -> Path:
    out = args.out or cfg.out_dir or "."
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def cmd_calibrate(cfg: config.CampaignConfig, args) -> int:
    threads = _resolve_threads(args.threads, cfg.threads)
    refs, Y = read_first_stage(cfg.first_stage)
    y0 = read_second_stage(cfg.second_stage)
    if y0.size != Y.shape[0]:
        raise InputError(
            f"first stage has {Y.shape[0]} periods but second stage has {y0.size}")
    run = dynamic_calibrate(build_design(refs), Y, y0, _calib_config(cfg, threads))
    out = _out_dir(args, cfg)
    write_posterior_csv(out / "posterior.csv", run)
    write_manifest(out, cfg, threads, ["posterior.csv"])
    print(f"wrote {out / 'posterior.csv'} ({run.T} periods)")
    return 0


def _table_lines(scheme, cells) -> list[str]:
    """Paper-style summary block per system-variance level, 4 decimals."""
    lines = [f"{len(scheme)} Reference Model"]
    by_sw: dict[float, list] = {}
    for c in cells:
        by_sw.setdefault(c.sigma2_W, []).append(c)
    for sw, group in by_sw.items():
        lines.append(f"sigma2_W={sw:g}")
        lines.append(f"{'sigma2_E':>10} {'RAMSE DC':>10} {'RAMSE SC':>10} "
                     f"{'AIW DC':>10} {'AIW SC':>10} {'ACP DC':>10} {'ACP SC':>10}")
        for c in group:
            def cell(v):
                return "N/A".rjust(10) if v is None else f"{v:10.4f}"
            sc = c.sc
            lines.append(
                f"{c.sigma2_E:>10g} {c.dc.ramse:10.4f} "
                f"{cell(sc.ramse if sc else None)} {c.dc.aviw:10.4f} "
                f"{cell(sc.aviw if sc else None)} {c.dc.avcp:10.4f} "
                f"{cell(sc.avcp if sc else None)}")
    return lines


def cmd_simulate(cfg: config.CampaignConfig, args) -> int:
    threads = _resolve_threads(args.threads, cfg.threads)
    scheme = cfg.scheme or (20.0, 60.0, 90.0, 100.0)
    cells = campaign.run_grid(scheme, cfg.sigma2_E_grid, cfg.sigma2_W_grid,
                              cfg.T, cfg.n_reps, _calib_config(cfg, threads),
                              cfg.x0_true, cfg.seed)
    out = _out_dir(args, cfg)
    lines = _table_lines(scheme, cells)
    (out / "tables.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    with (out / "cells.csv").open("w", newline="\n", encoding="utf-8") as fh:
        fh.write("sigma2_E,sigma2_W,dc_ramse,dc_aviw,dc_avcp,sc_ramse,sc_aviw,sc_avcp\n")
        for c in cells:
            sc = c.sc
            scv = (_fmt(sc.ramse), _fmt(sc.aviw), _fmt(sc.avcp)) if sc else ("NA",) * 3
            fh.write(f"{c.sigma2_E:g},{c.sigma2_W:g},{_fmt(c.dc.ramse)},"
                     f"{_fmt(c.dc.aviw)},{_fmt(c.dc.avcp)},{','.join(scv)}\n")
    write_manifest(out, cfg, threads, ["tables.txt", "cells.csv"])
    print("\n".join(lines))
    return 0


def cmd_compare(cfg: config.CampaignConfig, args) -> int:
    threads = _resolve_threads(args.threads, cfg.threads)
    results = campaign.radiometer_compare(T=cfg.T, seed=cfg.seed,
                                          cfg=_calib_config(cfg, threads),
                                          drift_share=cfg.drift_share)
    out = _out_dir(args, cfg)
    with (out / "comparison.csv").open("w", newline="\n", encoding="utf-8") as fh:
        fh.write("model,mse,iw,cp\n")
        for label in ("3pt", "5pt"):
            rep, _run = results[label]
            fh.write(f"{label},{_fmt(rep.mse)},{_fmt(rep.iw)},{_fmt(rep.cp)}\n")
    write_manifest(out, cfg, threads, ["comparison.csv"])
    for label in ("3pt", "5pt"):
        rep, _ = results[label]
        print(f"{label}: MSE={rep.mse:.4f} IW={rep.iw:.4f} CP={rep.cp:.4f}")
    return 0


def _write_series_csv(path: Path, refs, Y, y0):
    with path.open("w", newline="\n", encoding="utf-8") as fh:
        fh.write("t," + ",".join(f"ref_{r:g}" for r in refs) + ",y0\n")
        for t in range(Y.shape[0]):
            row = ",".join(_fmt(v) for v in Y[t])
            fh.write(f"{t + 1},{row},{_fmt(y0[t])}\n")


def cmd_example(cfg: config.CampaignConfig, args) -> int:
    threads = _resolve_threads(args.threads, cfg.threads)
    out = _out_dir(args, cfg)
    ccfg = _calib_config(cfg, threads)
    outputs = []
    if cfg.mode == "example-cd":
        run, baseline = campaign.cd_example(T=cfg.T, seed=cfg.seed, cfg=ccfg)
        write_posterior_csv(out / "posterior.csv", run)
        refs, Y, y0 = datasets.cd_replay(T=cfg.T, seed=cfg.seed)
        _write_series_csv(out / "series.csv", refs, Y, y0)
        (out / "baseline.json").write_text(json.dumps({
            "xi_star": baseline.xi_star, "ci_lo": baseline.ci_lo,
            "ci_hi": baseline.ci_hi, "method": baseline.method,
        }, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        outputs = ["posterior.csv", "series.csv", "baseline.json"]
        print(f"baseline [{baseline.ci_lo:.4f}, {baseline.ci_hi:.4f}]; "
              f"dynamic mean interval "
              f"[{run.lower95.mean():.4f}, {run.upper95.mean():.4f}]")
    elif cfg.mode == "example-radiometer":
        temps, V, y0 = datasets.radiometer_scenario(points=cfg.points, T=cfg.T,
                                                    seed=cfg.seed,
                                                    drift_share=cfg.drift_share)
        run = dynamic_calibrate(build_design(temps), V, y0, ccfg)
        write_posterior_csv(out / "posterior.csv", run)
        _write_series_csv(out / "series.csv", temps, V, y0)
        rep = replication_metrics(run.medians, run.lower95, run.upper95,
                                  np.full(cfg.T, datasets.RADIOMETER_TRUE))
        outputs = ["posterior.csv", "series.csv"]
        print(f"{cfg.points}-point: mean estimate {run.medians.mean():.4f} K, "
              f"sd {run.medians.std():.4f}; MSE={rep.mse:.4f} IW={rep.iw:.4f} "
              f"CP={rep.cp:.4f}")
    elif cfg.mode == "vertex-stress":
        run = campaign.vertex_stress(T=cfg.T, seed=cfg.seed, cfg=ccfg)
        write_posterior_csv(out / "posterior.csv", run)
        frac_below = float(np.mean(run.upper95 < datasets.VERTEX_TARGET))
        frac_cens = float(np.mean(run.censored))
        outputs = ["posterior.csv"]
        print(f"vertex stress: P(upper < {datasets.VERTEX_TARGET:g}) = "
              f"{frac_below:.4f}; censored fraction = {frac_cens:.4f}")
    elif cfg.mode == "shock-stress":
        windows = None
        if cfg.shocks:
            from .simgen import ShockWindow

            windows = [ShockWindow(**s) for s in cfg.shocks]
        scn, Y, y0, run = campaign.shock_example(T=cfg.T, seed=cfg.seed,
                                                 long_window=cfg.long_window,
                                                 cfg=ccfg, windows=windows)
        write_posterior_csv(out / "posterior.csv", run)
        _write_series_csv(out / "series.csv", np.asarray(scn.scheme), Y, y0)
        outputs = ["posterior.csv", "series.csv"]
        print(f"shock stress: mean interval width "
              f"{np.mean(run.upper95 - run.lower95):.4f}")
    else:
        raise InputError(f"not an example mode: {cfg.mode}")
    write_manifest(out, cfg, threads, outputs)
    return 0


_EXAMPLE_MODES = {
    "cd": ("example-cd", {"T": 500}),
    "radiometer-3pt": ("example-radiometer", {"points": 3, "T": datasets.RADIOMETER_T}),
    "radiometer-5pt": ("example-radiometer", {"points": 5, "T": datasets.RADIOMETER_T}),
    "vertex": ("vertex-stress", {"T": datasets.RADIOMETER_T}),
    "shock": ("shock-stress", {"T": 700}),
}

PLOT_SCRIPT = """\
#!/usr/bin/env python3
\"\"\"Plot a dyncal posterior.csv (and series.csv when present).\"\"\"
import csv, sys
from pathlib import Path
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

d = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(".")
rows = list(csv.DictReader(open(d / "posterior.csv")))
t = [int(r["t"]) for r in rows]
med = [float(r["median"]) for r in rows]
lo = [float(r["lo95"]) for r in rows]
hi = [float(r["hi95"]) for r in rows]
fig, ax = plt.subplots(figsize=(10, 4))
ax.fill_between(t, lo, hi, alpha=0.3, label="95% interval")
ax.plot(t, med, lw=0.8, label="median")
ax.set_xlabel("t")
ax.set_ylabel("estimate")
ax.legend()
fig.tight_layout()
fig.savefig(d / "posterior.png", dpi=150)
print(d / "posterior.png")
"""


def cmd_plot_script(args) -> int:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    (out / "plot_results.py").write_text(PLOT_SCRIPT, encoding="utf-8")
    print(out / "plot_results.py")
    return 0


def cmd_manifest_rerun(args) -> int:
    path = Path(args.manifest)
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InputError(f"manifest not found: {path}")
    except json.JSONDecodeError as exc:
        raise InputError(f"manifest is not valid JSON: {exc}")
    if "config" not in manifest:
        raise InputError("manifest lacks a 'config' block")
    cfg = config.validate(manifest["config"])
    if args.threads is None and manifest.get("threads"):
        args.threads = int(manifest["threads"])
    return _dispatch_mode(cfg, args)


def _dispatch_mode(cfg: config.CampaignConfig, args) -> int:
    if cfg.mode == "calibrate":
        return cmd_calibrate(cfg, args)
    if cfg.mode == "simulate":
        return cmd_simulate(cfg, args)
    if cfg.mode == "compare":
        return cmd_compare(cfg, args)
    return cmd_example(cfg, args)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dyncal",
        description="Dynamic Bayesian quadratic calibration toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--seed", type=int, default=None, help="override seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (speed only, results unchanged)")

    p = sub.add_parser("calibrate", help="calibrate user-supplied CSV data")
    common(p)
    p.add_argument("--first-stage", help="CSV: t,ref_<x1>,...,ref_<xr>")
    p.add_argument("--second-stage", help="CSV: t,y0")

    p = sub.add_parser("simulate", help="variance-grid Monte Carlo campaign")
    common(p)

    p = sub.add_parser("compare", help="radiometer 3-point vs 5-point study")
    common(p)

    p = sub.add_parser("example", help="run a bundled scenario")
    p.add_argument("name", choices=sorted(_EXAMPLE_MODES))
    common(p)

    p = sub.add_parser("manifest-rerun", help="re-run from a manifest.json")
    p.add_argument("manifest")
    p.add_argument("--out", default=None)
    p.add_argument("--threads", type=int, default=None)

    p = sub.add_parser("plot-script", help="emit a standalone plotting script")
    p.add_argument("--out", default=None)
    return parser


def _load_config(args, default_mode: str | None = None,
                 overrides: dict | None = None) -> config.CampaignConfig:
    if args.config:
        cfg = config.load(args.config)
    else:
        if default_mode is None:
            raise InputError("this command requires --config")
        cfg = config.validate({"mode": default_mode})
    for key, val in (overrides or {}).items():
        setattr(cfg, key, val)
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "calibrate":
            overrides = {}
            if args.first_stage:
                overrides["first_stage"] = args.first_stage
            if args.second_stage:
                overrides["second_stage"] = args.second_stage
            if args.config:
                cfg = _load_config(args, overrides=overrides)
            else:
                if not (args.first_stage and args.second_stage):
                    raise InputError(
                        "calibrate needs --config or both --first-stage and "
                        "--second-stage")
                cfg = config.validate({"mode": "calibrate",
                                       "first_stage": args.first_stage,
                                       "second_stage": args.second_stage})
                if args.seed is not None:
                    cfg.seed = args.seed
            if cfg.mode != "calibrate":
                raise InputError(f"config mode is {cfg.mode!r}, expected 'calibrate'")
            return cmd_calibrate(cfg, args)
        if args.command == "simulate":
            cfg = _load_config(args, default_mode=None)
            if cfg.mode != "simulate":
                raise InputError(f"config mode is {cfg.mode!r}, expected 'simulate'")
            return cmd_simulate(cfg, args)
        if args.command == "compare":
            cfg = _load_config(args, default_mode="compare")
            if cfg.mode != "compare":
                raise InputError(f"config mode is {cfg.mode!r}, expected 'compare'")
            return cmd_compare(cfg, args)
        if args.command == "example":
            mode, defaults = _EXAMPLE_MODES[args.name]
            cfg = _load_config(args, default_mode=mode)
            for key, val in defaults.items():
                if args.config is None:
                    setattr(cfg, key, val)
            if cfg.mode != mode:
                raise InputError(f"config mode is {cfg.mode!r}, expected {mode!r}")
            return cmd_example(cfg, args)
        if args.command == "manifest-rerun":
            return cmd_manifest_rerun(args)
        if args.command == "plot-script":
            return cmd_plot_script(args)
        raise InputError(f"unknown command {args.command!r}")
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except DyncalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
