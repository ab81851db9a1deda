"""Config-driven experiment runner.

Subcommands generate full-model trajectories, train and run the static
reduced model, run the adaptive reduced model, report singular-value decay,
and compare finished runs. All outputs are plot-ready CSV or snapshot
binaries, written atomically; a fixed config reproduces them bit for bit.

Exit codes: 0 success, 2 config error, 3 numerical divergence, 4 I/O error.
The environment variable ROM_OUTPUT_DIR overrides output.directory.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import adaptive, diagnostics, snapio, static
from .config import RunConfig, build_model, load_config
from .exceptions import ConfigError, DivergenceError, NumericalError
from .linalg import pod
from .models import run_full_model


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DivergenceError, NumericalError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adrom", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fom-run", help="run the full model; write trajectory and probes")
    p.add_argument("config")
    p.set_defaults(func=cmd_fom_run)

    p = sub.add_parser("svd-report", help="singular-value decay of a snapshot file")
    p.add_argument("snapshots")
    p.add_argument("--windows", type=int, default=None, metavar="W",
                   help="also report non-overlapping column windows of width W")
    p.add_argument("--out", default=None, help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_svd_report)

    p = sub.add_parser("rom-static", help="train and run the static reduced model")
    p.add_argument("config")
    p.add_argument("--snapshots", nargs="+", default=None,
                   help="training snapshot files (default: training.snapshots from the config)")
    p.add_argument("--reference", default=None,
                   help="full-model trajectory snapshot for the error metric (default: regenerate)")
    p.set_defaults(func=cmd_rom_static)

    p = sub.add_parser("rom-aadeim", help="run the adaptive reduced model end to end")
    p.add_argument("config")
    p.add_argument("--reference", default=None,
                   help="full-model trajectory snapshot for the error metric (default: regenerate)")
    p.set_defaults(func=cmd_rom_aadeim)

    p = sub.add_parser("compare", help="tabulate error/cost summaries of finished runs")
    p.add_argument("run_dirs", nargs="+", metavar="run-dir")
    p.add_argument("--out", default=None, help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_compare)

    return parser


def _output_dir(cfg: RunConfig) -> Path:
    override = os.environ.get("ROM_OUTPUT_DIR")
    return Path(override) if override else Path(cfg.output.directory)


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))  # shortest round-trip decimal form
    if isinstance(x, np.integer):
        return str(int(x))
    return str(x)


def _write_csv(path: Path, header: str, rows) -> None:
    lines = [header]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    snapio.write_text(path, "\n".join(lines) + "\n")


def _emit_probes(cfg: RunConfig, model, Q, outdir: Path) -> None:
    if "probes" not in cfg.output.emit or not cfg.output.probes:
        return
    layout = static.VariableLayout.from_model(model)
    spec = diagnostics.ProbeSpec(locations=cfg.output.probes, variables=cfg.output.probe_variables)
    for series in diagnostics.probe_series(Q, layout, model.dx, model.time.dt, spec):
        name = f"probe_{series.variable}_x{series.location:g}.csv"
        _write_csv(outdir / name, "time,value", zip(series.times, series.values))


def _emit_ledger(cfg: RunConfig, ledger, outdir: Path) -> None:
    if "ledger" in cfg.output.emit:
        _write_csv(outdir / "ledger.csv", "step,kind,count",
                   ((r.step, r.kind, r.count) for r in ledger.records))


def _emit_error(cfg: RunConfig, err: float, outdir: Path) -> None:
    if "error" in cfg.output.emit:
        _write_csv(outdir / "error.csv", "label,error", [(cfg.label, err)])


def _emit_summary(cfg: RunConfig, err: float, ledger, outdir: Path) -> None:
    if "summary" not in cfg.output.emit:
        return
    by_kind = ledger.totals_by_kind()
    m_s = cfg.aadeim.m_s if cfg.aadeim else 0
    z = cfg.aadeim.z if cfg.aadeim else 0
    _write_csv(outdir / "summary.csv",
               "label,n,m_s,z,error,evals_total,evals_refresh,evals_sparse,evals_rom",
               [(cfg.label, cfg.rom.n, m_s, z, err, ledger.total,
                 by_kind["full_refresh"], by_kind["sparse_estimate"], by_kind["rom_step"])])


def _reference_trajectory(cfg: RunConfig, model, reference_path) -> np.ndarray:
    if reference_path is None:
        return run_full_model(model, cfg.time.steps)
    ref = snapio.read_matrix(reference_path)
    want = (model.dim, cfg.time.steps + 1)
    if ref.shape != want:
        raise ValueError(f"reference trajectory shape {ref.shape} does not match required {want}")
    return ref


def cmd_fom_run(args) -> int:
    cfg = load_config(args.config)
    model = build_model(cfg)
    outdir = _output_dir(cfg)
    Q = run_full_model(model, cfg.time.steps)
    if "trajectory" in cfg.output.emit:
        snapio.write_matrix(outdir / "fom_trajectory.snap", Q)
    _emit_probes(cfg, model, Q, outdir)
    print(f"wrote {outdir}", file=sys.stderr)
    return 0


def cmd_svd_report(args) -> int:
    Q = snapio.read_matrix(args.snapshots)
    windows = []
    if args.windows is not None:
        if args.windows < 1:
            raise ValueError("--windows must be >= 1")
        windows = [(s, min(s + args.windows, Q.shape[1]))
                   for s in range(0, Q.shape[1], args.windows)]
    rows = []
    for label, sigma in diagnostics.svd_decay_report(Q, windows):
        rows.extend((i + 1, val, label) for i, val in enumerate(sigma))
    lines = ["index,sigma_normalized,window_label"]
    lines.extend(f"{i},{_fmt(v)},{label}" for i, v, label in rows)
    text = "\n".join(lines) + "\n"
    if args.out:
        snapio.write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def _training_matrix(cfg: RunConfig, model, snapshot_paths) -> np.ndarray:
    paths = snapshot_paths if snapshot_paths else list(cfg.training.snapshots)
    if not paths:
        raise ConfigError("training.snapshots: no snapshot files given (config key or --snapshots)")
    stride = cfg.training.snapshot_stride
    parts = []
    for path in paths:
        Q = snapio.read_matrix(path)
        if Q.shape[0] != model.dim:
            raise ValueError(f"{path}: snapshot rows {Q.shape[0]} do not match model dimension {model.dim}")
        parts.append(Q[:, ::stride])
    return np.concatenate(parts, axis=1)


def cmd_rom_static(args) -> int:
    cfg = load_config(args.config)
    if cfg.rom.mode != "static":
        raise ConfigError("rom.mode: must be static for the rom-static command")
    model = build_model(cfg)
    outdir = _output_dir(cfg)
    train = _training_matrix(cfg, model, args.snapshots)
    V, _ = pod(train, cfg.rom.n)
    layout = static.VariableLayout.from_model(model)
    points = static.select_points(V, layout)
    q0 = model.initial_state()
    traj, ledger = static.run_static(model, V, points, V.T @ q0, cfg.time.steps)
    lifted = V @ traj
    reference = _reference_trajectory(cfg, model, args.reference)
    err = diagnostics.relative_error(lifted, reference)
    if "trajectory" in cfg.output.emit:
        snapio.write_matrix(outdir / "rom_trajectory.snap", lifted)
    _emit_probes(cfg, model, lifted, outdir)
    _emit_error(cfg, err, outdir)
    _emit_ledger(cfg, ledger, outdir)
    _emit_summary(cfg, err, ledger, outdir)
    print(f"wrote {outdir} (error {err:.6g})", file=sys.stderr)
    return 0


def cmd_rom_aadeim(args) -> int:
    cfg = load_config(args.config)
    if cfg.aadeim is None:
        raise ConfigError("rom.mode: must be aadeim for the rom-aadeim command")
    model = build_model(cfg)
    outdir = _output_dir(cfg)
    result = adaptive.run_aadeim(model, cfg.aadeim)
    reference = _reference_trajectory(cfg, model, args.reference)
    err = diagnostics.relative_error(result.trajectory, reference)
    if "trajectory" in cfg.output.emit:
        snapio.write_matrix(outdir / "rom_trajectory.snap", result.trajectory)
    _emit_probes(cfg, model, result.trajectory, outdir)
    _emit_error(cfg, err, outdir)
    _emit_ledger(cfg, result.ledger, outdir)
    if "diagnostics" in cfg.output.emit:
        _write_csv(outdir / "diagnostics.csv",
                   "step,refreshed,forced_refresh,basis_adapted,degenerate_update,"
                   "objective_before,objective_after,residual_top_norm,sample_churn,"
                   "union_size,points_count",
                   ((d.step, int(d.refreshed), int(d.forced_refresh), int(d.basis_adapted),
                     int(d.degenerate_update), d.objective_before, d.objective_after,
                     d.residual_top_norm, d.sample_churn, d.union_size, d.points_count)
                    for d in result.steps))
    _emit_summary(cfg, err, result.ledger, outdir)
    print(f"wrote {outdir} (error {err:.6g})", file=sys.stderr)
    return 0


def cmd_compare(args) -> int:
    header = "label,n,m_s,z,error,evals_total,evals_refresh,evals_sparse,evals_rom"
    rows = []
    for run_dir in args.run_dirs:
        path = Path(run_dir) / "summary.csv"
        if not path.is_file():
            raise FileNotFoundError(f"{path}: missing summary (was the run emitted with 'summary'?)")
        lines = path.read_text(encoding="utf-8").strip().splitlines()
        if not lines or lines[0] != header:
            raise ValueError(f"{path}: unexpected summary header")
        rows.extend(line.split(",") for line in lines[1:])
    rows.sort(key=lambda row: row[0])
    text = "\n".join([header] + [",".join(row) for row in rows]) + "\n"
    if args.out:
        snapio.write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
