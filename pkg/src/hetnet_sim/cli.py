"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 config validation error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import yaml

from . import __version__, validation
from .config import ConfigError, SweepSettings, config_to_dict, parse_config
from .engine import ScenarioConfig, run_scenario
from .sweep import (
    CSV_COLUMNS,
    BiasEvaluation,
    SweepPoint,
    decoupling_gain_sweep,
    density_sweep,
    joint_density_sweep,
)

log = logging.getLogger("hetsim")

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _positive_int(text):
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if val < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {val}")
    return val


def _seed(text):
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if not 0 <= val < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be in [0, 2**64)")
    return val


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML scenario file")
    common.add_argument("--seed", type=_seed, help="master seed (overrides config)")
    common.add_argument("--drops", type=_positive_int, help="drops per scenario (overrides config)")
    common.add_argument("--workers", type=_positive_int, default=1, help="worker processes")
    common.add_argument("--out-dir", type=Path, default=Path("."), help="directory for CSV and manifest files")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="hetsim", description="Two-tier HetNet association Monte Carlo simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "run": "single scenario: per-drop tagged-user results and percentile summary",
        "sweep-bias": "evaluate every femto bias of the grid on common drops",
        "sweep-density": "optimal-bias gains against femto density (macro density fixed)",
        "sweep-joint-density": "optimal-bias gains with both tier densities at a fixed ratio",
        "sweep-decoupling": "uplink biasing/decoupling gains and UL/DL mismatch fractions",
        "validate": "exactness and oracle-equivalence self checks",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_csv(path: Path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])


def _load(args) -> tuple[ScenarioConfig, SweepSettings]:
    if args.config is not None:
        cfg, settings = parse_config(args.config)
    else:
        cfg, settings = ScenarioConfig(), SweepSettings()
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if args.drops is not None:
        cfg = replace(cfg, n_drops=args.drops)
    return cfg, settings


DROP_COLUMNS = ["drop_index", "bias_dB", "dl_rate", "ul_rate_coupled", "ul_rate_decoupled", "dl_tier", "dl_bs",
                "ul_tier", "ul_bs", "mismatch", "dl_sinr", "dl_load", "ul_load_coupled", "ul_load_decoupled",
                "resamples"]
SUMMARY_COLUMNS = ["metric", "p10", "p50", "p90", "count"]
BIAS_COLUMNS = ["bias_dB", "dl_p10", "dl_p50", "dl_p90", "ul_coupled_p50", "ul_decoupled_p50", "mismatch_frac",
                "femto_assoc_frac", "is_optimal", "n_drops", "seed"]
VALIDATION_COLUMNS = ["check", "passed", "detail"]


def _cmd_run(cfg, settings, args, out):
    res = run_scenario(cfg, args.workers)
    rows = [{
        "drop_index": d.drop_index, "bias_dB": d.bias_db, "dl_rate": d.dl_rate,
        "ul_rate_coupled": d.ul_rate_coupled, "ul_rate_decoupled": d.ul_rate_decoupled,
        "dl_tier": d.dl_serving[0], "dl_bs": d.dl_serving[1], "ul_tier": d.ul_serving[0], "ul_bs": d.ul_serving[1],
        "mismatch": d.mismatch, "dl_sinr": d.dl_sinr, "dl_load": d.dl_load, "ul_load_coupled": d.ul_load_coupled,
        "ul_load_decoupled": d.ul_load_decoupled, "resamples": d.resamples,
    } for d in res.drops]
    write_csv(out / "drops.csv", DROP_COLUMNS, rows)
    summary = [{"metric": name, "p10": s.p10, "p50": s.p50, "p90": s.p90, "count": s.count}
               for name, s in (("dl_rate", res.dl), ("ul_rate_coupled", res.ul_coupled),
                               ("ul_rate_decoupled", res.ul_decoupled))]
    summary.append({"metric": "mismatch_fraction", "p10": res.mismatch_fraction, "p50": res.mismatch_fraction,
                    "p90": res.mismatch_fraction, "count": len(res.drops)})
    write_csv(out / "summary.csv", SUMMARY_COLUMNS, summary)
    print(f"median DL rate {res.dl.p50:.6g} bps/Hz, mismatch fraction {res.mismatch_fraction:.4g}")
    return ["drops.csv", "summary.csv"], res.resamples


def _cmd_sweep_bias(cfg, settings, args, out):
    ev = BiasEvaluation.run(cfg, settings.bias_grid_db, args.workers)
    best = ev.optimal_index(50.0)
    rows = []
    for i, b in enumerate(ev.biases):
        p10, p50, p90 = np.percentile(ev.dl[i], [10, 50, 90])
        rows.append({"bias_dB": b, "dl_p10": p10, "dl_p50": p50, "dl_p90": p90,
                     "ul_coupled_p50": np.median(ev.ul_coupled[i]), "ul_decoupled_p50": np.median(ev.ul_decoupled),
                     "mismatch_frac": ev.mismatch[i].mean(), "femto_assoc_frac": ev.femto[i].mean(),
                     "is_optimal": i == best, "n_drops": ev.n_drops, "seed": cfg.master_seed})
    write_csv(out / "bias_sweep.csv", BIAS_COLUMNS, rows)
    print(f"optimal femto bias {ev.biases[best]:g} dB")
    return ["bias_sweep.csv"], ev.resamples


def _sweep_rows(points: list[SweepPoint]):
    return [p.row() for p in points], sum(p.evaluation.resamples for p in points)


def _per_model(cfg, settings, fn):
    points = []
    for model in settings.path_loss_models:
        log.info("path loss %s", model.label)
        points.extend(fn(replace(cfg, path_loss=model)).points)
    return _sweep_rows(points)


def _cmd_sweep_density(cfg, settings, args, out):
    rows, resamples = _per_model(cfg, settings, lambda c: density_sweep(
        c, settings.femto_densities, settings.bias_grid_db, workers=args.workers))
    write_csv(out / "density_sweep.csv", CSV_COLUMNS, rows)
    return ["density_sweep.csv"], resamples


def _cmd_sweep_joint(cfg, settings, args, out):
    rows, resamples = _per_model(cfg, settings, lambda c: joint_density_sweep(
        c, settings.macro_densities, settings.ratio, settings.bias_grid_db, workers=args.workers))
    write_csv(out / "joint_density_sweep.csv", CSV_COLUMNS, rows)
    return ["joint_density_sweep.csv"], resamples


def _cmd_sweep_decoupling(cfg, settings, args, out):
    rows, resamples = _per_model(cfg, settings, lambda c: decoupling_gain_sweep(
        c, settings.femto_densities, settings.bias_grid_db, workers=args.workers))
    write_csv(out / "decoupling_sweep.csv", CSV_COLUMNS, rows)
    return ["decoupling_sweep.csv"], resamples


def _cmd_validate(cfg, settings, args, out):
    results = validation.run_all()
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.name} {r.detail}".rstrip())
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass} passed, {len(results) - n_pass} failed")
    write_csv(out / "validation.csv", VALIDATION_COLUMNS,
              [{"check": r.name, "passed": r.passed, "detail": r.detail} for r in results])
    return ["validation.csv"], 0, n_pass == len(results)


COMMANDS = {
    "run": _cmd_run,
    "sweep-bias": _cmd_sweep_bias,
    "sweep-density": _cmd_sweep_density,
    "sweep-joint-density": _cmd_sweep_joint,
    "sweep-decoupling": _cmd_sweep_decoupling,
    "validate": _cmd_validate,
}


def run_command(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg, settings = _load(args)
    except ConfigError as exc:
        print(f"hetsim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out: Path = args.out_dir
    started = dt.datetime.now(dt.timezone.utc).isoformat()
    try:
        out.mkdir(parents=True, exist_ok=True)
        result = COMMANDS[args.command](cfg, settings, args, out)
        files, resamples = result[:2]
        ok = result[2] if len(result) > 2 else True
        manifest = {
            "command": args.command,
            "artifact_version": __version__,
            "master_seed": cfg.master_seed,
            "workers": args.workers,
            "started": started,
            "finished": dt.datetime.now(dt.timezone.utc).isoformat(),
            "outputs": files,
            "drop_resamples": resamples,
            "config": config_to_dict(cfg, settings),
        }
        (out / f"{args.command}.manifest.yaml").write_text(yaml.safe_dump(manifest, sort_keys=False))
    except OSError as exc:
        print(f"hetsim: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - report any simulation failure as a runtime error
        log.debug("failure", exc_info=True)
        print(f"hetsim: {args.command} failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK if ok else EXIT_RUNTIME


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()
