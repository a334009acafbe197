"""Command-line interface.

Subcommands: synth, fit, boost, attack, evaluate, experiment, probe. Every
command takes ``--config``; results go to ``--out`` (or stdout for reports).
Exit codes: 0 success, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .boost import BoostConfig, boost
from .config import ExperimentConfig, load_config
from .dataio import load_csv, save_csv, write_jsonl
from .domain import GroupClass, PatchedPredictor, format_numeric_cell
from .errors import ConfigError, MgrError
from .experiment import _apply_attack, run_experiment, split_dataset
from .learners import external_predictions_learner, fit
from .metrics import group_report, optimize_gamma
from .probes import theory_probes
from .synth import synthesize


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mgrobust",
        description="Multigroup-robust post-processing, corruption attacks, and experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, out_required: bool = False) -> None:
        p.add_argument("--config", required=True, help="path to the JSON config file")
        p.add_argument("--out", required=out_required, help="output path")
        p.add_argument("--seed", type=int, default=None, help="override the master seed")
        p.add_argument("--threads", type=int, default=None, help="override the thread count")

    common(sub.add_parser("synth", help="emit the configured synthetic dataset as CSV"), True)
    common(sub.add_parser("fit", help="fit the first configured learner on the full CSV"), True)
    p = sub.add_parser("boost", help="fit, post-process, and emit patched predictions")
    common(p, True)
    p.add_argument("--trace", help="also write the per-iteration trace as JSON lines")
    p = sub.add_parser("attack", help="corrupt the train split and emit it as CSV")
    common(p, True)
    p.add_argument("--level", type=float, default=None, help="noise level (default: first configured)")
    p = sub.add_parser("evaluate", help="per-group metrics for a prediction file")
    common(p)
    p.add_argument("--preds", required=True, help="row-aligned prediction CSV")
    common(sub.add_parser("experiment", help="run the full experiment pipeline"))
    common(sub.add_parser("probe", help="run the theory probes and emit the report"))
    return parser


def _apply_overrides(config: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    changes = {}
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.threads is not None:
        changes["threads"] = args.threads
    return config.override(**changes) if changes else config


def _load_dataset(config: ExperimentConfig):
    section = config.dataset
    if section.csv is not None:
        return load_csv(section.csv, section.label_column, section.groups)
    data = synthesize(section.synthetic)
    groups = GroupClass.parse(section.groups)
    groups.validate_against(data.schema)
    return data, groups


def _write_predictions(path: str, values) -> None:
    with Path(path).open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["prediction"])
        for value in values:
            writer.writerow([format_numeric_cell(float(value))])


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _cmd_synth(config: ExperimentConfig, args: argparse.Namespace) -> None:
    if config.dataset.synthetic is None:
        raise ConfigError("synth requires a dataset.synthetic section")
    data = synthesize(config.dataset.synthetic)
    save_csv(data, args.out, config.dataset.label_column)


def _cmd_fit(config: ExperimentConfig, args: argparse.Namespace) -> None:
    data, _ = _load_dataset(config)
    base = fit(config.learners[0], data, data.features)
    _write_predictions(args.out, PatchedPredictor(base).predict(data.features))


def _cmd_boost(config: ExperimentConfig, args: argparse.Namespace) -> None:
    data, groups = _load_dataset(config)
    base = fit(config.learners[0], data, data.features)
    cfg = BoostConfig(
        epsilon=config.boost.epsilon,
        groups=groups,
        max_iterations=config.boost.max_iterations,
    )
    predictor, trace = boost(base, data, cfg)
    _write_predictions(args.out, predictor.predict(data.features))
    if args.trace:
        write_jsonl(args.trace, trace.to_records())


def _cmd_attack(config: ExperimentConfig, args: argparse.Namespace) -> None:
    data, groups = _load_dataset(config)
    level = args.level if args.level is not None else config.attack.levels[0]
    splits = split_dataset(data, config.splits, config.master_seed, 0)
    corrupted = _apply_attack(
        config, groups, splits.train, splits.aux, level, trial=0, noise_index=0
    )
    save_csv(corrupted, args.out, config.dataset.label_column)


def _cmd_evaluate(config: ExperimentConfig, args: argparse.Namespace) -> None:
    data, groups = _load_dataset(config)
    base = external_predictions_learner(args.preds, None, data)
    predictor = PatchedPredictor(base)
    gamma = optimize_gamma(predictor, data, config.metrics.gamma_grid)
    reports = [group_report(predictor, data, g, gamma).to_record() for g in groups]
    _emit({"gamma": gamma, "groups": reports}, args.out)


def _cmd_experiment(config: ExperimentConfig, args: argparse.Namespace) -> None:
    output = args.out if args.out is not None else config.output
    if output is None:
        raise ConfigError("experiment needs --out or config.output")
    run_experiment(config, output)


def _cmd_probe(config: ExperimentConfig, args: argparse.Namespace) -> None:
    _emit(theory_probes(config), args.out)


_COMMANDS = {
    "synth": _cmd_synth,
    "fit": _cmd_fit,
    "boost": _cmd_boost,
    "attack": _cmd_attack,
    "evaluate": _cmd_evaluate,
    "experiment": _cmd_experiment,
    "probe": _cmd_probe,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = _apply_overrides(load_config(args.config), args)
        _COMMANDS[args.command](config, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except MgrError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
