"""Command-line front end for the ranking-loss lab.

Subcommands: ``gradcheck`` (oracle-equivalence suite), ``train`` (one
experiment), ``counterexample`` (the gradient-descent failure
construction), ``bounds`` (accumulated-loss bound verification), ``bench``
(pruning/timing study), ``sweep`` (imbalance grid).  Exit codes: 0 on
success, 1 on validation errors (including unknown subcommands), 2 on I/O
errors.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import yaml

from .baselines import SmoothedApConfig
from .experiments import (
    ExperimentSpec,
    GradcheckReport,
    bench_acceleration,
    default_bench_spec,
    default_sweep_spec,
    default_train_spec,
    run_bounds,
    run_counterexample,
    run_experiment,
    run_gradcheck,
    surrogate_domination_slack,
)
from .gradients import GradOptions
from .steps import StepConfig
from .synth import SynthConfig
from .trainer import TrainConfig


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


_SYNTH_KEYS = {
    "dim",
    "positives",
    "negatives",
    "groups",
    "margin",
    "noise_sigma",
    "seed",
    "score_shift",
}
_TRAIN_KEYS = {
    "step_size",
    "max_iters",
    "step",
    "stop_at_zero_loss",
    "interpolated",
    "prune_trivial_negatives",
    "normalize_by_positives",
    "smoothed",
    "update_scope",
    "seed",
}
_STEP_KEYS = {"kind", "delta", "k"}
_SMOOTHED_KEYS = {"k", "log_space", "epsilon"}
_RUN_KEYS = {"repetitions", "negatives_grid", "timing", "out"}
_SECTIONS = {"synth", "train", "run"}


def _require_mapping(value, where: str) -> dict:
    if not isinstance(value, dict):
        raise ValueError(f"section '{where}' must be a mapping")
    return value


def _check_keys(mapping: dict, allowed: set[str], where: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ValueError(f"unknown key '{sorted(unknown)[0]}' in section '{where}'")


def _parse_step(raw, where: str) -> StepConfig:
    raw = _require_mapping(raw, where)
    _check_keys(raw, _STEP_KEYS, where)
    kwargs = {k: raw[k] for k in ("delta", "k") if k in raw}
    return StepConfig(kind=raw.get("kind", "heaviside"), **kwargs)


def _parse_train(name: str, raw) -> TrainConfig:
    where = f"train.{name}"
    raw = _require_mapping(raw, where)
    _check_keys(raw, _TRAIN_KEYS, where)
    opts = GradOptions(
        interpolated=bool(raw.get("interpolated", False)),
        prune_trivial_negatives=bool(raw.get("prune_trivial_negatives", True)),
        normalize_by_positives=bool(raw.get("normalize_by_positives", True)),
    )
    smoothed = SmoothedApConfig()
    if "smoothed" in raw:
        sm = _require_mapping(raw["smoothed"], f"{where}.smoothed")
        _check_keys(sm, _SMOOTHED_KEYS, f"{where}.smoothed")
        smoothed = SmoothedApConfig(
            k=float(sm.get("k", 0.5)),
            log_space=bool(sm.get("log_space", False)),
            epsilon=float(sm.get("epsilon", 1e-2)),
        )
    step_cfg = _parse_step(raw["step"], f"{where}.step") if "step" in raw else StepConfig()
    return TrainConfig(
        loss_kind=name,
        step_size=None if raw.get("step_size") is None else float(raw["step_size"]),
        max_iters=int(raw.get("max_iters", 1000)),
        step_cfg=step_cfg,
        stop_at_zero_loss=bool(raw.get("stop_at_zero_loss", True)),
        grad_opts=opts,
        smoothed=smoothed,
        update_scope=str(raw.get("update_scope", "joint")),
        seed=int(raw.get("seed", 0)),
    )


def load_spec(path: str | Path, seed: int | None, out: str | None) -> ExperimentSpec:
    """Load an experiment spec from a YAML config file.

    Top-level sections are ``synth``, ``train`` (one sub-mapping per loss
    kind), and ``run``.  Any unknown key is a validation error.  ``seed``
    and ``out`` given on the command line override the file.
    """
    path = Path(path)
    if not path.exists():
        raise OSError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ValueError(f"config {path} is not valid YAML: {exc}") from exc
    raw = _require_mapping(raw if raw is not None else {}, "<config>")
    _check_keys(raw, _SECTIONS, "<config>")

    synth_raw = _require_mapping(raw.get("synth", {}), "synth")
    _check_keys(synth_raw, _SYNTH_KEYS, "synth")
    synth = SynthConfig(**synth_raw)
    if seed is not None:
        synth = replace(synth, seed=seed)

    train_raw = _require_mapping(raw.get("train", {}), "train")
    if not train_raw:
        raise ValueError("config must define at least one loss under 'train'")
    train = {name: _parse_train(name, cfg) for name, cfg in train_raw.items()}

    run_raw = _require_mapping(raw.get("run", {}), "run")
    _check_keys(run_raw, _RUN_KEYS, "run")
    grid = run_raw.get("negatives_grid")
    return ExperimentSpec(
        synth=synth,
        train=train,
        repetitions=int(run_raw.get("repetitions", 1)),
        output_path=out if out is not None else run_raw.get("out", "runs"),
        negatives_grid=None if grid is None else tuple(int(v) for v in grid),
        timing=bool(run_raw.get("timing", False)),
    )


def _spec_for(args, default_factory) -> ExperimentSpec:
    if args.config is not None:
        return load_spec(args.config, args.seed, args.out)
    spec = default_factory(seed=args.seed if args.seed is not None else 0)
    if args.out is not None:
        spec = replace(spec, output_path=args.out)
    return spec


def _cmd_gradcheck(args) -> int:
    report: GradcheckReport = run_gradcheck(
        batches=args.batches, seed=args.seed if args.seed is not None else 0
    )
    status = "ok" if report.passed else "FAILED"
    print(
        f"gradcheck {status}: {report.batches} batches, "
        f"{report.failures} failures, worst relative error {report.worst_rel_error:.3e}, "
        f"{report.elapsed_s:.1f}s"
    )
    return 0 if report.passed else 1


def _cmd_train(args) -> int:
    spec = _spec_for(args, default_train_spec)
    return _print_rows(run_experiment(spec), spec)


def _cmd_sweep(args) -> int:
    spec = _spec_for(args, default_sweep_spec)
    if spec.negatives_grid is None:
        spec = replace(spec, negatives_grid=(500, 5000, 50000))
    return _print_rows(run_experiment(spec), spec)


def _print_rows(result, spec) -> int:
    for row in result.rows:
        print(
            f"{row[0]}: negatives={row[1]} rep={row[2]} "
            f"final_ap_loss={row[3]:.6g} iterations={row[4]}"
        )
    print(f"wrote results to {spec.output_path}")
    return 0


def _cmd_counterexample(args) -> int:
    out = args.out if args.out is not None else "runs"
    traces = run_counterexample(
        out_dir=out,
        gd_iters=args.gd_iters,
        seed=args.seed if args.seed is not None else 0,
    )
    err = traces["error_driven_ap"]
    gd = traces["smoothed_ap_gd"]
    print(
        f"error_driven_ap: final exact ap_loss={err.ap_loss[-1]:.6g} "
        f"after {err.iterations} iterations"
    )
    print(
        f"smoothed_ap_gd: final exact ap_loss={gd.ap_loss[-1]:.6g}, "
        f"final smooth loss={gd.surrogate[-1]:.6g} after {gd.iterations} iterations"
    )
    print(f"wrote traces to {out}")
    return 0


def _cmd_bounds(args) -> int:
    out = args.out if args.out is not None else "runs"
    rows = run_bounds(
        runs=args.runs,
        u_per_run=args.u_count,
        seed=args.seed if args.seed is not None else 0,
        out_dir=out,
    )
    violations = sum(1 for row in rows if not row[-1])
    slack = surrogate_domination_slack(seed=args.seed if args.seed is not None else 0)
    print(
        f"bound checks: {len(rows)} comparators, {violations} violations; "
        f"surrogate domination slack {slack:.3e}"
    )
    print(f"wrote bounds table to {out}")
    return 0 if violations == 0 and slack >= 0 else 1


def _cmd_bench(args) -> int:
    spec = _spec_for(args, default_bench_spec)
    result = bench_acceleration(spec)
    first = [r[1] for r in result.timeline[: max(len(result.timeline) // 10, 1)]]
    last = [r[1] for r in result.timeline[-max(len(result.timeline) // 10, 1) :]]
    print(
        f"bench: {len(result.timeline)} iterations; median pruned-path time "
        f"first 10% {np.median(first) / 1e6:.3f}ms -> last 10% {np.median(last) / 1e6:.3f}ms"
    )
    print(f"wrote bench tables to {spec.output_path}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="ranklosslab", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    def add(name: str, help_text: str):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="YAML experiment config")
        p.add_argument("--seed", type=int, default=None, help="override the base seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--format", default="csv", choices=("csv",), help="output format")
        return p

    add("gradcheck", "run the gradient oracle-equivalence suite").add_argument(
        "--batches", type=int, default=500
    )
    add("train", "run one training experiment")
    add("sweep", "run the imbalance-ratio sweep")
    add("counterexample", "reproduce the gradient-descent failure construction").add_argument(
        "--gd-iters", type=int, default=100_000
    )
    bounds = add("bounds", "verify the accumulated-loss bound on inseparable runs")
    bounds.add_argument("--runs", type=int, default=10)
    bounds.add_argument("--u-count", type=int, default=50)
    add("bench", "time the gradient path with and without pruning")
    return parser


_COMMANDS = {
    "gradcheck": _cmd_gradcheck,
    "train": _cmd_train,
    "sweep": _cmd_sweep,
    "counterexample": _cmd_counterexample,
    "bounds": _cmd_bounds,
    "bench": _cmd_bench,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except OSError as exc:
        print(f"ranklosslab: I/O error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"ranklosslab: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
