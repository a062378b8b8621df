"""Command line interface.

Every subcommand streams line-delimited inputs, keys all randomness on
explicit seeds, and writes byte-identical output on rerun. Scenario
level work (perturb, augment, predict) can fan out over a process pool
sized by the CAUSAL_PERTURB_WORKERS environment variable; output order
always matches input order, so the worker count never changes bytes.

Exit codes: 0 on success, 1 on usage errors, 2 on data errors.
"""

from __future__ import annotations

import argparse
import functools
import json
import logging
import multiprocessing
import os
import sys
from typing import Callable, Iterable, Iterator

from . import augment as augment_mod
from . import baselines, io, labels as labels_mod, perturb as perturb_mod, report, synthgen
from .errors import CausalPerturbError
from .metrics import DEFAULT_METRIC_CONFIG
from .scenario import Scenario

logger = logging.getLogger("causal_perturb.cli")

WORKERS_ENV = "CAUSAL_PERTURB_WORKERS"


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; this tool reserves 2 for data errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None or raw == "":
        return 1
    try:
        workers = int(raw)
    except ValueError:
        workers = 0
    if workers < 1:
        print(
            f"causal-perturb: error: {WORKERS_ENV} must be a positive integer, got {raw!r}",
            file=sys.stderr,
        )
        raise SystemExit(1)
    return workers


def _map_ordered(fn: Callable, items: Iterable) -> Iterator:
    """Apply fn to each item, preserving order, fanning out when asked."""
    workers = _worker_count()
    if workers == 1:
        yield from map(fn, items)
        return
    with multiprocessing.Pool(workers) as pool:
        yield from pool.imap(fn, items, chunksize=8)


def _dashed(value: str) -> str:
    return value.replace("_", "-")


def _undashed(value: str) -> str:
    return value.replace("-", "_")


# ---------------------------------------------------------------------------
# Per-scenario workers. Top level so they pickle for the process pool.


def _perturb_line(
    scenario: Scenario,
    kind: str,
    label_file: labels_mod.CausalLabelFile | None,
    seed: int,
) -> tuple[str, str]:
    causal = None
    needs_labels = kind != perturb_mod.PerturbationKind.REMOVE_STATIC.value
    if label_file is not None and (needs_labels or scenario.scenario_id in label_file):
        causal = labels_mod.causal_union(label_file, scenario.scenario_id)
    outcome = perturb_mod.apply_perturbation(kind, scenario, causal=causal, seed=seed)
    covariate = json.dumps(io.outcome_to_covariate_record(outcome), separators=(",", ":"))
    return io.dumps_scenario(outcome.perturbed), covariate


def _augment_line(
    scenario: Scenario,
    label_file: labels_mod.CausalLabelFile | None,
    config: augment_mod.AugmentConfig,
) -> str:
    return io.dumps_scenario(augment_mod.augment_scenario(scenario, label_file, config))


def _predict_line(scenario: Scenario, kind: str, k: int, variant: str) -> str:
    pset = baselines.predict_trajectories(kind, scenario, k=k, variant=variant)
    return io.dumps_prediction(pset)


# ---------------------------------------------------------------------------
# Subcommands.


def _cmd_perturb(args) -> int:
    kind = perturb_mod.PerturbationKind(_undashed(args.kind))
    label_file = labels_mod.load_labels(args.labels) if args.labels else None
    if label_file is None and kind != perturb_mod.PerturbationKind.REMOVE_STATIC:
        raise CausalPerturbError(f"perturbation kind {args.kind!r} requires --labels")
    fn = functools.partial(
        _perturb_line, kind=kind.value, label_file=label_file, seed=args.seed
    )
    n = 0
    cov_fh = open(args.covariates_out, "w", encoding="utf-8", newline="\n") if args.covariates_out else None
    try:
        with open(args.out, "w", encoding="utf-8", newline="\n") as out_fh:
            for scenario_line, covariate_line in _map_ordered(fn, io.load_scenarios(args.in_path)):
                out_fh.write(scenario_line + "\n")
                if cov_fh:
                    cov_fh.write(covariate_line + "\n")
                n += 1
    finally:
        if cov_fh:
            cov_fh.close()
    logger.info("perturbed %d scenarios (%s) -> %s", n, kind.value, args.out)
    return 0


def _cmd_evaluate(args) -> int:
    originals = {p.scenario_id: p for p in io.load_predictions(args.predictions_original)}
    perturbed = {p.scenario_id: p for p in io.load_predictions(args.predictions_perturbed)}
    covariates = io.load_covariates(args.covariates) if args.covariates else None
    records, skipped = report.joint_evaluate(
        io.load_scenarios(args.scenarios),
        originals,
        perturbed,
        covariates=covariates,
        config=DEFAULT_METRIC_CONFIG,
    )
    if not records:
        raise CausalPerturbError("no scenario had both prediction variants and a valid future")
    report.write_records_csv(records, args.out_records)
    summary = report.summarize(records)
    report.write_summary_csv(summary, args.out_summary)

    def show(name: str, s) -> None:
        rel = f"{s.relative_pct:.1f}%" if s.relative_pct is not None else "n/a"
        print(
            f"{name}: original {s.mean_original:.6g}  perturbed {s.mean_perturbed:.6g}  "
            f"abs_delta {s.abs_delta:.6g} (+-{s.abs_delta_std:.6g})  relative {rel}  "
            f"improved {100.0 * s.fraction_improved:.1f}%"
        )

    print(f"evaluated {summary.n} scenarios ({len(skipped)} skipped)")
    show("min_ade", summary.min_ade)
    show("min_fde", summary.min_fde)
    print(f"mean iou {summary.mean_iou:.6g}  mean ts_min_ade {summary.mean_ts_min_ade:.6g}")
    return 0


def _cmd_stats(args) -> int:
    label_file = labels_mod.load_labels(args.labels)
    stats = report.causal_stats(io.load_scenarios(args.in_path), label_file)
    report.write_stats_csv(stats, args.out)
    print(f"labeled scenarios: {stats.n_scenarios}")
    print(f"mean causal fraction: {stats.mean_causal_fraction:.6g}")
    print(f"scenes below 30% causal: {100.0 * stats.frac_scenes_below_30pct:.1f}%")
    return 0


def _cmd_slice(args) -> int:
    records = report.read_records_csv(args.records)
    dimension = report.SliceDimension(_undashed(args.dimension))
    if args.edges:
        spec = report.SliceSpec(dimension=dimension, bin_edges=tuple(args.edges))
    else:
        spec = report.SliceSpec.with_default_edges(dimension)
    sliced = report.slice_records(records, spec)
    report.write_slices_csv(sliced, args.out)
    total = sum(b.count for b in sliced.bins) + sliced.na.count
    logger.info(
        "sliced %d records on %s into %d bins (+%d n/a)",
        total, dimension.value, len(sliced.bins), sliced.na.count,
    )
    return 0


def _cmd_augment(args) -> int:
    kind = augment_mod.AugmentKind(_undashed(args.kind))
    label_file = labels_mod.load_labels(args.labels) if args.labels else None
    if kind == augment_mod.AugmentKind.DROP_NONCAUSAL and label_file is None:
        raise CausalPerturbError("augmentation kind 'drop-noncausal' requires --labels")
    config = augment_mod.AugmentConfig(
        kind=kind, drop_probability=args.p, seed=args.seed
    )
    fn = functools.partial(_augment_line, label_file=label_file, config=config)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        n = 0
        for line in _map_ordered(fn, io.load_scenarios(args.in_path)):
            fh.write(line + "\n")
            n += 1
    logger.info("augmented %d scenarios (%s, p=%g) -> %s", n, kind.value, args.p, args.out)
    return 0


def _cmd_predict(args) -> int:
    kind = baselines.PredictorKind(_undashed(args.kind))
    fn = functools.partial(_predict_line, kind=kind.value, k=args.k, variant=args.variant)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        n = 0
        for line in _map_ordered(fn, io.load_scenarios(args.in_path)):
            fh.write(line + "\n")
            n += 1
    logger.info("predicted %d scenarios (%s) -> %s", n, kind.value, args.out)
    return 0


def _cmd_gen_synthetic(args) -> int:
    scenarios, label_file, truths = synthgen.generate_corpus(args.n, seed=args.seed)
    paths = synthgen.write_corpus(args.out_prefix, scenarios, label_file, truths)
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


def _cmd_agreement(args) -> int:
    label_file = labels_mod.load_labels(args.labels)
    histogram = labels_mod.agreement_histogram(label_file, io.load_scenarios(args.scenarios))
    report.write_agreement_csv(histogram, args.out)
    print(f"labeled agents: {histogram.total_agents}")
    print(f"fraction selected by a single labeler: {histogram.fraction_single:.6g}")
    return 0


def _cmd_subsample(args) -> int:
    with open(args.in_path, "r", encoding="utf-8") as fh:
        n_lines = sum(1 for line in fh if line.strip())
    keep = augment_mod.subsample_line_indices(
        n_lines, args.fraction, seed=args.seed, replicate=args.replicate
    )
    n = 0
    with open(args.out, "w", encoding="utf-8", newline="\n") as out_fh:
        for idx, scenario in enumerate(io.load_scenarios(args.in_path)):
            if idx in keep:
                out_fh.write(io.dumps_scenario(scenario) + "\n")
                n += 1
    logger.info("kept %d of %d scenarios -> %s", n, n_lines, args.out)
    return 0


def _comma_floats(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="causal-perturb", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("perturb", help="delete agents from each scenario")
    p.add_argument("--in", dest="in_path", required=True, help="scenario file")
    p.add_argument("--labels", help="causal label file")
    p.add_argument(
        "--kind",
        required=True,
        choices=[_dashed(k.value) for k in perturb_mod.PerturbationKind],
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="perturbed scenario file")
    p.add_argument("--covariates-out", help="sidecar with per-scenario removal covariates")
    p.set_defaults(fn=_cmd_perturb)

    p = sub.add_parser("evaluate", help="pair original and perturbed predictions")
    p.add_argument("--scenarios", required=True)
    p.add_argument("--predictions-original", required=True)
    p.add_argument("--predictions-perturbed", required=True)
    p.add_argument("--covariates")
    p.add_argument("--out-records", required=True)
    p.add_argument("--out-summary", required=True)
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("stats", help="causal label structure of a corpus")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_stats)

    p = sub.add_parser("slice", help="bin evaluation records by a covariate")
    p.add_argument("--records", required=True, help="records CSV from evaluate")
    p.add_argument(
        "--dimension",
        required=True,
        choices=[_dashed(d.value) for d in report.SliceDimension]
        + [d.value for d in report.SliceDimension],
    )
    p.add_argument("--edges", type=_comma_floats, help="comma-separated bin edges")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_slice)

    p = sub.add_parser("augment", help="randomly drop eligible agents")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--labels")
    p.add_argument(
        "--kind",
        required=True,
        choices=[_dashed(k.value) for k in augment_mod.AugmentKind],
    )
    p.add_argument("--p", type=float, default=0.1, help="independent drop probability")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_augment)

    p = sub.add_parser("predict", help="run a baseline predictor")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument(
        "--kind",
        required=True,
        choices=[_dashed(k.value) for k in baselines.PredictorKind],
    )
    p.add_argument("--k", type=int, default=DEFAULT_METRIC_CONFIG.k, help="modes per scenario")
    p.add_argument("--variant", default="original", help="variant tag written to each record")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_predict)

    p = sub.add_parser("gen-synthetic", help="generate a synthetic corpus")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(fn=_cmd_gen_synthetic)

    p = sub.add_parser("agreement", help="labeler agreement histogram")
    p.add_argument("--labels", required=True)
    p.add_argument("--scenarios", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_agreement)

    p = sub.add_parser("subsample", help="deterministic corpus subsample")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--fraction", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replicate", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_subsample)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=logging.INFO,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (CausalPerturbError, ValueError, RuntimeError) as exc:
        print(f"causal-perturb: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"causal-perturb: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
