"""Command line interface: ``plans generate | corrupt | synth | eval | bench | experiment``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .experiment import (
    bench,
    corrupt_task,
    evaluate,
    generate_corpus,
    k_sweep,
    run_experiment,
    summarize,
    synthesize_all,
)
from .generate import GenConfig, GenerationExhausted
from .jsonio import (
    CorpusError,
    dumps,
    noisy_record,
    read_results,
    read_specs,
    read_tasks,
    result_record,
    write_jsonl,
    write_tasks,
)
from .noise import NoiseConfig
from .synth import (
    DEFAULT_EPS_ACTION,
    DEFAULT_EPS_PERCEPTION,
    DEFAULT_PROP_SCHEDULE,
    MODES,
    FilterConfig,
    SynthBounds,
)

log = logging.getLogger("plans")

EXIT_TASK_ERROR = 2


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _schedule_text(schedule) -> str:
    return "[" + ", ".join(f"{p:g}" for p in schedule) + "]"


def _add_noise_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--action-err", type=float, default=0.03, help="per-token action flip rate (default: 0.03)")
    p.add_argument("--per-err", type=float, default=0.03, help="per-token perception flip rate (default: 0.03)")
    p.add_argument("--conf-correct", type=_floats, default=NoiseConfig().conf_correct,
                   help="Beta(a,b) for confidences of untouched tokens, as 'a,b' (default: 50,1)")
    p.add_argument("--conf-wrong", type=_floats, default=NoiseConfig().conf_wrong,
                   help="Beta(a,b) for confidences of flipped tokens, as 'a,b' (default: 5,3)")
    p.add_argument("--leak", type=float, default=NoiseConfig().calibration_leak,
                   help="fraction of flipped tokens given a high confidence (default: 0.05)")


def _noise(args) -> NoiseConfig | None:
    if getattr(args, "clean", False):
        return None
    return NoiseConfig(
        action_error_rate=args.action_err,
        perception_error_rate=args.per_err,
        conf_correct=tuple(args.conf_correct),
        conf_wrong=tuple(args.conf_wrong),
        calibration_leak=args.leak,
    )


def _add_synth_args(p: argparse.ArgumentParser, modes=MODES, default_mode="dynamic") -> None:
    p.add_argument("--mode", choices=modes, default=default_mode,
                   help=f"confidence filtering: {', '.join(modes)} (default: {default_mode})")
    p.add_argument("--eps-a", type=float, default=DEFAULT_EPS_ACTION,
                   help=f"action confidence threshold (default: {DEFAULT_EPS_ACTION})")
    p.add_argument("--eps-p", type=float, default=DEFAULT_EPS_PERCEPTION,
                   help=f"perception confidence threshold, static mode (default: {DEFAULT_EPS_PERCEPTION})")
    p.add_argument("--prop-schedule", type=_floats, default=DEFAULT_PROP_SCHEDULE,
                   help="comma-separated proportions of demonstrations kept by dynamic filtering "
                        f"(default: {_schedule_text(DEFAULT_PROP_SCHEDULE)})")
    p.add_argument("--max-n", type=int, default=SynthBounds().max_n,
                   help="maximum number of if/while statements (default: 2)")
    p.add_argument("--max-block-len", type=int, default=SynthBounds().max_block_len,
                   help="maximum actions in a control-flow body (default: 8)")
    p.add_argument("--node-budget", type=int, default=SynthBounds().node_budget,
                   help="search states allowed per solver call (default: 10^8)")
    p.add_argument("--parallel", type=int, default=1, help="worker processes (default: 1)")


def _filter(args) -> FilterConfig:
    return FilterConfig(args.eps_a, args.eps_p, tuple(args.prop_schedule))


def _bounds(args) -> SynthBounds:
    return SynthBounds(max_n=args.max_n, max_block_len=args.max_block_len, node_budget=args.node_budget)


def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------- commands

def cmd_generate(args) -> int:
    config = GenConfig(
        k_observed=args.k,
        n_unseen=args.unseen,
        cost_weights=args.cost_weights,
        wall_density=args.wall_density,
        marker_density=args.marker_density,
    )
    tasks = generate_corpus(config, args.tasks, args.seed, args.parallel)
    write_tasks(args.out, tasks)
    log.info("wrote %d tasks to %s", len(tasks), args.out)
    return 0


def cmd_corrupt(args) -> int:
    noise = _noise(args)
    tasks = read_tasks(args.inp)
    write_jsonl(args.out, (noisy_record(t.seed, corrupt_task(t, noise, args.seed)) for t in tasks))
    log.info("wrote noisy specs for %d tasks to %s", len(tasks), args.out)
    return 0


def cmd_synth(args) -> int:
    records = read_specs(args.specs)
    results = synthesize_all([specs for _, specs in records], args.mode, _filter(args), _bounds(args), args.parallel)
    write_jsonl(args.out, (
        result_record(seed, r, timing=not args.no_timing) for (seed, _), r in zip(records, results)
    ))
    counts: dict[str, int] = {}
    for r in results:
        counts[r.outcome] = counts.get(r.outcome, 0) + 1
    log.info("synthesized %d tasks: %s", len(results), counts)
    return 0


def cmd_eval(args) -> int:
    tasks = read_tasks(args.tasks)
    if args.k_sweep:
        if not args.specs:
            log.error("--k-sweep needs --specs")
            return EXIT_TASK_ERROR
        spec_sets = dict(read_specs(args.specs))
        rows = k_sweep(tasks, [spec_sets[t.seed] for t in tasks], args.k_sweep,
                       args.mode, _filter(args), _bounds(args), args.parallel)
        with open(args.out, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["k", "execution_acc", "program_acc", "sequence_acc"])
            writer.writeheader()
            writer.writerows(rows)
        return 0
    if not args.results:
        log.error("eval needs --results (or --k-sweep with --specs)")
        return EXIT_TASK_ERROR
    results = read_results(args.results)
    try:
        verdicts = evaluate(tasks, results, args.parallel)
    except KeyError as exc:
        log.error("%s", exc)
        return EXIT_TASK_ERROR
    report = summarize([verdicts], mode=args.mode_label)
    _write_json(args.out, report)
    verdict_path = args.verdicts or str(Path(args.out).with_suffix("")) + ".verdicts.jsonl"
    write_jsonl(verdict_path, (v.to_json() for v in verdicts))
    print(dumps({k: report[k]["mean"] for k in ("execution_acc", "program_acc", "sequence_acc")}))
    return 0


def cmd_bench(args) -> int:
    tasks = read_tasks(args.tasks)
    summary = bench(tasks, _noise(args), args.mode, args.seed, _filter(args), _bounds(args), args.parallel)
    rows = [
        ("Inference of specifications (simulated)", summary["inference_of_specifications_s"]),
        ("Longest solver call (mean)", summary["longest_solver_call_s"]),
        ("Longest solver call (max)", summary["max_longest_solver_call_s"]),
    ]
    for label, secs in rows:
        print(f"{label:<42} {secs:10.4f}s")
    if args.out:
        _write_json(args.out, summary)
    return 0


def cmd_experiment(args) -> int:
    tasks = read_tasks(args.tasks)
    modes = MODES if args.mode == "all" else (args.mode,)
    out = {}
    for mode in modes:
        report = run_experiment(tasks, _noise(args), mode, _bounds(args), args.seeds,
                                _filter(args), args.parallel)
        out[mode] = report.summary
        s = report.summary
        print(f"{mode:<8} execution {s['execution_acc']['mean']:6.2f} ± {s['execution_acc']['std']:.2f}  "
              f"program {s['program_acc']['mean']:6.2f} ± {s['program_acc']['std']:.2f}  "
              f"sequence {s['sequence_acc']['mean']:6.2f} ± {s['sequence_acc']['std']:.2f}")
    if args.out:
        _write_json(args.out, out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plans", description="Program synthesis from noisy demonstration specs.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a task corpus (JSONL)")
    p.add_argument("--tasks", type=int, required=True)
    p.add_argument("--seed", type=int, default=0, help="task i uses seed SEED + i")
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=10, help="observed demonstrations per task (default: 10)")
    p.add_argument("--unseen", type=int, default=5, help="held-out demonstrations per task (default: 5)")
    p.add_argument("--cost-weights", type=_floats, default=GenConfig().cost_weights,
                   help="probabilities of 0, 1, 2, ... branchings (default: 0.3,0.4,0.3)")
    p.add_argument("--wall-density", type=float, default=GenConfig().wall_density)
    p.add_argument("--marker-density", type=float, default=GenConfig().marker_density)
    p.add_argument("--parallel", type=int, default=1)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("corrupt", help="simulate noisy token predictions for a corpus")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0, help="noise seed (default: 0)")
    _add_noise_args(p)
    p.set_defaults(func=cmd_corrupt)

    p = sub.add_parser(
        "synth",
        help="synthesize one program per task",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=(
            "filter defaults:\n"
            f"  eps_action = {DEFAULT_EPS_ACTION}\n"
            f"  eps_perception = {DEFAULT_EPS_PERCEPTION}\n"
            f"  prop_schedule = {_schedule_text(DEFAULT_PROP_SCHEDULE)}"
        ),
    )
    p.add_argument("--specs", required=True, help="noisy-spec JSONL, or a task corpus for noise-free specs")
    p.add_argument("--out", required=True)
    p.add_argument("--no-timing", action="store_true", help="omit wall-clock fields for reproducible output")
    _add_synth_args(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="score synthesis results")
    p.add_argument("--tasks", required=True)
    p.add_argument("--results")
    p.add_argument("--out", required=True)
    p.add_argument("--verdicts", help="per-task verdict JSONL (default: next to --out)")
    p.add_argument("--mode-label", default=None, help="mode recorded in the report")
    p.add_argument("--k-sweep", type=_ints, default=None,
                   help="comma-separated k values; re-synthesizes from --specs and writes CSV to --out")
    p.add_argument("--specs")
    _add_synth_args(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="timing summary: spec inference vs longest solver call")
    p.add_argument("--tasks", required=True)
    p.add_argument("--seed", type=int, default=0, help="noise seed (default: 0)")
    p.add_argument("--out")
    _add_noise_args(p)
    _add_synth_args(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("experiment", help="corrupt, synthesize and score over several noise seeds")
    p.add_argument("--tasks", required=True)
    p.add_argument("--seeds", type=_ints, default=(0, 1, 2))
    p.add_argument("--out")
    p.add_argument("--clean", action="store_true",
                   help="use the exact demonstrations at confidence 1 instead of simulated noise")
    _add_noise_args(p)
    _add_synth_args(p, modes=(*MODES, "all"), default_mode="all")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (CorpusError, FileNotFoundError, GenerationExhausted) as exc:
        log.error("%s", exc)
        return EXIT_TASK_ERROR


if __name__ == "__main__":
    sys.exit(main())
