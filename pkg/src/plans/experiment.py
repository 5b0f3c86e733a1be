"""End-to-end runs: corrupt -> synthesize -> score, aggregated over noise seeds."""

from __future__ import annotations

import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Iterable, Sequence

import numpy as np

from .dsl import parse
from .generate import GenConfig, Task, generate_task
from .jsonio import result_record
from .metrics import TaskVerdict, judge
from .noise import NoiseConfig, NoisySpec, corrupt
from .synth import FilterConfig, SynthBounds, SynthesisResult, synthesize


def parallel_map(fn: Callable, items: Sequence, parallel: int = 1) -> list:
    """Ordered map; with ``parallel > 1`` work is spread over processes."""
    if parallel <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (parallel * 8))
    with ProcessPoolExecutor(max_workers=parallel) as pool:
        return list(pool.map(fn, items, chunksize=chunk))


def generate_corpus(config: GenConfig, n_tasks: int, base_seed: int = 0, parallel: int = 1) -> list[Task]:
    """Task i uses seed ``base_seed + i``, so serial and parallel runs agree."""
    return parallel_map(partial(generate_task, config), [base_seed + i for i in range(n_tasks)], parallel)


def corrupt_task(task: Task, noise: NoiseConfig | None, noise_seed: int = 0) -> list[NoisySpec]:
    """Noisy specs for the observed demos; ``noise=None`` gives exact specs at confidence 1."""
    if noise is None:
        return [NoisySpec.from_demo(d, i) for i, d in enumerate(task.observed)]
    rng = np.random.default_rng([noise_seed, task.seed])
    return [corrupt(d, noise, rng, i) for i, d in enumerate(task.observed)]


def _synth_job(job, mode, filter_config, bounds) -> SynthesisResult:
    return synthesize(job, mode, filter_config, bounds)


def synthesize_all(
    spec_sets: Sequence[Sequence[NoisySpec]],
    mode: str,
    filter_config: FilterConfig = FilterConfig(),
    bounds: SynthBounds = SynthBounds(),
    parallel: int = 1,
) -> list[SynthesisResult]:
    fn = partial(_synth_job, mode=mode, filter_config=filter_config, bounds=bounds)
    return parallel_map(fn, list(spec_sets), parallel)


def _judge_job(pair) -> TaskVerdict:
    task, rec = pair
    program = parse(rec["program"]) if rec.get("program") else None
    return judge(task, program, rec["outcome"], rec.get("wall_time_ms"), rec.get("longest_call_ms"))


def evaluate(tasks: Sequence[Task], results: Sequence[dict], parallel: int = 1) -> list[TaskVerdict]:
    """Score result records (as written by ``plans synth``) against their tasks."""
    by_seed = {r["task_seed"]: r for r in results}
    missing = [t.seed for t in tasks if t.seed not in by_seed]
    if missing:
        raise KeyError(f"no result for task seeds {missing[:5]}")
    return parallel_map(_judge_job, [(t, by_seed[t.seed]) for t in tasks], parallel)


def _stat(values: list[float]) -> dict:
    mean = statistics.fmean(values)
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    return {"mean": mean, "std": std, "per_seed": values}


def _pct(verdicts: Sequence[TaskVerdict], attr: str) -> float:
    return 100.0 * sum(getattr(v, attr) for v in verdicts) / len(verdicts)


def summarize(verdict_sets: Sequence[Sequence[TaskVerdict]], mode: str | None = None, seeds=None) -> dict:
    """Aggregate per-seed verdict lists into one report (percentages)."""
    if not verdict_sets or not verdict_sets[0]:
        raise ValueError("nothing to summarize")
    report: dict = {"mode": mode, "n_tasks": len(verdict_sets[0])}
    if seeds is not None:
        report["seeds"] = list(seeds)
    for name, attr in (("execution_acc", "execution"), ("program_acc", "program"), ("sequence_acc", "sequence")):
        report[name] = _stat([_pct(vs, attr) for vs in verdict_sets])
    outcomes: dict[str, int] = {}
    for vs in verdict_sets:
        for v in vs:
            outcomes[v.outcome_class] = outcomes.get(v.outcome_class, 0) + 1
    report["outcomes"] = dict(sorted(outcomes.items()))
    longest = [v.longest_call_ms for vs in verdict_sets for v in vs if v.longest_call_ms is not None]
    if longest:
        walls = [v.wall_time_ms for vs in verdict_sets for v in vs if v.wall_time_ms is not None]
        report["timing"] = {
            "mean_longest_call_ms": statistics.fmean(longest),
            "max_longest_call_ms": max(longest),
            "mean_wall_time_ms": statistics.fmean(walls),
        }
    return report


@dataclass
class RunReport:
    mode: str
    n_tasks: int
    seeds: tuple[int, ...]
    summary: dict
    verdicts: list[list[TaskVerdict]] = field(repr=False)

    @property
    def execution_acc(self) -> float:
        return self.summary["execution_acc"]["mean"]

    @property
    def program_acc(self) -> float:
        return self.summary["program_acc"]["mean"]

    @property
    def sequence_acc(self) -> float:
        return self.summary["sequence_acc"]["mean"]

    def to_json(self) -> dict:
        return self.summary


def run_experiment(
    tasks: Sequence[Task],
    noise: NoiseConfig | None,
    mode: str,
    bounds: SynthBounds = SynthBounds(),
    seeds: Iterable[int] = (0,),
    filter_config: FilterConfig = FilterConfig(),
    parallel: int = 1,
    timing: bool = False,
) -> RunReport:
    """For each noise seed: corrupt every task, synthesize per ``mode``, score.

    ``noise=None`` feeds the exact demonstrations (confidence 1) instead.
    """
    seeds = tuple(seeds)
    if not seeds:
        raise ValueError("at least one seed is required")
    verdict_sets = []
    for seed in seeds:
        spec_sets = [corrupt_task(t, noise, seed) for t in tasks]
        results = synthesize_all(spec_sets, mode, filter_config, bounds, parallel)
        records = [result_record(t.seed, r, timing) for t, r in zip(tasks, results)]
        verdict_sets.append(evaluate(tasks, records, parallel))
    summary = summarize(verdict_sets, mode, seeds)
    return RunReport(mode, len(tasks), seeds, summary, verdict_sets)


def _bench_job(task: Task, noise: NoiseConfig, noise_seed: int, mode, filter_config, bounds):
    t0 = time.perf_counter()
    specs = corrupt_task(task, noise, noise_seed)
    corrupt_ms = (time.perf_counter() - t0) * 1000
    result = synthesize(specs, mode, filter_config, bounds)
    return corrupt_ms, result.longest_call_ms, result.wall_time_ms, result.solver_calls


def bench(
    tasks: Sequence[Task],
    noise: NoiseConfig,
    mode: str = "dynamic",
    noise_seed: int = 0,
    filter_config: FilterConfig = FilterConfig(),
    bounds: SynthBounds = SynthBounds(),
    parallel: int = 1,
) -> dict:
    """Per-program timing: spec inference (corruption here) and the longest solver call."""
    fn = partial(_bench_job, noise=noise, noise_seed=noise_seed, mode=mode,
                 filter_config=filter_config, bounds=bounds)
    rows = parallel_map(fn, list(tasks), parallel)
    return {
        "mode": mode,
        "n_tasks": len(rows),
        "max_n": bounds.max_n,
        "inference_of_specifications_s": statistics.fmean(r[0] for r in rows) / 1000,
        "longest_solver_call_s": statistics.fmean(r[1] for r in rows) / 1000,
        "max_longest_solver_call_s": max(r[1] for r in rows) / 1000,
        "mean_synthesis_wall_s": statistics.fmean(r[2] for r in rows) / 1000,
        "mean_solver_calls": statistics.fmean(r[3] for r in rows),
    }


def k_sweep(
    tasks: Sequence[Task],
    spec_sets: Sequence[Sequence[NoisySpec]],
    ks: Iterable[int],
    mode: str = "dynamic",
    filter_config: FilterConfig = FilterConfig(),
    bounds: SynthBounds = SynthBounds(),
    parallel: int = 1,
) -> list[dict]:
    """Accuracy when only the first k observed demonstrations are available."""
    rows = []
    for k in ks:
        results = synthesize_all([s[:k] for s in spec_sets], mode, filter_config, bounds, parallel)
        records = [result_record(t.seed, r, False) for t, r in zip(tasks, results)]
        summary = summarize([evaluate(tasks, records, parallel)])
        rows.append({
            "k": k,
            "execution_acc": summary["execution_acc"]["mean"],
            "program_acc": summary["program_acc"]["mean"],
            "sequence_acc": summary["sequence_acc"]["mean"],
        })
    return rows
