"""JSON Lines readers and writers for corpora, noisy specs and synthesis results."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Callable, Iterable, Iterator

from .dsl import pretty
from .generate import Task
from .noise import NoisySpec
from .synth import SynthesisResult


class CorpusError(ValueError):
    """A malformed record, reported with its file and line."""


def dumps(obj: Any) -> str:
    return json.dumps(obj, separators=(",", ":"))


def iter_jsonl(path, parse: Callable[[dict], Any] = lambda o: o) -> Iterator[Any]:
    path = Path(path)
    with path.open() as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield parse(json.loads(line))
            except (ValueError, KeyError, TypeError) as exc:
                raise CorpusError(f"{path}:{lineno}: {exc}") from exc


def write_jsonl(path, records: Iterable[dict]) -> None:
    with Path(path).open("w") as fh:
        for rec in records:
            fh.write(dumps(rec) + "\n")


def read_tasks(path) -> list[Task]:
    return list(iter_jsonl(path, Task.from_json))


def write_tasks(path, tasks: Iterable[Task]) -> None:
    write_jsonl(path, (t.to_json() for t in tasks))


def noisy_record(task_seed: int, specs: Iterable[NoisySpec]) -> dict:
    return {"task_seed": task_seed, "specs": [s.to_json() for s in specs]}


def parse_noisy_record(obj: dict) -> tuple[int, list[NoisySpec]]:
    return obj["task_seed"], [NoisySpec.from_json(s) for s in obj["specs"]]


def read_specs(path) -> list[tuple[int, list[NoisySpec]]]:
    """Load a noisy-spec file; a task corpus is accepted as noise-free specs."""

    def parse(obj):
        if "observed" in obj:
            task = Task.from_json(obj)
            return task.seed, [NoisySpec.from_demo(d, i) for i, d in enumerate(task.observed)]
        return parse_noisy_record(obj)

    return list(iter_jsonl(path, parse))


def result_record(task_seed: int, result: SynthesisResult, timing: bool = True) -> dict:
    rec = {
        "task_seed": task_seed,
        "outcome": result.outcome,
        "program": pretty(result.program) if result.program is not None else None,
        "n_used": result.n_used,
        "specs_used": list(result.specs_used),
        "solver_calls": result.solver_calls,
        "prop": result.prop,
    }
    if timing:
        rec["wall_time_ms"] = round(result.wall_time_ms, 3)
        rec["longest_call_ms"] = round(result.longest_call_ms, 3)
    return rec


def read_results(path) -> list[dict]:
    def parse(obj):
        for key in ("task_seed", "outcome", "program"):
            if key not in obj:
                raise KeyError(f"missing field {key!r}")
        return obj

    return list(iter_jsonl(path, parse))
