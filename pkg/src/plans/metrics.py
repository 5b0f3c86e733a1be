"""Execution, program and sequence accuracy of a predicted program against a task."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from .dsl import Program, canonicalize, token_seq
from .generate import Task
from .semantics import DEFAULT_T_MAX, RunError, run_concrete

OUTCOMES = ("found", "unsat", "bounds_exceeded")


def execution_accuracy(predicted: Program | None, task: Task, t_max: int = DEFAULT_T_MAX) -> bool:
    """True iff ``predicted`` reproduces the ground truth on every unseen start state.

    A run error of the predicted program counts as a behavioural mismatch.
    """
    if predicted is None:
        return False
    for demo in task.unseen:
        expected = run_concrete(task.ground_truth, demo.initial, t_max).actions
        try:
            got = run_concrete(predicted, demo.initial, t_max).actions
        except RunError:
            return False
        if got != expected:
            return False
    return True


def sequence_accuracy(predicted: Program | None, truth: Program) -> bool:
    return predicted is not None and token_seq(predicted) == token_seq(truth)


def program_accuracy(predicted: Program | None, truth: Program) -> bool:
    if predicted is None:
        return False
    return token_seq(canonicalize(predicted)) == token_seq(canonicalize(truth))


@dataclass(frozen=True)
class TaskVerdict:
    task_seed: int
    execution: bool
    program: bool
    sequence: bool
    outcome_class: str
    wall_time_ms: float | None = None
    longest_call_ms: float | None = None

    def to_json(self, timing: bool = True) -> dict:
        rec = asdict(self)
        if not timing or self.wall_time_ms is None:
            rec.pop("wall_time_ms")
            rec.pop("longest_call_ms")
        return rec


def judge(
    task: Task,
    predicted: Program | None,
    outcome: str,
    wall_time_ms: float | None = None,
    longest_call_ms: float | None = None,
) -> TaskVerdict:
    if outcome not in OUTCOMES:
        raise ValueError(f"unknown outcome {outcome!r}")
    if outcome != "found":
        predicted = None
    return TaskVerdict(
        task_seed=task.seed,
        execution=execution_accuracy(predicted, task),
        program=program_accuracy(predicted, task.ground_truth),
        sequence=sequence_accuracy(predicted, task.ground_truth),
        outcome_class=outcome,
        wall_time_ms=wall_time_ms,
        longest_call_ms=longest_call_ms,
    )
