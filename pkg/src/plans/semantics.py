"""Concrete execution on worlds and abstract replay on perception matrices."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any, Sequence

from .dsl import Cond, Program, Repeat, While
from .world import Action, InvalidAction, WorldState, apply_action, perceive

DEFAULT_T_MAX = 20


class RunError(Exception):
    """A concrete run that cannot produce a demonstration.

    ``kind`` is ``"invalid_action"`` or ``"budget"``.
    """

    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


@dataclass(frozen=True)
class Demonstration:
    states: tuple[WorldState, ...]
    actions: tuple[Action, ...]
    perceptions: tuple[tuple[bool, ...], ...]

    def __post_init__(self):
        T = len(self.actions)
        if T == 0 or len(self.states) != T or len(self.perceptions) != T:
            raise ValueError("states, actions and perceptions must share a non-zero length")
        if self.actions[-1] is not Action.END or Action.END in self.actions[:-1]:
            raise ValueError("a demonstration ends with exactly one trailing end")

    @property
    def length(self) -> int:
        return len(self.actions)

    @property
    def initial(self) -> WorldState:
        return self.states[0]

    def validate(self) -> None:
        """Re-check transitions and perceptions against the world model."""
        for i in range(self.length - 1):
            if apply_action(self.states[i], self.actions[i]) != self.states[i + 1]:
                raise ValueError(f"transition mismatch at step {i}")
        for i, s in enumerate(self.states):
            if perceive(s) != self.perceptions[i]:
                raise ValueError(f"perception mismatch at step {i}")

    def to_json(self) -> dict[str, Any]:
        return {
            "states": [s.to_json() for s in self.states],
            "actions": [a.value for a in self.actions],
            "perceptions": [list(p) for p in self.perceptions],
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> Demonstration:
        return cls(
            states=tuple(WorldState.from_json(s) for s in obj["states"]),
            actions=tuple(Action(a) for a in obj["actions"]),
            perceptions=tuple(tuple(bool(v) for v in row) for row in obj["perceptions"]),
        )


def run_concrete(program: Program, initial: WorldState, t_max: int = DEFAULT_T_MAX) -> Demonstration:
    """Execute ``program`` from ``initial``, recording at most ``t_max`` steps (end included)."""
    if t_max < 1:
        raise ValueError("t_max must be at least 1")
    states = [initial]
    actions: list[Action] = []

    def emit(action: Action) -> None:
        # one slot is reserved for the trailing end
        if len(actions) + 2 > t_max:
            raise RunError("budget", f"run exceeds {t_max} steps")
        try:
            nxt = apply_action(states[-1], action)
        except InvalidAction as exc:
            raise RunError("invalid_action", str(exc)) from exc
        actions.append(action)
        states.append(nxt)

    def holds(cond: Cond) -> bool:
        return cond.evaluate(perceive(states[-1]))

    for stmt in program.body:
        if isinstance(stmt, Action):
            emit(stmt)
        elif isinstance(stmt, While):
            while holds(stmt.cond):
                for a in stmt.body:
                    emit(a)
        elif isinstance(stmt, Repeat):
            for _ in range(stmt.count):
                for a in stmt.body:
                    emit(a)
        else:
            branch = stmt.then_branch if holds(stmt.cond) else stmt.else_branch
            for a in branch or ():
                emit(a)
    actions.append(Action.END)
    return Demonstration(
        states=tuple(states),
        actions=tuple(actions),
        perceptions=tuple(perceive(s) for s in states),
    )


class ReplayStatus(enum.Enum):
    MATCH = "match"
    MISMATCH = "mismatch"
    OVERRUN = "overrun"
    LOOP_BOUND = "loop_bound"


@dataclass(frozen=True)
class ReplayOutcome:
    status: ReplayStatus
    emitted: tuple[Action, ...]
    # 0-based timestep at which replay stopped (T on a full match)
    step: int

    @property
    def matched(self) -> bool:
        return self.status is ReplayStatus.MATCH


class _Stop(Exception):
    def __init__(self, status: ReplayStatus):
        self.status = status


def replay_abstract(
    program: Program,
    perceptions: Sequence[Sequence[bool]],
    target: Sequence[Action],
) -> ReplayOutcome:
    """Run ``program`` against recorded perceptions, checking each emitted action.

    A condition evaluated while the next action to emit is the i-th reads
    perception row i. ``target`` may be noisy and need not end with ``end``.
    """
    T = len(target)
    if len(perceptions) != T:
        raise ValueError("perceptions and target must have the same length")
    emitted: list[Action] = []

    def emit(action: Action) -> None:
        i = len(emitted)
        if i >= T:
            raise _Stop(ReplayStatus.OVERRUN)
        emitted.append(action)
        if target[i] is not action:
            raise _Stop(ReplayStatus.MISMATCH)

    def holds(cond: Cond) -> bool:
        i = len(emitted)
        if i >= T:
            raise _Stop(ReplayStatus.OVERRUN)
        return cond.evaluate(perceptions[i])

    try:
        for stmt in program.body:
            if isinstance(stmt, Action):
                emit(stmt)
            elif isinstance(stmt, While):
                iterations = 0
                while holds(stmt.cond):
                    iterations += 1
                    if iterations > T:
                        raise _Stop(ReplayStatus.LOOP_BOUND)
                    for a in stmt.body:
                        emit(a)
            elif isinstance(stmt, Repeat):
                for _ in range(stmt.count):
                    for a in stmt.body:
                        emit(a)
            else:
                branch = stmt.then_branch if holds(stmt.cond) else stmt.else_branch
                for a in branch or ():
                    emit(a)
        emit(Action.END)
        if len(emitted) != T:
            raise _Stop(ReplayStatus.MISMATCH)
    except _Stop as stop:
        return ReplayOutcome(stop.status, tuple(emitted), len(emitted))
    return ReplayOutcome(ReplayStatus.MATCH, tuple(emitted), T)


def satisfies(program: Program, perceptions, target) -> bool:
    return replay_abstract(program, perceptions, target).matched
