"""Random ground-truth programs and demonstration tasks, generated by rejection sampling."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .dsl import Cond, IfElse, Program, Repeat, While, action_count, parse, pretty
from .semantics import DEFAULT_T_MAX, Demonstration, RunError, run_concrete
from .world import BASIC_ACTIONS, GRID_SIZE, PERCEPTIONS, Action, Heading, WorldState


class GenerationExhausted(RuntimeError):
    pass


@dataclass(frozen=True)
class GenConfig:
    k_observed: int = 10
    n_unseen: int = 5
    cost_weights: tuple[float, ...] = (0.3, 0.4, 0.3)
    max_action_tokens: int = 8
    r_max: int = 10
    repeat_prob: float = 0.15
    # geometric block lengths: P(stop) after each action
    block_stop: float = 0.5
    width: int = GRID_SIZE
    height: int = GRID_SIZE
    wall_density: float = 0.1
    marker_density: float = 0.15
    max_initial_markers: int = 3
    t_max: int = DEFAULT_T_MAX
    max_attempts: int = 10_000
    states_per_program: int = 200
    diversity: bool = True

    def __post_init__(self):
        if abs(sum(self.cost_weights) - 1.0) > 1e-9 or any(w < 0 for w in self.cost_weights):
            raise ValueError("cost_weights must be a probability vector")
        if self.k_observed < 1 or self.n_unseen < 0:
            raise ValueError("need at least one observed demonstration")

    @property
    def max_cost(self) -> int:
        return len(self.cost_weights) - 1


@dataclass(frozen=True)
class Task:
    seed: int
    ground_truth: Program
    observed: tuple[Demonstration, ...]
    unseen: tuple[Demonstration, ...]

    def to_json(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "program": pretty(self.ground_truth),
            "observed": [d.to_json() for d in self.observed],
            "unseen": [d.to_json() for d in self.unseen],
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> Task:
        return cls(
            seed=obj["seed"],
            ground_truth=parse(obj["program"]),
            observed=tuple(Demonstration.from_json(d) for d in obj["observed"]),
            unseen=tuple(Demonstration.from_json(d) for d in obj["unseen"]),
        )


# ---------------------------------------------------------------- programs

def _actions(rng: np.random.Generator, config: GenConfig, at_least: int) -> list[Action]:
    n = int(rng.geometric(config.block_stop)) - 1 + at_least
    return [BASIC_ACTIONS[i] for i in rng.integers(len(BASIC_ACTIONS), size=n)]


def _straight(rng, config: GenConfig, at_least: int) -> list:
    block = _actions(rng, config, at_least)
    if block and rng.random() < config.repeat_prob:
        count = int(rng.integers(2, config.r_max + 1))
        return [Repeat(count, tuple(block))]
    return block


def _cond(rng) -> Cond:
    i = int(rng.integers(2 * len(PERCEPTIONS)))
    return Cond(i // 2, bool(i % 2))


def _branching(rng, config: GenConfig):
    kind = int(rng.integers(3))
    cond = _cond(rng)
    body = tuple(_actions(rng, config, 1))
    if kind == 0:
        return While(cond, body)
    if kind == 1:
        return IfElse(cond, body, tuple(_actions(rng, config, 1)))
    return IfElse(cond, body)


def _unrolled_length(program: Program) -> int:
    n = 0
    for stmt in program.body:
        if isinstance(stmt, Repeat):
            n += stmt.count * len(stmt.body)
        elif isinstance(stmt, Action):
            n += 1
    return n


def sample_program(config: GenConfig, rng: np.random.Generator, n: int | None = None) -> Program:
    """Draw a flat program with ``n`` branchings (drawn from ``cost_weights`` if None)."""
    if n is None:
        n = int(rng.choice(len(config.cost_weights), p=config.cost_weights))
    while True:
        if n == 0:
            body = _straight(rng, config, 1)
        else:
            body = _straight(rng, config, 0)
            for _ in range(n):
                body.append(_branching(rng, config))
                body += _straight(rng, config, 0)
        program = Program(tuple(body))
        if (
            action_count(program) <= config.max_action_tokens
            and _unrolled_length(program) < config.t_max
        ):
            return program


# ---------------------------------------------------------------- worlds

def sample_state(config: GenConfig, rng: np.random.Generator) -> WorldState:
    h, w = config.height, config.width
    walls = rng.random((h, w)) < config.wall_density
    has = rng.random((h, w)) < config.marker_density
    counts = rng.integers(1, config.max_initial_markers + 1, size=(h, w))
    markers = np.where(has & ~walls, counts, 0)
    free = np.flatnonzero(~walls.ravel())
    if free.size == 0:
        walls[0, 0] = False
        free = np.array([0])
    cell = int(free[rng.integers(free.size)])
    heading = (Heading.NORTH, Heading.EAST, Heading.SOUTH, Heading.WEST)[int(rng.integers(4))]
    return WorldState(
        width=w,
        height=h,
        walls=tuple(tuple(bool(v) for v in row) for row in walls),
        markers=tuple(tuple(int(v) for v in row) for row in markers),
        agent_row=cell // w,
        agent_col=cell % w,
        heading=heading,
    )


# ---------------------------------------------------------------- coverage

def branch_outcomes(program: Program, demo: Demonstration) -> list[bool | None]:
    """Entry outcome of each top-level statement's condition in ``demo``.

    For a ``while`` this is the first evaluation (was the loop entered);
    non-branching statements report None.
    """
    i = 0
    out: list[bool | None] = []
    for stmt in program.body:
        if isinstance(stmt, Action):
            i += 1
            out.append(None)
        elif isinstance(stmt, Repeat):
            i += stmt.count * len(stmt.body)
            out.append(None)
        elif isinstance(stmt, While):
            first = stmt.cond.evaluate(demo.perceptions[i])
            out.append(first)
            while stmt.cond.evaluate(demo.perceptions[i]):
                i += len(stmt.body)
        else:
            taken = stmt.cond.evaluate(demo.perceptions[i])
            out.append(taken)
            i += len(stmt.then_branch if taken else (stmt.else_branch or ()))
    return out


def is_diverse(program: Program, demos) -> bool:
    """Every branching statement is seen both taken and not taken across ``demos``."""
    seen = [set() for _ in program.body]
    for demo in demos:
        for s, outcome in zip(seen, branch_outcomes(program, demo)):
            if outcome is not None:
                s.add(outcome)
    return all(
        len(s) == 2
        for s, stmt in zip(seen, program.body)
        if isinstance(stmt, (While, IfElse))
    )


# ---------------------------------------------------------------- tasks

def generate_task(config: GenConfig, seed: int) -> Task:
    """Deterministic task for ``seed``; raises GenerationExhausted past the attempt budget."""
    rng = np.random.default_rng(seed)
    n = int(rng.choice(len(config.cost_weights), p=config.cost_weights))
    need = config.k_observed + config.n_unseen
    attempts = 0
    while attempts < config.max_attempts:
        program = sample_program(config, rng, n)
        demos: list[Demonstration] = []
        starts: set[WorldState] = set()
        for _ in range(config.states_per_program):
            if attempts >= config.max_attempts or len(demos) == need:
                break
            attempts += 1
            state = sample_state(config, rng)
            if state in starts:
                continue
            try:
                demo = run_concrete(program, state, config.t_max)
            except RunError:
                continue
            starts.add(state)
            demos.append(demo)
        if len(demos) < need:
            continue
        observed = demos[:config.k_observed]
        if config.diversity and not is_diverse(program, observed):
            continue
        return Task(seed, program, tuple(observed), tuple(demos[config.k_observed:]))
    raise GenerationExhausted(f"no valid task for seed {seed} within {config.max_attempts} attempts")

