"""Bounded synthesis of minimal-control-flow programs from (noisy) I/O examples.

An example pairs a perception matrix (T rows of 5 booleans) with a target
action sequence of length T. Candidate programs are searched per
control-flow bound ``n``; straight-line blocks are read off the examples and
control-flow bodies are taken from the first example that enters them, so
the search is exhaustive over the bounded space without enumerating action
strings blindly.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

from .dsl import Cond, IfElse, Program, While, token_rank
from .noise import NoisySpec
from .semantics import Demonstration, satisfies
from .world import PERCEPTIONS, Action

DEFAULT_EPS_ACTION = 0.98
DEFAULT_EPS_PERCEPTION = 0.9
DEFAULT_PROP_SCHEDULE = (1.0, 0.95, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1)


class BoundsExceeded(RuntimeError):
    """The search at one bound visited more states than its budget allows."""


@dataclass(frozen=True)
class ConfidenceLevels:
    action_conf: float
    per_conf: float


@dataclass(frozen=True)
class FilterConfig:
    eps_action: float = DEFAULT_EPS_ACTION
    eps_perception: float = DEFAULT_EPS_PERCEPTION
    prop_schedule: tuple[float, ...] = DEFAULT_PROP_SCHEDULE

    def __post_init__(self):
        for eps in (self.eps_action, self.eps_perception):
            if not 0.0 < eps <= 1.0:
                raise ValueError(f"threshold {eps} outside (0, 1]")
        sched = tuple(float(p) for p in self.prop_schedule)
        if not sched or sched[0] != 1.0:
            raise ValueError("prop schedule must start at 1")
        if any(b >= a for a, b in zip(sched, sched[1:])) or sched[-1] <= 0:
            raise ValueError("prop schedule must be strictly decreasing and positive")
        object.__setattr__(self, "prop_schedule", sched)


@dataclass(frozen=True)
class SynthBounds:
    max_n: int = 2
    r_max: int = 10
    max_block_len: int = 8
    node_budget: int = 10**8
    primitives: tuple[int, ...] = (0, 1, 2, 3, 4)

    def __post_init__(self):
        if self.max_n < 0:
            raise ValueError("max_n must be non-negative")
        if self.max_block_len < 1:
            raise ValueError("max_block_len must be positive")


@dataclass(frozen=True)
class SynthesisResult:
    program: Program | None
    outcome: str  # "found", "unsat" or "bounds_exceeded"
    n_used: int | None = None
    specs_used: tuple[int, ...] = ()
    solver_calls: int = 0
    call_times_ms: tuple[float, ...] = field(default=(), compare=False)
    wall_time_ms: float = field(default=0.0, compare=False)
    prop: float | None = None

    @property
    def found(self) -> bool:
        return self.outcome == "found"

    @property
    def longest_call_ms(self) -> float:
        return max(self.call_times_ms, default=0.0)


# ---------------------------------------------------------------- confidences

def confidence_levels(spec: NoisySpec) -> ConfidenceLevels:
    """Minimum action-token confidence and minimum over every perception token."""
    return ConfidenceLevels(
        action_conf=min(spec.action_conf),
        per_conf=min(min(row) for row in spec.perception_conf),
    )


def static_filter(specs: Sequence[NoisySpec], config: FilterConfig = FilterConfig()) -> list[NoisySpec]:
    kept = []
    for spec in specs:
        levels = confidence_levels(spec)
        if levels.action_conf >= config.eps_action and levels.per_conf >= config.eps_perception:
            kept.append(spec)
    return kept


def subset_size(prop: float, k: int) -> int:
    """``ceil(prop * k)``, immune to float noise such as 0.7 * 10 = 7.000000000000001."""
    return math.ceil(round(prop * k, 9))


# ---------------------------------------------------------------- examples

def as_example(spec) -> tuple[tuple[tuple[bool, ...], ...], tuple[Action, ...]]:
    """Normalize a NoisySpec, Demonstration or (perceptions, actions) pair."""
    if isinstance(spec, NoisySpec):
        return spec.perception_values, spec.action_values
    if isinstance(spec, Demonstration):
        return spec.perceptions, spec.actions
    percs, actions = spec
    return tuple(tuple(bool(v) for v in row) for row in percs), tuple(actions)


_CODES = {a: i for i, a in enumerate(Action)}
_END = _CODES[Action.END]
_ACTIONS = tuple(Action)
_DEAD_BODY = (_CODES[Action.MOVE],)

# candidate ordering among branching statements at the same position
_KIND_WHILE, _KIND_IFELSE, _KIND_IF = 0, 1, 2

_R_END = token_rank("end")
_R_WHILE = token_rank("while")
_R_IF = token_rank("if")
_R_ELSE = token_rank("else")
_R_NOT = token_rank("not")
_R_OPEN = token_rank("{")
_R_CLOSE = token_rank("}")
_R_ACTION = tuple(token_rank(a.value) for a in Action)


def _block_ranks(body: tuple[int, ...]) -> tuple[int, ...]:
    if len(body) == 1:
        return (_R_ACTION[body[0]],)
    return (_R_OPEN, *(_R_ACTION[a] for a in body), _R_CLOSE)


def _block(body: tuple[int, ...]) -> tuple[Action, ...]:
    return tuple(_ACTIONS[a] for a in body)


class _Search:
    """Memoized search over flat programs with a fixed number of branchings.

    States are (cursor per example, branchings left). Each state's best
    completion is ranked by (branching kinds in order, action tokens outside
    loop bodies, token ranks); the three components compose additively with
    a fixed prefix, so the best completion per state is also the best suffix
    of any optimal program passing through it.
    """

    def __init__(self, examples, bounds: SynthBounds):
        self.bounds = bounds
        self.targets = [tuple(_CODES[a] for a in actions) for _, actions in examples]
        self.lengths = [len(t) for t in self.targets]
        self.conds = [Cond(p, neg) for p in bounds.primitives for neg in (False, True)]
        # per example, per condition: truth value at each row
        self.cond_rows = [
            [tuple((row[c.primitive] != c.negated) for row in percs) for c in self.conds]
            for percs, _ in examples
        ]
        self.cond_ranks = [
            ((_R_NOT,) if c.negated else ()) + (token_rank(PERCEPTIONS[c.primitive]),) for c in self.conds
        ]
        self.memo: dict = {}
        self.construct_cache: dict = {}
        self.nodes = 0

    # -- branch bodies -------------------------------------------------

    def _bodies(self, cur, group):
        """Yield (body, {example: new cursor}) for a non-loop branch taken by ``group``."""
        if not group:
            yield _DEAD_BODY, {}
            return
        j0 = group[0]
        t0, c0 = self.targets[j0], cur[j0]
        limit = min(self.bounds.max_block_len, self.lengths[j0] - c0)
        for L in range(1, limit + 1):
            if t0[c0 + L - 1] == _END:
                break
            body = t0[c0:c0 + L]
            moved = {}
            for j in group:
                c = cur[j]
                if self.targets[j][c:c + L] != body:
                    break
                moved[j] = c + L
            else:
                yield body, moved

    def _loop_bodies(self, cur, ci, group):
        if not group:
            yield _DEAD_BODY, cur
            return
        j0 = group[0]
        t0, c0 = self.targets[j0], cur[j0]
        limit = min(self.bounds.max_block_len, self.lengths[j0] - c0)
        for L in range(1, limit + 1):
            if t0[c0 + L - 1] == _END:
                break
            body = t0[c0:c0 + L]
            nxt = list(cur)
            for j in group:
                t, n, rows = self.targets[j], self.lengths[j], self.cond_rows[j][ci]
                c = cur[j]
                ok = True
                iterations = 0
                while rows[c]:
                    iterations += 1
                    if iterations > n or t[c:c + L] != body:
                        ok = False
                        break
                    c += L
                    if c >= n:
                        ok = False
                        break
                if not ok:
                    break
                nxt[j] = c
            else:
                yield body, tuple(nxt)

    def constructs(self, cur):
        """All single branching statements consistent with every example at ``cur``."""
        cached = self.construct_cache.get(cur)
        if cached is not None:
            return cached
        out = []
        m = len(cur)
        for ci, cond in enumerate(self.conds):
            taken = [j for j in range(m) if self.cond_rows[j][ci][cur[j]]]
            skipped = [j for j in range(m) if not self.cond_rows[j][ci][cur[j]]]
            cranks = self.cond_ranks[ci]
            for body, nxt in self._loop_bodies(cur, ci, taken):
                toks = (_R_WHILE, *cranks, *_block_ranks(body))
                out.append((_KIND_WHILE, 0, toks, While(cond, _block(body)), nxt))
            thens = list(self._bodies(cur, taken))
            elses = list(self._bodies(cur, skipped)) if skipped else []
            for then, moved_then in thens:
                head = (_R_IF, *cranks, *_block_ranks(then))
                for orelse, moved_else in elses:
                    nxt = list(cur)
                    for j, c in moved_then.items():
                        nxt[j] = c
                    for j, c in moved_else.items():
                        nxt[j] = c
                    out.append((
                        _KIND_IFELSE,
                        len(then) + len(orelse),
                        head + (_R_ELSE, *_block_ranks(orelse)),
                        IfElse(cond, _block(then), _block(orelse)),
                        tuple(nxt),
                    ))
                nxt = list(cur)
                for j, c in moved_then.items():
                    nxt[j] = c
                out.append((_KIND_IF, len(then), head, IfElse(cond, _block(then)), tuple(nxt)))
        self.construct_cache[cur] = out
        return out

    # -- search --------------------------------------------------------

    def best(self, cur, k):
        key = (cur, k)
        if key in self.memo:
            return self.memo[key]
        self.nodes += 1
        if self.nodes > self.bounds.node_budget:
            raise BoundsExceeded(f"search exceeded {self.bounds.node_budget} states")
        result = None
        targets, lengths = self.targets, self.lengths
        if all(c < n for c, n in zip(cur, lengths)):
            if k == 0 and all(c == n - 1 and t[c] == _END for c, n, t in zip(cur, lengths, targets)):
                result = (((), 0, (_R_END,)), ())
            a = targets[0][cur[0]]
            if a != _END and all(t[c] == a for t, c in zip(targets, cur)):
                sub = self.best(tuple(c + 1 for c in cur), k)
                if sub is not None:
                    (kinds, outside, toks), items = sub
                    cand = ((kinds, outside + 1, (_R_ACTION[a],) + toks), (_ACTIONS[a],) + items)
                    if result is None or cand[0] < result[0]:
                        result = cand
            if k > 0:
                for kind, outside, ctoks, stmt, nxt in self.constructs(cur):
                    sub = self.best(nxt, k - 1)
                    if sub is None:
                        continue
                    (kinds, sub_out, toks), items = sub
                    cand_key = ((kind,) + kinds, sub_out + outside, ctoks + toks)
                    if result is None or cand_key < result[0]:
                        result = (cand_key, (stmt,) + items)
        self.memo[key] = result
        return result


def synthesize_at_bound(specs, n: int, bounds: SynthBounds = SynthBounds()) -> Program | None:
    """Best program with exactly ``n`` branchings satisfying every spec, or None.

    Raises BoundsExceeded when the search budget runs out.
    """
    examples = [as_example(s) for s in specs]
    if not examples:
        raise ValueError("synthesis needs at least one example")
    for percs, actions in examples:
        if len(percs) != len(actions) or not actions:
            raise ValueError("each example needs equal, non-zero perception and action lengths")
    search = _Search(examples, bounds)
    found = search.best(tuple(0 for _ in examples), n)
    if found is None:
        return None
    return Program(found[1])


def synthesize_min_cost(specs, bounds: SynthBounds = SynthBounds(), verify: bool = False) -> SynthesisResult:
    """Try bounds 0, 1, ..., max_n and return the first program found."""
    start = time.perf_counter()
    times = []
    for n in range(bounds.max_n + 1):
        t0 = time.perf_counter()
        program = synthesize_at_bound(specs, n, bounds)
        times.append((time.perf_counter() - t0) * 1000)
        if program is not None:
            if verify:
                _check_sound(program, specs)
            return SynthesisResult(
                program=program,
                outcome="found",
                n_used=n,
                specs_used=tuple(range(len(specs))),
                solver_calls=len(times),
                call_times_ms=tuple(times),
                wall_time_ms=(time.perf_counter() - start) * 1000,
            )
    return SynthesisResult(
        program=None,
        outcome="unsat",
        solver_calls=len(times),
        call_times_ms=tuple(times),
        wall_time_ms=(time.perf_counter() - start) * 1000,
    )


def _check_sound(program: Program, specs) -> None:
    for i, spec in enumerate(specs):
        percs, actions = as_example(spec)
        if not satisfies(program, percs, actions):
            raise AssertionError(f"synthesized program violates spec {i}: {program}")


def _reindex(result: SynthesisResult, indices: Sequence[int], **extra) -> SynthesisResult:
    used = tuple(indices[i] for i in result.specs_used)
    return SynthesisResult(
        program=result.program,
        outcome=result.outcome,
        n_used=result.n_used,
        specs_used=used if result.found else (),
        solver_calls=result.solver_calls,
        call_times_ms=result.call_times_ms,
        wall_time_ms=result.wall_time_ms,
        **extra,
    )


def synthesize_static(
    specs: Sequence[NoisySpec],
    filter_config: FilterConfig = FilterConfig(),
    bounds: SynthBounds = SynthBounds(),
    verify: bool = False,
) -> SynthesisResult:
    """Drop low-confidence demonstrations once, then search by increasing cost."""
    start = time.perf_counter()
    kept = []
    for i, spec in enumerate(specs):
        lv = confidence_levels(spec)
        if lv.action_conf >= filter_config.eps_action and lv.per_conf >= filter_config.eps_perception:
            kept.append(i)
    if not kept:
        return SynthesisResult(program=None, outcome="unsat")
    result = synthesize_min_cost([specs[i] for i in kept], bounds, verify)
    result = _reindex(result, kept)
    return _with_wall(result, start)


def synthesize_dynamic(
    specs: Sequence[NoisySpec],
    filter_config: FilterConfig = FilterConfig(),
    bounds: SynthBounds = SynthBounds(),
    verify: bool = False,
) -> SynthesisResult:
    """Filter by action confidence, then shed the least perception-confident
    demonstrations along the proportion schedule until synthesis succeeds."""
    start = time.perf_counter()
    levels = [confidence_levels(s) for s in specs]
    survivors = [i for i, lv in enumerate(levels) if lv.action_conf >= filter_config.eps_action]
    # stable sort: ties keep input order
    ranked = sorted(survivors, key=lambda i: -levels[i].per_conf)
    k = len(ranked)
    calls = 0
    times: list[float] = []
    last_u = None
    for prop in filter_config.prop_schedule:
        u = subset_size(prop, k)
        if u == 0 or u == last_u:
            # same subset as the previous step gives the same answer
            continue
        last_u = u
        chosen = ranked[:u]
        result = synthesize_min_cost([specs[i] for i in chosen], bounds, verify)
        calls += result.solver_calls
        times.extend(result.call_times_ms)
        if result.found:
            return SynthesisResult(
                program=result.program,
                outcome="found",
                n_used=result.n_used,
                specs_used=tuple(chosen),
                solver_calls=calls,
                call_times_ms=tuple(times),
                wall_time_ms=(time.perf_counter() - start) * 1000,
                prop=prop,
            )
    return SynthesisResult(
        program=None,
        outcome="unsat",
        solver_calls=calls,
        call_times_ms=tuple(times),
        wall_time_ms=(time.perf_counter() - start) * 1000,
    )


def _with_wall(result: SynthesisResult, start: float) -> SynthesisResult:
    return SynthesisResult(
        program=result.program,
        outcome=result.outcome,
        n_used=result.n_used,
        specs_used=result.specs_used,
        solver_calls=result.solver_calls,
        call_times_ms=result.call_times_ms,
        wall_time_ms=(time.perf_counter() - start) * 1000,
        prop=result.prop,
    )


MODES = ("none", "static", "dynamic")


def synthesize(
    specs: Sequence,
    mode: str = "dynamic",
    filter_config: FilterConfig = FilterConfig(),
    bounds: SynthBounds = SynthBounds(),
    verify: bool = False,
) -> SynthesisResult:
    """Dispatch on filtering mode; a blown search budget becomes an outcome."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    specs = [s if isinstance(s, NoisySpec) else _to_spec(s, i) for i, s in enumerate(specs)]
    try:
        if mode == "none":
            if not specs:
                return SynthesisResult(program=None, outcome="unsat")
            return synthesize_min_cost(specs, bounds, verify)
        if mode == "static":
            return synthesize_static(specs, filter_config, bounds, verify)
        return synthesize_dynamic(specs, filter_config, bounds, verify)
    except BoundsExceeded:
        return SynthesisResult(program=None, outcome="bounds_exceeded")


def _to_spec(spec, index: int) -> NoisySpec:
    if isinstance(spec, Demonstration):
        return NoisySpec.from_demo(spec, index)
    percs, actions = as_example(spec)
    T = len(actions)
    return NoisySpec(actions, (1.0,) * T, percs, ((1.0,) * 5,) * T, index)

