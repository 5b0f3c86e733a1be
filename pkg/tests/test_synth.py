import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

import plans.synth as synth_mod
from plans.dsl import Cond, IfElse, Program, While, cost, pretty
from plans.noise import NoisySpec
from plans.semantics import satisfies
from plans.synth import (
    DEFAULT_PROP_SCHEDULE,
    BoundsExceeded,
    FilterConfig,
    SynthBounds,
    confidence_levels,
    static_filter,
    subset_size,
    synthesize,
    synthesize_at_bound,
    synthesize_dynamic,
    synthesize_min_cost,
    synthesize_static,
)

from _oracle import oracle_best, ranking_key, satisfying
from _strategies import reference_trace
from conftest import CORRIDOR_PROGRAM, END, L, M, R, corridor_demo


def spec(actions, percs, a_conf=None, p_conf=None, index=0):
    T = len(actions)
    return NoisySpec(
        tuple(actions),
        tuple(a_conf or (1.0,) * T),
        tuple(tuple(r) for r in percs),
        tuple(tuple(r) for r in (p_conf or ((1.0,) * 5,) * T)),
        index,
    )


def demo_spec(demo, per_conf=1.0, action_conf=1.0, actions=None, index=0):
    T = demo.length
    return spec(actions or demo.actions, demo.perceptions,
                (action_conf,) * T, ((per_conf,) * 5,) * T, index)


# ---------------------------------------------------------------- confidence levels

def test_action_conf_is_minimum():
    s = spec((M, M, END), ((True,) * 5,) * 3, a_conf=(0.99, 0.7, 0.95))
    assert confidence_levels(s).action_conf == 0.7


def test_perfect_perceptions():
    s = spec((M, END), ((True,) * 5,) * 2)
    assert confidence_levels(s).per_conf == 1.0


def test_per_conf_minimum_over_both_axes():
    grid = [[1.0] * 5, [1.0] * 5]
    grid[1][3] = 0.41
    s = spec((M, END), ((True,) * 5,) * 2, p_conf=grid)
    assert confidence_levels(s).per_conf == 0.41
    grid = [[0.9] * 5, [0.95] * 5]
    grid[0][4] = 0.6
    s = spec((M, END), ((True,) * 5,) * 2, p_conf=grid)
    assert confidence_levels(s).per_conf == 0.6


def test_default_constants():
    cfg = FilterConfig()
    assert cfg.eps_action == 0.98
    assert cfg.eps_perception == 0.9
    assert cfg.prop_schedule == (1, 0.95, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1)
    assert SynthBounds().max_n == 2 and SynthBounds().r_max == 10 and SynthBounds().max_block_len == 8


@pytest.mark.parametrize("schedule", [(0.9, 0.5), (1.0, 0.5, 0.5), (1.0, 0.5, 0.7), (1.0, 0.0)])
def test_bad_schedules_rejected(schedule):
    with pytest.raises(ValueError):
        FilterConfig(prop_schedule=schedule)


# ---------------------------------------------------------------- static filter

def _with_levels(a, p, index=0):
    return spec((M, END), ((True,) * 5,) * 2, a_conf=(a, 1.0), p_conf=[[p] + [1.0] * 4, [1.0] * 5], index=index)


def test_static_filter_thresholds():
    low_action = _with_levels(0.97, 1.0, 0)
    ok = _with_levels(0.99, 0.91, 1)
    low_percept = _with_levels(0.99, 0.89, 2)
    assert static_filter([low_action, ok, low_percept]) == [ok]
    assert static_filter([]) == []


def test_static_filter_keeps_order():
    specs = [_with_levels(0.99, 0.95, i) for i in range(5)]
    assert static_filter(specs) == specs


@given(
    st.lists(st.tuples(st.floats(0.01, 1.0), st.floats(0.01, 1.0)), max_size=12),
    st.floats(0.01, 1.0), st.floats(0.01, 1.0), st.floats(0.0, 0.5), st.floats(0.0, 0.5),
)
def test_static_filter_monotone(levels, ea, ep, da, dp):
    specs = [_with_levels(a, p, i) for i, (a, p) in enumerate(levels)]
    loose = static_filter(specs, FilterConfig(ea, ep))
    strict = static_filter(specs, FilterConfig(min(1.0, ea + da), min(1.0, ep + dp)))
    assert set(s.source_demo_index for s in strict) <= set(s.source_demo_index for s in loose)


# ---------------------------------------------------------------- bounded synthesis

def test_corridor_program_recovered(corridor_demos):
    assert synthesize_at_bound(corridor_demos, 1) == CORRIDOR_PROGRAM
    assert synthesize_at_bound(corridor_demos, 0) is None
    result = synthesize_min_cost(corridor_demos)
    assert result.found and result.n_used == 1 and result.program == CORRIDOR_PROGRAM


def test_corridor_program_is_unique_best_under_oracle(corridor_demos):
    examples = [(d.perceptions, d.actions) for d in corridor_demos]
    assert not satisfying(examples, 0)
    best = oracle_best(examples, 1)
    assert best == CORRIDOR_PROGRAM
    ties = [p for p in satisfying(examples, 1) if ranking_key(p) == ranking_key(best)]
    assert ties == [best]


def test_single_move_at_bound_zero():
    d = corridor_demo(2)
    assert synthesize_at_bound([d], 0) == Program((M,))
    assert synthesize_min_cost([d]).n_used == 0


def test_min_cost_prefers_straight_line():
    d = corridor_demo(3)
    result = synthesize_min_cost([d])
    assert result.n_used == 0 and result.program == Program((M, M))
    # a loop also fits, but it costs more
    assert synthesize_at_bound([d], 1) is not None


def test_contradictory_specs_unsat():
    d = corridor_demo(3)
    bad = demo_spec(d, actions=(M, L, END), index=1)
    result = synthesize_min_cost([demo_spec(d), bad])
    assert not result.found and result.outcome == "unsat"
    assert result.solver_calls == 3


def test_while_preferred_over_if():
    # one spec where a loop and an if both fit: the loop wins
    percs = ((True,) * 5, (False,) * 5)
    d = spec((M, END), percs)
    p = synthesize_at_bound([d], 1)
    assert isinstance(p.body[0], While)


def test_ifelse_preferred_over_if_when_else_runs():
    open_row = (True,) * 5
    shut_row = (False,) * 5
    # front clear -> move, otherwise turnLeft; loop cannot express it with one statement
    a = spec((M, END), (open_row, open_row))
    b = spec((L, END), (shut_row, shut_row))
    p = synthesize_at_bound([a, b], 1)
    assert isinstance(p.body[0], IfElse) and p.body[0].else_branch is not None


def test_fewer_actions_outside_loops():
    # "move ; while(front): move" also fits; the loop absorbs the leading move
    d = corridor_demo(4)
    p = synthesize_at_bound([d], 1)
    assert p == CORRIDOR_PROGRAM


def test_bounds_exceeded():
    with pytest.raises(BoundsExceeded):
        synthesize_at_bound([corridor_demo(4)], 2, SynthBounds(node_budget=2))
    result = synthesize([corridor_demo(4)], "none", bounds=SynthBounds(node_budget=1))
    assert result.outcome == "bounds_exceeded"


def test_max_block_len_bounds_bodies():
    # the natural loop body has 3 actions; a tighter bound forces shorter bodies
    percs = [(True,) * 5] * 6 + [(False,) * 5]
    d = spec((M, L, R, M, L, R, END), percs)
    assert synthesize_at_bound([d], 1, SynthBounds(max_n=1, max_block_len=3)) is not None
    tight = SynthBounds(max_n=1, max_block_len=2)
    p = synthesize_at_bound([d], 1, tight)
    if p is not None:
        for stmt in p.body:
            if isinstance(stmt, While):
                assert len(stmt.body) <= 2
            elif isinstance(stmt, IfElse):
                assert len(stmt.then_branch) <= 2 and len(stmt.else_branch or ()) <= 2


def test_verify_mode_sound(corridor_demos):
    result = synthesize_min_cost(corridor_demos, verify=True)
    for d in corridor_demos:
        assert satisfies(result.program, d.perceptions, d.actions)


def test_synthesis_deterministic(corridor_demos):
    a = synthesize(corridor_demos, "dynamic")
    b = synthesize(corridor_demos, "dynamic")
    assert (a.program, a.n_used, a.specs_used, a.solver_calls) == (b.program, b.n_used, b.specs_used, b.solver_calls)


# ---------------------------------------------------------------- static / dynamic

def _ten_corridors(per_conf=0.99):
    return [demo_spec(corridor_demo(n), per_conf=per_conf, index=i) for i, n in enumerate(range(1, 11))]


def test_static_identity_on_clean_specs():
    specs = _ten_corridors(1.0)
    a, b = synthesize_static(specs), synthesize_min_cost(specs)
    assert a.program == b.program and a.specs_used == b.specs_used


def test_static_drops_low_confidence_corruption():
    specs = _ten_corridors()
    d = corridor_demo(5)
    specs[4] = demo_spec(d, action_conf=0.6, actions=(M, L, M, M, END), index=4)
    result = synthesize_static(specs)
    assert result.found and result.program == CORRIDOR_PROGRAM
    assert 4 not in result.specs_used and len(result.specs_used) == 9


def test_static_all_filtered_is_unsat():
    specs = [demo_spec(corridor_demo(3), action_conf=0.5)]
    assert synthesize_static(specs).outcome == "unsat"


def test_dynamic_clean_specs_use_everything():
    specs = _ten_corridors()
    result = synthesize_dynamic(specs)
    assert result.found and result.prop == 1
    assert sorted(result.specs_used) == list(range(10))


def test_dynamic_drops_least_confident_inconsistent_spec():
    specs = _ten_corridors()
    d = corridor_demo(4)
    # contradicts the clean length-4 corridor (index 3) on identical perceptions
    specs.append(demo_spec(d, per_conf=0.5, actions=(M, M, L, END), index=10))
    specs = specs[1:]  # keep k = 10
    result = synthesize_dynamic(specs)
    assert result.found and result.prop == 0.9
    assert len(result.specs_used) == math.ceil(0.9 * 10)
    assert 9 not in result.specs_used
    assert result.program == CORRIDOR_PROGRAM


def test_dynamic_confidently_wrong_spec_is_a_known_failure():
    specs = _ten_corridors(0.95)
    d = corridor_demo(4)
    specs[0] = demo_spec(d, per_conf=1.0, actions=(M, M, L, END), index=0)
    result = synthesize_dynamic(specs)
    clean = [s for i, s in enumerate(specs) if i != 0]
    if result.found:
        assert 0 in result.specs_used
        assert not all(satisfies(result.program, s.perception_values, s.action_values) for s in clean)


def test_dynamic_action_filter_applies_first():
    specs = _ten_corridors()
    specs[2] = demo_spec(corridor_demo(3), action_conf=0.9, actions=(L, L, END), index=2)
    result = synthesize_dynamic(specs)
    assert result.prop == 1 and 2 not in result.specs_used


def test_dynamic_ties_keep_input_order(monkeypatch):
    tried = []
    real = synth_mod.synthesize_min_cost

    def spy(specs, bounds, verify=False):
        tried.append([s.source_demo_index for s in specs])
        return real(specs, SynthBounds(max_n=0), verify)

    monkeypatch.setattr(synth_mod, "synthesize_min_cost", spy)
    # no straight-line program fits all corridors, so every step is tried
    specs = [demo_spec(corridor_demo(n), per_conf=0.95, index=i) for i, n in enumerate(range(1, 11))]
    specs[7] = demo_spec(corridor_demo(8), per_conf=0.99, index=7)
    synth_mod.synthesize_dynamic(specs)
    assert tried[0][0] == 7
    assert tried[1] == [7, 0, 1, 2, 3, 4, 5, 6, 8]


def test_dynamic_schedule_nested(monkeypatch):
    tried = []
    real = synth_mod.synthesize_min_cost

    def spy(specs, bounds, verify=False):
        tried.append([s.source_demo_index for s in specs])
        return real(specs, SynthBounds(max_n=0), verify)

    monkeypatch.setattr(synth_mod, "synthesize_min_cost", spy)
    specs = [demo_spec(corridor_demo(n), per_conf=0.9 + 0.01 * ((7 * n) % 10), index=n - 1) for n in range(1, 11)]
    result = synth_mod.synthesize_dynamic(specs)
    assert [len(t) for t in tried] == [10, 9, 8, 7, 6, 5, 4, 3, 2, 1][: len(tried)]
    for bigger, smaller in zip(tried, tried[1:]):
        assert set(smaller) < set(bigger)
    assert result.found  # a single corridor is straight-line


@pytest.mark.parametrize("prop,k,u", [(1, 10, 10), (0.95, 10, 10), (0.9, 10, 9), (0.7, 10, 7), (0.1, 10, 1),
                                      (0.95, 7, 7), (0.3, 7, 3), (0.1, 3, 1)])
def test_subset_size(prop, k, u):
    assert subset_size(prop, k) == u


def test_unknown_mode():
    with pytest.raises(ValueError):
        synthesize([corridor_demo(2)], "greedy")


def test_schedule_default_matches_constants():
    assert DEFAULT_PROP_SCHEDULE[0] == 1 and DEFAULT_PROP_SCHEDULE[-1] == 0.1


# ---------------------------------------------------------------- oracle agreement

TWO_PRIMS = SynthBounds(max_n=1, primitives=(0, 1))
small_actions = st.sampled_from([M, L, R])
small_blocks = st.lists(small_actions, min_size=1, max_size=2).map(tuple)
small_conds = st.builds(Cond, st.integers(0, 1), st.booleans())
small_programs = st.tuples(
    st.lists(small_actions, max_size=2),
    st.one_of(
        st.none(),
        st.builds(While, small_conds, small_blocks),
        st.builds(IfElse, small_conds, small_blocks),
        st.builds(IfElse, small_conds, small_blocks, small_blocks),
    ),
    st.lists(small_actions, max_size=2),
).map(lambda t: Program(tuple(t[0]) + ((t[1],) if t[1] is not None else ()) + tuple(t[2])))


@st.composite
def small_universe(draw):
    """1-3 examples with T <= 5, perceptions over two primitives, from a hidden
    program (satisfiable) or with random targets (usually not)."""
    hidden = draw(small_programs)
    random_targets = draw(st.booleans())
    examples = []
    for _ in range(draw(st.integers(1, 3))):
        T = draw(st.integers(1, 5))
        rows = tuple(
            (draw(st.booleans()), draw(st.booleans()), False, False, True) for _ in range(T)
        )
        if random_targets:
            target = tuple(draw(small_actions) for _ in range(T - 1)) + (END,)
        else:
            trace = reference_trace(hidden, rows)
            assume(trace is not None and len(trace) <= T)
            T = len(trace)
            rows, target = rows[:T], trace
        examples.append((rows, target))
    return examples


@settings(max_examples=300, deadline=None)
@given(small_universe())
def test_completeness_and_tie_break_vs_oracle(examples):
    for n in (0, 1):
        ours = synthesize_at_bound(examples, n, TWO_PRIMS)
        ref = oracle_best(examples, n, primitives=(0, 1))
        assert (ours is None) == (ref is None)
        if ours is not None:
            assert cost(ours) == n
            assert pretty(ours) == pretty(ref)


@settings(max_examples=200, deadline=None)
@given(small_universe())
def test_minimality_and_soundness_vs_oracle(examples):
    result = synthesize_min_cost(examples, TWO_PRIMS, verify=True)
    if result.found:
        assert cost(result.program) == result.n_used
        for n in range(result.n_used):
            assert not satisfying(examples, n, primitives=(0, 1))
    else:
        assert not satisfying(examples, 0, (0, 1)) and not satisfying(examples, 1, (0, 1))
