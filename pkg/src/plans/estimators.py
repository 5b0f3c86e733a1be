"""scikit-learn style wrappers around the filters and the synthesizer.

Samples are demonstrations: a ``NoisySpec``, a ``Demonstration`` or a
``(perceptions, actions)`` pair. ``ProgramSynthesizer.fit`` learns one
program from a set of samples; ``predict`` runs it from initial world states.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .noise import N_PERCEPTIONS, NoisySpec
from .semantics import DEFAULT_T_MAX, Demonstration, RunError, run_concrete
from .synth import (
    DEFAULT_EPS_ACTION,
    DEFAULT_EPS_PERCEPTION,
    DEFAULT_PROP_SCHEDULE,
    MODES,
    FilterConfig,
    SynthBounds,
    confidence_levels,
    synthesize,
)
from .world import Action, WorldState


def check_specs(X) -> list[NoisySpec]:
    """Validate and convert a collection of demonstrations to NoisySpecs."""
    if isinstance(X, (NoisySpec, Demonstration)):
        raise TypeError("expected a sequence of demonstrations, got a single one")
    out = []
    for i, x in enumerate(X):
        if isinstance(x, NoisySpec):
            out.append(x)
        elif isinstance(x, Demonstration):
            out.append(NoisySpec.from_demo(x, i))
        else:
            try:
                percs, actions = x
            except (TypeError, ValueError):
                raise TypeError(f"sample {i}: expected NoisySpec, Demonstration or (perceptions, actions)") from None
            percs = np.asarray(percs, dtype=bool)
            if percs.ndim != 2 or percs.shape[1] != N_PERCEPTIONS:
                raise ValueError(f"sample {i}: perceptions must have shape (T, {N_PERCEPTIONS})")
            actions = tuple(a if isinstance(a, Action) else Action(a) for a in actions)
            if len(actions) != percs.shape[0] or not actions:
                raise ValueError(f"sample {i}: perceptions and actions differ in length")
            T = len(actions)
            out.append(NoisySpec(
                actions, (1.0,) * T,
                tuple(tuple(bool(v) for v in row) for row in percs),
                ((1.0,) * N_PERCEPTIONS,) * T, i,
            ))
    return out


def check_states(X) -> list[WorldState]:
    if isinstance(X, WorldState):
        raise TypeError("expected a sequence of WorldState, got a single state")
    states = list(X)
    for i, s in enumerate(states):
        if not isinstance(s, WorldState):
            raise TypeError(f"sample {i}: expected WorldState, got {type(s).__name__}")
    return states


class ConfidenceFilter(TransformerMixin, BaseEstimator):
    """Keep demonstrations whose action and perception confidence levels clear fixed thresholds."""

    def __init__(self, eps_action=DEFAULT_EPS_ACTION, eps_perception=DEFAULT_EPS_PERCEPTION):
        self.eps_action = eps_action
        self.eps_perception = eps_perception

    def _mask(self, specs) -> np.ndarray:
        levels = [confidence_levels(s) for s in specs]
        return np.array(
            [lv.action_conf >= self.eps_action and lv.per_conf >= self.eps_perception for lv in levels],
            dtype=bool,
        )

    def fit(self, X, y=None):
        FilterConfig(self.eps_action, self.eps_perception)
        specs = check_specs(X)
        self.support_ = self._mask(specs)
        self.n_samples_seen_ = len(specs)
        return self

    def transform(self, X) -> list[NoisySpec]:
        check_is_fitted(self, "support_")
        specs = check_specs(X)
        return [s for s, keep in zip(specs, self._mask(specs)) if keep]


class ProgramSynthesizer(BaseEstimator):
    """Learn a minimal-control-flow program from demonstrations.

    Parameters
    ----------
    mode : {"none", "static", "dynamic"}, default="dynamic"
        How unreliable demonstrations are filtered out before synthesis.
    eps_action, eps_perception : float
        Confidence thresholds (``eps_perception`` is only used in static mode).
    prop_schedule : tuple of float
        Proportions of demonstrations kept on successive dynamic attempts.
    max_n : int, default=2
        Maximum number of ``if``/``while`` statements.
    max_block_len : int, default=8
        Maximum actions in a control-flow body.
    t_max : int, default=20
        Step budget when running the learned program in ``predict``.

    Attributes
    ----------
    program_ : Program or None
        The synthesized program, None when no program fits.
    result_ : SynthesisResult
    """

    def __init__(
        self,
        mode="dynamic",
        eps_action=DEFAULT_EPS_ACTION,
        eps_perception=DEFAULT_EPS_PERCEPTION,
        prop_schedule=DEFAULT_PROP_SCHEDULE,
        max_n=2,
        max_block_len=8,
        node_budget=10**8,
        t_max=DEFAULT_T_MAX,
    ):
        self.mode = mode
        self.eps_action = eps_action
        self.eps_perception = eps_perception
        self.prop_schedule = prop_schedule
        self.max_n = max_n
        self.max_block_len = max_block_len
        self.node_budget = node_budget
        self.t_max = t_max

    def fit(self, X, y=None):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        specs = check_specs(X)
        if not specs:
            raise ValueError("fit needs at least one demonstration")
        self.result_ = synthesize(
            specs,
            self.mode,
            FilterConfig(self.eps_action, self.eps_perception, tuple(self.prop_schedule)),
            SynthBounds(max_n=self.max_n, max_block_len=self.max_block_len, node_budget=self.node_budget),
        )
        self.program_ = self.result_.program
        self.n_used_ = self.result_.n_used
        self.specs_used_ = np.array(self.result_.specs_used, dtype=int)
        return self

    def predict(self, X) -> list[tuple[Action, ...] | None]:
        """Action sequence from each initial state; None where the program fails to run."""
        check_is_fitted(self, "result_")
        out = []
        for state in check_states(X):
            if self.program_ is None:
                out.append(None)
                continue
            try:
                out.append(run_concrete(self.program_, state, self.t_max).actions)
            except RunError:
                out.append(None)
        return out

    def score(self, X, y: Sequence[Sequence[Action]]) -> float:
        """Fraction of initial states on which the predicted actions equal ``y`` exactly."""
        pred = self.predict(X)
        y = list(y)
        if len(y) != len(pred):
            raise ValueError("X and y differ in length")
        return float(np.mean([p is not None and tuple(p) == tuple(t) for p, t in zip(pred, y)]))
