"""Simulated perception front-end: token corruption with softmax-like confidences."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, NamedTuple

import numpy as np

from .semantics import Demonstration
from .world import Action

N_PERCEPTIONS = 5
_ALL_ACTIONS = tuple(Action)


class TokenPrediction(NamedTuple):
    value: Any  # Action or bool
    confidence: float


@dataclass(frozen=True)
class NoiseConfig:
    action_error_rate: float = 0.0
    perception_error_rate: float = 0.0
    conf_correct: tuple[float, float] = (50.0, 1.0)
    conf_wrong: tuple[float, float] = (5.0, 3.0)
    calibration_leak: float = 0.05

    def __post_init__(self):
        for name in ("action_error_rate", "perception_error_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {rate}")
        if not 0.0 <= self.calibration_leak <= 1.0:
            raise ValueError("calibration_leak must lie in [0, 1]")
        for name in ("conf_correct", "conf_wrong"):
            a, b = getattr(self, name)
            if a <= 0 or b <= 0:
                raise ValueError(f"{name} Beta parameters must be positive")


@dataclass(frozen=True)
class NoisySpec:
    """Predicted action and perception tokens for one demonstration.

    Values and confidences are stored column-wise; ``actions`` and
    ``perceptions`` give the per-token view.
    """

    action_values: tuple[Action, ...]
    action_conf: tuple[float, ...]
    perception_values: tuple[tuple[bool, ...], ...]
    perception_conf: tuple[tuple[float, ...], ...]
    source_demo_index: int = 0

    def __post_init__(self):
        T = len(self.action_values)
        if T == 0:
            raise ValueError("empty spec")
        if len(self.action_conf) != T or len(self.perception_values) != T or len(self.perception_conf) != T:
            raise ValueError("token sequences must share one length")
        for row, crow in zip(self.perception_values, self.perception_conf):
            if len(row) != N_PERCEPTIONS or len(crow) != N_PERCEPTIONS:
                raise ValueError(f"perception rows must have {N_PERCEPTIONS} entries")

    @property
    def length(self) -> int:
        return len(self.action_values)

    @property
    def actions(self) -> list[TokenPrediction]:
        return [TokenPrediction(v, c) for v, c in zip(self.action_values, self.action_conf)]

    @property
    def perceptions(self) -> list[list[TokenPrediction]]:
        return [
            [TokenPrediction(v, c) for v, c in zip(row, crow)]
            for row, crow in zip(self.perception_values, self.perception_conf)
        ]

    @classmethod
    def from_demo(cls, demo: Demonstration, index: int = 0) -> NoisySpec:
        """Noise-free spec with confidence 1 on every token."""
        T = demo.length
        return cls(
            action_values=demo.actions,
            action_conf=(1.0,) * T,
            perception_values=demo.perceptions,
            perception_conf=((1.0,) * N_PERCEPTIONS,) * T,
            source_demo_index=index,
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "source": self.source_demo_index,
            "actions": [{"v": v.value, "c": c} for v, c in zip(self.action_values, self.action_conf)],
            "perceptions": [
                [{"v": v, "c": c} for v, c in zip(row, crow)]
                for row, crow in zip(self.perception_values, self.perception_conf)
            ],
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> NoisySpec:
        return cls(
            action_values=tuple(Action(t["v"]) for t in obj["actions"]),
            action_conf=tuple(float(t["c"]) for t in obj["actions"]),
            perception_values=tuple(tuple(bool(t["v"]) for t in row) for row in obj["perceptions"]),
            perception_conf=tuple(tuple(float(t["c"]) for t in row) for row in obj["perceptions"]),
            source_demo_index=obj.get("source", 0),
        )


def _confidences(rng: np.random.Generator, flipped: np.ndarray, noise: NoiseConfig) -> np.ndarray:
    good = rng.beta(*noise.conf_correct, size=flipped.shape)
    bad = rng.beta(*noise.conf_wrong, size=flipped.shape)
    leak = rng.random(flipped.shape) < noise.calibration_leak
    conf = np.where(flipped & ~leak, bad, good)
    # keep confidences in (0, 1]
    return np.clip(conf, np.finfo(float).tiny, 1.0)


def corrupt(demo: Demonstration, noise: NoiseConfig, rng: np.random.Generator, index: int = 0) -> NoisySpec:
    """Flip tokens of ``demo`` independently and attach confidences.

    A flipped action becomes a uniformly drawn different action (``end``
    included); a flipped perception is negated.
    """
    T = demo.length
    codes = np.array([_ALL_ACTIONS.index(a) for a in demo.actions])
    a_flip = rng.random(T) < noise.action_error_rate
    # offset in 1..5 guarantees a different action
    shifted = (codes + rng.integers(1, len(_ALL_ACTIONS), size=T)) % len(_ALL_ACTIONS)
    a_codes = np.where(a_flip, shifted, codes)
    a_conf = _confidences(rng, a_flip, noise)

    percs = np.array(demo.perceptions, dtype=bool)
    p_flip = rng.random(percs.shape) < noise.perception_error_rate
    p_vals = percs ^ p_flip
    p_conf = _confidences(rng, p_flip, noise)

    return NoisySpec(
        action_values=tuple(_ALL_ACTIONS[c] for c in a_codes),
        action_conf=tuple(float(c) for c in a_conf),
        perception_values=tuple(tuple(bool(v) for v in row) for row in p_vals),
        perception_conf=tuple(tuple(float(c) for c in row) for row in p_conf),
        source_demo_index=index,
    )
