"""Synthesis of Karel policies from noisy perception/action specifications."""

from .dsl import Cond, IfElse, Program, Repeat, While, canonicalize, cost, parse, pretty, token_seq
from .estimators import ConfidenceFilter, ProgramSynthesizer
from .generate import GenConfig, Task, generate_task
from .noise import NoiseConfig, NoisySpec, corrupt
from .semantics import Demonstration, replay_abstract, run_concrete, satisfies
from .synth import (
    FilterConfig,
    SynthBounds,
    SynthesisResult,
    confidence_levels,
    static_filter,
    synthesize,
    synthesize_dynamic,
    synthesize_min_cost,
    synthesize_static,
)
from .world import Action, Heading, WorldState, apply_action, perceive

__version__ = "0.1.0"
