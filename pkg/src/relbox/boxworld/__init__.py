"""Box-World: a procedurally generated key-and-lock gridworld."""

from .config import (
    BACKWARD,
    FORWARD,
    ONE_HOT,
    RGB,
    InfeasibleSplit,
    InvalidConfig,
    LevelConfig,
    PlacementExhausted,
    SteppedAfterDone,
)
from .env import Action, BoxWorld, EnvState, StepResult, advance, initial_state, render, step
from .graphs import GEM, Branch, LevelGraph, sample_graph
from .levels import Level, generate_level, level_from_json, level_to_json
from .solver import oracle_solve, oracle_solve_from_state
from .splits import SplitSpec, make_split

__all__ = [
    "Action",
    "BACKWARD",
    "BoxWorld",
    "Branch",
    "EnvState",
    "FORWARD",
    "GEM",
    "InfeasibleSplit",
    "InvalidConfig",
    "Level",
    "LevelConfig",
    "LevelGraph",
    "ONE_HOT",
    "PlacementExhausted",
    "RGB",
    "SplitSpec",
    "SteppedAfterDone",
    "StepResult",
    "advance",
    "generate_level",
    "initial_state",
    "render",
    "step",
    "level_from_json",
    "level_to_json",
    "make_split",
    "oracle_solve",
    "oracle_solve_from_state",
    "sample_graph",
]
