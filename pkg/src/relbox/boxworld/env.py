"""Step dynamics and observation rendering.

The grid is room_size x room_size. The agent moves in four directions;
moving into a wall, the reserved cell (0, 0), a lock it cannot open, or a
still-locked box content is a no-op that still costs a step. Walking over
a loose key (or an exposed box content) picks it up, replacing any held
key. Walking onto a lock while holding the matching key consumes the key
and removes the lock: +1 for a solution-path box, -1 and immediate
termination for a distractor box. Walking over the exposed gem gives +10
and terminates. Episodes time out at max_steps with reward 0.

Observations are room_size x room_size x C float32 tensors. In rgb mode a
key and its lock share one palette triple, the agent is dark gray, the gem
white, empty cells light gray. In one_hot mode locks use the channel of
their color while key pixels use a fixed scrambled channel, so matching a
key to its lock cannot be read off the channel index; the last three
channels are agent, gem, empty, and each cell is exactly one channel.
The held key is drawn, in key form, in the reserved cell (0, 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from functools import lru_cache

import numpy as np

from ..rng import Rng, derive_seed
from .config import ONE_HOT, SteppedAfterDone
from .graphs import GEM
from .levels import Cell, Level

RUNNING = "running"
GEM_COLLECTED = "gem_collected"
DISTRACTOR_OPENED = "distractor_opened"
TIMEOUT = "timeout"

_RESERVED = (0, 0)


class Action(IntEnum):
    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3


NUM_ACTIONS = len(Action)

_DELTAS = {
    Action.UP: (-1, 0),
    Action.DOWN: (1, 0),
    Action.LEFT: (0, -1),
    Action.RIGHT: (0, 1),
}

# Palette shared by a key and its lock; distinct from the three specials.
PALETTE = np.array(
    [
        (0.894, 0.102, 0.110),
        (0.216, 0.494, 0.722),
        (0.302, 0.686, 0.290),
        (0.596, 0.306, 0.639),
        (1.000, 0.498, 0.000),
        (1.000, 1.000, 0.200),
        (0.651, 0.337, 0.157),
        (0.969, 0.506, 0.749),
        (0.400, 0.761, 0.647),
        (0.988, 0.553, 0.384),
        (0.553, 0.627, 0.796),
        (0.906, 0.541, 0.765),
        (0.651, 0.847, 0.329),
        (1.000, 0.851, 0.184),
        (0.898, 0.769, 0.580),
        (0.702, 0.702, 0.102),
        (0.800, 0.922, 0.773),
        (0.502, 0.000, 0.502),
        (0.000, 0.502, 0.502),
        (0.580, 0.000, 0.827),
    ],
    dtype=np.float32,
)
AGENT_RGB = np.array((0.35, 0.35, 0.35), dtype=np.float32)
GEM_RGB = np.array((1.0, 1.0, 1.0), dtype=np.float32)
BACKGROUND_RGB = np.array((0.85, 0.85, 0.85), dtype=np.float32)


@lru_cache(maxsize=None)
def key_channel_permutation(num_colors: int) -> tuple[int, ...]:
    """Fixed bijection color -> one_hot channel for key pixels.

    Locks stay on their own color channel, so the key-to-lock pairing is an
    arbitrary (but deterministic per num_colors) relabeling the agent has
    to learn rather than read off.
    """
    perm = list(range(num_colors))
    Rng(derive_seed(0x4B3959, num_colors)).shuffle(perm)
    if perm == sorted(perm):  # tiny palettes could shuffle to identity
        perm = perm[1:] + perm[:1]
    return tuple(perm)


@dataclass
class EnvState:
    """Mutable episode state; `removed` holds consumed object cells."""

    level: Level
    agent_pos: Cell
    inventory: int | None
    removed: set[Cell]
    steps_taken: int
    terminated: bool
    outcome: str
    # derived lookup cache, not part of the logical state
    object_map: dict[Cell, tuple] = field(repr=False, compare=False, default_factory=dict)


@dataclass(frozen=True)
class StepResult:
    observation: np.ndarray
    reward: float
    done: bool
    outcome: str


def initial_state(level: Level) -> EnvState:
    return EnvState(
        level=level,
        agent_pos=level.agent_start,
        inventory=None,
        removed=set(),
        steps_taken=0,
        terminated=False,
        outcome=RUNNING,
        object_map=level.object_cells(),
    )


def advance(state: EnvState, action: Action | int) -> tuple[float, bool]:
    """Apply one action without rendering; returns (reward, done)."""
    if state.terminated:
        raise SteppedAfterDone(f"episode already ended with outcome {state.outcome!r}")
    state.steps_taken += 1
    dr, dc = _DELTAS[Action(action)]
    target = (state.agent_pos[0] + dr, state.agent_pos[1] + dc)
    n = state.level.config.room_size
    reward = 0.0
    move = False
    if 0 <= target[0] < n and 0 <= target[1] < n and target != _RESERVED:
        obj = None if target in state.removed else state.object_map.get(target)
        if obj is None:
            move = True
        elif obj[0] == "loose_key":
            state.inventory = obj[1]
            state.removed.add(target)
            move = True
        elif obj[0] == "content":
            box = state.level.boxes[obj[1]]
            if box.lock_cell in state.removed:  # exposed by an opened lock
                if box.content_color == GEM:
                    reward = 10.0
                    state.terminated = True
                    state.outcome = GEM_COLLECTED
                else:
                    state.inventory = box.content_color
                state.removed.add(target)
                move = True
        else:  # lock
            box = state.level.boxes[obj[1]]
            if state.inventory == box.lock_color:
                state.inventory = None
                state.removed.add(target)
                move = True
                if box.on_solution_path:
                    reward = 1.0
                else:
                    reward = -1.0
                    state.terminated = True
                    state.outcome = DISTRACTOR_OPENED
    if move:
        state.agent_pos = target
    if not state.terminated and state.steps_taken >= state.level.config.max_steps:
        state.terminated = True
        state.outcome = TIMEOUT
    return reward, state.terminated


def render(state: EnvState) -> np.ndarray:
    """Pure observation of the current state (room_size, room_size, C)."""
    level = state.level
    cfg = level.config
    n = cfg.room_size
    one_hot = cfg.encoding == ONE_HOT
    if one_hot:
        num_colors = cfg.num_colors
        sigma = key_channel_permutation(num_colors)
        agent_ch, gem_ch, empty_ch = num_colors, num_colors + 1, num_colors + 2
        obs = np.zeros((n, n, num_colors + 3), dtype=np.float32)
        obs[:, :, empty_ch] = 1.0

        def put(cell: Cell, channel: int) -> None:
            obs[cell[0], cell[1], empty_ch] = 0.0
            obs[cell[0], cell[1], channel] = 1.0

        key_of = sigma.__getitem__
        lock_of = int
        gem_mark, agent_mark = gem_ch, agent_ch
    else:
        obs = np.empty((n, n, 3), dtype=np.float32)
        obs[:, :] = BACKGROUND_RGB

        def put(cell: Cell, value) -> None:
            obs[cell[0], cell[1]] = value

        key_of = lock_of = PALETTE.__getitem__
        gem_mark, agent_mark = GEM_RGB, AGENT_RGB

    if level.key_pos not in state.removed:
        put(level.key_pos, key_of(level.key_color))
    for box in level.boxes:
        if box.lock_cell not in state.removed:
            put(box.lock_cell, lock_of(box.lock_color))
        if box.content_cell not in state.removed:
            if box.content_color == GEM:
                put(box.content_cell, gem_mark)
            else:
                put(box.content_cell, key_of(box.content_color))
    if state.inventory is not None:
        put(_RESERVED, key_of(state.inventory))
    put(state.agent_pos, agent_mark)
    return obs


def step(state: EnvState, action: Action | int) -> StepResult:
    reward, done = advance(state, action)
    return StepResult(
        observation=render(state), reward=reward, done=done, outcome=state.outcome
    )


class BoxWorld:
    """Single-episode convenience wrapper around one Level."""

    def __init__(self, level: Level):
        self.level = level
        self.state = initial_state(level)

    def reset(self) -> np.ndarray:
        self.state = initial_state(self.level)
        return render(self.state)

    def step(self, action: Action | int) -> StepResult:
        return step(self.state, action)

    @property
    def done(self) -> bool:
        return self.state.terminated
