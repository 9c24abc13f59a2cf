"""Color-graph sampling for levels.

A level's logic is a tree over key colors. The solution path is a chain
c_0 -> c_1 -> ... -> c_{L-1} -> gem realized as boxes (lock=c_{i-1},
content=c_i), opened left to right starting from the single loose key c_0.
Distractor branches hang off path nodes and are dead ends.

Forward branching: a branch attached at path node i starts with a box
whose lock color is c_i, so the key c_i matches several locks and opening
the wrong one wastes it. Backward branching: every lock color in the level
is unique (a key opens exactly one box), and branches instead duplicate
*content* colors, so holding a key always identifies the single correct
lock. Branch content colors are fresh, which keeps the solution unique.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..rng import Rng
from .config import BACKWARD, FORWARD, LevelConfig

GEM = -1  # sentinel "content color" of the final solution box


@dataclass(frozen=True)
class Branch:
    attach_index: int  # solution-path node whose color the branch reuses
    boxes: tuple[tuple[int, int], ...]  # (lock_color, content_color) pairs


@dataclass(frozen=True)
class LevelGraph:
    solution_path: tuple[tuple[int, int], ...]  # last content is GEM
    distractor_branches: tuple[Branch, ...]

    @property
    def solution_length(self) -> int:
        return len(self.solution_path)

    @property
    def path_colors(self) -> tuple[int, ...]:
        """c_0..c_{L-1}: the loose key color followed by path box contents."""
        colors = [self.solution_path[0][0]]
        colors.extend(content for _, content in self.solution_path[:-1])
        return tuple(colors)

    def path_transitions(self) -> set[tuple[int, int]]:
        """(lock, content) pairs of solution-path boxes that contain a key."""
        return {(lock, content) for lock, content in self.solution_path if content != GEM}

    def all_boxes(self) -> list[tuple[int, int]]:
        boxes = list(self.solution_path)
        for branch in self.distractor_branches:
            boxes.extend(branch.boxes)
        return boxes

    def lock_colors(self) -> list[int]:
        return [lock for lock, _ in self.all_boxes()]


def sample_graph(
    config: LevelConfig,
    rng: Rng,
    solution_length: int | None = None,
    forced_transition: tuple[int, int] | None = None,
) -> LevelGraph:
    """Draw a random level graph.

    `solution_length` overrides the config range (used by split samplers).
    `forced_transition` plants (lock, content) as one adjacent pair of path
    colors; requires solution_length >= 2 to have a key-content box.
    """
    if solution_length is None:
        solution_length = rng.randint(*config.solution_length_range)
    n_branches = rng.randint(*config.num_distractor_range)
    n_fresh = n_branches * config.distractor_length

    if solution_length + n_fresh > config.num_colors:
        # Caller validated the worst case; per-draw combinations always fit.
        raise AssertionError("color budget exceeded")

    if forced_transition is None:
        colors = rng.sample(range(config.num_colors), solution_length + n_fresh)
        path_colors = colors[:solution_length]
        fresh = colors[solution_length:]
    else:
        a, b = forced_transition
        if a == b or not (0 <= a < config.num_colors and 0 <= b < config.num_colors):
            raise ValueError(f"bad transition pair {forced_transition}")
        if solution_length < 2:
            raise ValueError("planting a transition needs solution_length >= 2")
        slot = rng.randrange(solution_length - 1)  # c_slot = a, c_slot+1 = b
        rest = [c for c in range(config.num_colors) if c not in (a, b)]
        drawn = rng.sample(rest, solution_length - 2 + n_fresh)
        path_colors = drawn[: solution_length - 2]
        path_colors[slot:slot] = [a, b]
        fresh = drawn[solution_length - 2:]

    path = [
        (path_colors[i], path_colors[i + 1] if i + 1 < solution_length else GEM)
        for i in range(solution_length)
    ]

    branches = []
    pos = 0
    for _ in range(n_branches):
        attach = rng.randrange(solution_length)
        chain = fresh[pos : pos + config.distractor_length]
        pos += config.distractor_length
        if config.branching_mode == FORWARD:
            # lock chain: c_attach, e1, e2, ...; contents are fresh keys
            locks = [path_colors[attach]] + chain[:-1]
            boxes = tuple(zip(locks, chain))
        else:
            # unique fresh locks; contents point back into the path
            contents = [path_colors[attach]] + chain[:-1]
            boxes = tuple(zip(chain, contents))
        branches.append(Branch(attach_index=attach, boxes=boxes))

    graph = LevelGraph(solution_path=tuple(path), distractor_branches=tuple(branches))
    _check_graph(graph, config)
    return graph


def _check_graph(graph: LevelGraph, config: LevelConfig) -> None:
    path_colors = graph.path_colors
    assert len(set(path_colors)) == len(path_colors), "path colors must be distinct"
    assert graph.solution_path[-1][1] == GEM
    for lock, content in graph.solution_path[:-1]:
        assert content != GEM
    if config.branching_mode == BACKWARD:
        locks = graph.lock_colors()
        assert len(set(locks)) == len(locks), "backward mode: lock colors unique"
    else:
        # a branch's first lock duplicates its attach color, nothing else
        seen_fresh: set[int] = set(path_colors)
        for branch in graph.distractor_branches:
            assert branch.boxes[0][0] == path_colors[branch.attach_index]
            for _, content in branch.boxes:
                assert content not in seen_fresh, "branch contents must be fresh"
                seen_fresh.add(content)
