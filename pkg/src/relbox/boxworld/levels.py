"""Level realization: placing a sampled graph onto the grid, plus JSON I/O.

Placement is rejection sampling. Distinct structures (each two-cell box,
the loose key) keep a Chebyshev gap of at least 2 so adjacent colored
pixels always belong to the same box and the agent can walk between
structures. Cell (0, 0) is reserved for the inventory pixel; colored
objects also avoid its 8-neighborhood so the drawn inventory key never
reads as part of a box. A layout is accepted only if all free cells form
one connected component, which (with the gap rule) makes every object
reachable; obstacles only disappear during play, so the check need only
hold at generation time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterator

from ..rng import Rng, derive_seed
from .config import InvalidConfig, LevelConfig, PlacementExhausted
from .graphs import GEM, Branch, LevelGraph, sample_graph

LEVEL_FORMAT_VERSION = 1
PLACEMENT_RETRY_BOUND = 10_000
_TRIES_PER_STRUCTURE = 20
_RESERVED = (0, 0)
# (0,0) plus its 8-neighborhood, barred to colored object pixels
_RESERVED_HALO = {(0, 0), (0, 1), (1, 0), (1, 1)}

Cell = tuple[int, int]


@dataclass(frozen=True)
class PlacedBox:
    box_id: int
    lock_color: int
    content_color: int  # GEM for the final solution box
    row: int
    col: int  # content cell; the lock sits at (row, col + 1)
    on_solution_path: bool

    @property
    def content_cell(self) -> Cell:
        return (self.row, self.col)

    @property
    def lock_cell(self) -> Cell:
        return (self.row, self.col + 1)


@dataclass(frozen=True)
class Level:
    config: LevelConfig
    seed: int
    graph: LevelGraph
    boxes: tuple[PlacedBox, ...]
    key_pos: Cell  # the single initial loose key (color = first path color)
    agent_start: Cell

    @property
    def key_color(self) -> int:
        return self.graph.path_colors[0]

    def object_cells(self) -> dict[Cell, tuple]:
        """Static cell -> object map: ("loose_key", color) | ("lock", box_id)
        | ("content", box_id)."""
        cells: dict[Cell, tuple] = {self.key_pos: ("loose_key", self.key_color)}
        for box in self.boxes:
            cells[box.content_cell] = ("content", box.box_id)
            cells[box.lock_cell] = ("lock", box.box_id)
        return cells


def _cells_conflict(cells: list[Cell], occupied: list[Cell]) -> bool:
    for r, c in cells:
        for orow, ocol in occupied:
            if abs(r - orow) <= 1 and abs(c - ocol) <= 1:
                return True
    return False


def _free_cells(room_size: int, occupied: set[Cell]) -> set[Cell]:
    return {
        (r, c)
        for r in range(room_size)
        for c in range(room_size)
        if (r, c) != _RESERVED and (r, c) not in occupied
    }


def _neighbors(cell: Cell) -> Iterator[Cell]:
    r, c = cell
    yield r - 1, c
    yield r + 1, c
    yield r, c - 1
    yield r, c + 1


def _connected(free: set[Cell]) -> bool:
    start = next(iter(free))
    seen = {start}
    frontier = [start]
    while frontier:
        cell = frontier.pop()
        for nxt in _neighbors(cell):
            if nxt in free and nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return len(seen) == len(free)


def _place(config: LevelConfig, graph: LevelGraph, rng: Rng):
    """Returns (boxes, key_pos, agent_start) or raises PlacementExhausted."""
    n = config.room_size
    pairs = graph.all_boxes()
    path_len = graph.solution_length
    tries = 0
    while tries < PLACEMENT_RETRY_BOUND:
        occupied: list[Cell] = []
        boxes: list[PlacedBox] = []
        ok = True
        for box_id, (lock, content) in enumerate(pairs):
            for _ in range(_TRIES_PER_STRUCTURE):
                tries += 1
                r = rng.randrange(n)
                c = rng.randrange(n - 1)  # lock at c + 1 must stay inside
                cells = [(r, c), (r, c + 1)]
                if any(cell in _RESERVED_HALO for cell in cells):
                    continue
                if _cells_conflict(cells, occupied):
                    continue
                boxes.append(
                    PlacedBox(
                        box_id=box_id,
                        lock_color=lock,
                        content_color=content,
                        row=r,
                        col=c,
                        on_solution_path=box_id < path_len,
                    )
                )
                occupied.extend(cells)
                break
            else:
                ok = False
                break
        if not ok:
            continue

        key_pos: Cell | None = None
        for _ in range(_TRIES_PER_STRUCTURE):
            tries += 1
            cell = (rng.randrange(n), rng.randrange(n))
            if cell in _RESERVED_HALO or _cells_conflict([cell], occupied):
                continue
            key_pos = cell
            break
        if key_pos is None:
            continue

        occupied_set = set(occupied) | {key_pos}
        free = _free_cells(n, occupied_set)
        # Gap rule should leave every object touchable; reject if not.
        touchable = all(
            any(nb in free for nb in _neighbors(cell)) for cell in occupied_set
        )
        if not touchable or not _connected(free):
            continue
        agent_start = rng.choice(sorted(free))
        return tuple(boxes), key_pos, agent_start
    raise PlacementExhausted(
        f"no valid layout after {PLACEMENT_RETRY_BOUND} placement tries; "
        f"config too dense for room_size={n}"
    )


def generate_level(
    config: LevelConfig,
    seed: int,
    solution_length: int | None = None,
    forced_transition: tuple[int, int] | None = None,
) -> Level:
    """Deterministically build a level from (config, seed).

    The overrides exist for split samplers: `solution_length` pins the path
    length outside the config range, `forced_transition` plants a specific
    (lock, content) pair on the solution path.
    """
    config.validate()
    if solution_length is not None and solution_length < 1:
        raise InvalidConfig(f"solution_length must be >= 1, got {solution_length}")
    # separate streams so graph shape and placement can't alias
    graph_rng = Rng(derive_seed(seed, 1))
    place_rng = Rng(derive_seed(seed, 2))
    graph = sample_graph(
        config, graph_rng, solution_length=solution_length, forced_transition=forced_transition
    )
    boxes, key_pos, agent_start = _place(config, graph, place_rng)
    return Level(
        config=config,
        seed=seed,
        graph=graph,
        boxes=boxes,
        key_pos=key_pos,
        agent_start=agent_start,
    )


def validate_level(level: Level) -> None:
    """Re-check the structural invariants; raises AssertionError on breach."""
    n = level.config.room_size
    cells = level.object_cells()
    assert len(cells) == 2 * len(level.boxes) + 1, "objects must not overlap"
    for cell in cells:
        assert 0 <= cell[0] < n and 0 <= cell[1] < n
        assert cell not in _RESERVED_HALO, "colored pixel inside reserved halo"
    assert level.agent_start not in cells and level.agent_start != _RESERVED
    structures = [[box.content_cell, box.lock_cell] for box in level.boxes]
    structures.append([level.key_pos])
    for i, a in enumerate(structures):
        for b in structures[:i]:
            assert not _cells_conflict(a, b), "structures closer than the gap rule"
    free = _free_cells(n, set(cells))
    assert _connected(free), "free space not connected"
    pairs = level.graph.all_boxes()
    assert len(level.boxes) == len(pairs)
    for box, (lock, content) in zip(level.boxes, pairs):
        assert (box.lock_color, box.content_color) == (lock, content)
        assert box.on_solution_path == (box.box_id < level.graph.solution_length)


def level_to_json(level: Level) -> str:
    """Serialize to the versioned interchange form (stable byte output)."""
    cfg = level.config
    placements: dict[str, dict] = {
        f"{level.key_pos[0]},{level.key_pos[1]}": {
            "kind": "loose_key",
            "color": level.key_color,
        },
        f"{level.agent_start[0]},{level.agent_start[1]}": {"kind": "agent_start"},
    }
    for box in level.boxes:
        placements[f"{box.row},{box.col}"] = {
            "kind": "box_content",
            "color": box.content_color,
            "box_id": box.box_id,
        }
        placements[f"{box.row},{box.col + 1}"] = {
            "kind": "lock",
            "color": box.lock_color,
            "box_id": box.box_id,
        }
    doc = {
        "version": LEVEL_FORMAT_VERSION,
        "config": {
            "room_size": cfg.room_size,
            "solution_length_range": list(cfg.solution_length_range),
            "num_distractor_range": list(cfg.num_distractor_range),
            "distractor_length": cfg.distractor_length,
            "branching_mode": cfg.branching_mode,
            "num_colors": cfg.num_colors,
            "max_steps": cfg.max_steps,
            "encoding": cfg.encoding,
        },
        "seed": level.seed,
        "graph": {
            "solution_path": [list(pair) for pair in level.graph.solution_path],
            "distractor_branches": [
                {"attach_index": br.attach_index, "boxes": [list(b) for b in br.boxes]}
                for br in level.graph.distractor_branches
            ],
        },
        "placements": placements,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def level_from_json(text: str) -> Level:
    doc = json.loads(text)
    version = doc.get("version")
    if version != LEVEL_FORMAT_VERSION:
        raise ValueError(f"unsupported level format version: {version!r}")
    cfg = doc["config"]
    config = LevelConfig(
        room_size=cfg["room_size"],
        solution_length_range=tuple(cfg["solution_length_range"]),
        num_distractor_range=tuple(cfg["num_distractor_range"]),
        distractor_length=cfg["distractor_length"],
        branching_mode=cfg["branching_mode"],
        num_colors=cfg["num_colors"],
        max_steps=cfg["max_steps"],
        encoding=cfg["encoding"],
    )
    graph = LevelGraph(
        solution_path=tuple(tuple(p) for p in doc["graph"]["solution_path"]),
        distractor_branches=tuple(
            Branch(attach_index=br["attach_index"], boxes=tuple(tuple(b) for b in br["boxes"]))
            for br in doc["graph"]["distractor_branches"]
        ),
    )
    key_pos: Cell | None = None
    agent_start: Cell | None = None
    contents: dict[int, tuple[Cell, int]] = {}
    locks: dict[int, tuple[Cell, int]] = {}
    for key, entry in doc["placements"].items():
        r, c = (int(part) for part in key.split(","))
        kind = entry["kind"]
        if kind == "loose_key":
            key_pos = (r, c)
        elif kind == "agent_start":
            agent_start = (r, c)
        elif kind == "box_content":
            contents[entry["box_id"]] = ((r, c), entry["color"])
        elif kind == "lock":
            locks[entry["box_id"]] = ((r, c), entry["color"])
        else:
            raise ValueError(f"unknown placement kind: {kind!r}")
    if key_pos is None or agent_start is None:
        raise ValueError("placements missing loose_key or agent_start")
    if sorted(contents) != sorted(locks) or sorted(contents) != list(range(len(contents))):
        raise ValueError("box ids must pair up and be contiguous")
    path_len = len(graph.solution_path)
    boxes = []
    for box_id in range(len(contents)):
        (crow, ccol), content_color = contents[box_id]
        (lrow, lcol), lock_color = locks[box_id]
        if (lrow, lcol) != (crow, ccol + 1):
            raise ValueError(f"box {box_id}: lock must sit right of its content")
        boxes.append(
            PlacedBox(
                box_id=box_id,
                lock_color=lock_color,
                content_color=content_color,
                row=crow,
                col=ccol,
                on_solution_path=box_id < path_len,
            )
        )
    level = Level(
        config=config,
        seed=doc["seed"],
        graph=graph,
        boxes=tuple(boxes),
        key_pos=key_pos,
        agent_start=agent_start,
    )
    validate_level(level)
    return level
