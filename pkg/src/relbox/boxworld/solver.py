"""Exact breadth-first solver, used as the test oracle for solvability.

Searches over (agent position, held key, consumed cells) up to the
remaining step budget and returns a shortest action sequence that collects
the gem, or None. Distractor locks are never opened: doing so terminates
the episode without the gem, so no gem-reaching sequence contains it.
Blocked moves are skipped outright since a no-op step never lies on a
shortest path.
"""

from __future__ import annotations

from collections import deque

from .env import Action, EnvState, _DELTAS, _RESERVED, initial_state
from .graphs import GEM
from .levels import Level


def oracle_solve(level: Level) -> list[Action] | None:
    return oracle_solve_from_state(initial_state(level))


def oracle_solve_from_state(state: EnvState) -> list[Action] | None:
    if state.terminated:
        return None
    level = state.level
    n = level.config.room_size
    budget = level.config.max_steps - state.steps_taken

    cells = sorted(level.object_cells())
    bit = {cell: 1 << i for i, cell in enumerate(cells)}
    obj_at = level.object_cells()
    boxes = level.boxes

    start_mask = 0
    for cell in state.removed:
        start_mask |= bit[cell]
    none_code = level.config.num_colors  # inventory encoding: color or "empty"
    start_inv = none_code if state.inventory is None else state.inventory

    def pack(pos: tuple[int, int], inv: int, mask: int) -> int:
        return (mask * (none_code + 1) + inv) * (n * n) + pos[0] * n + pos[1]

    start = (state.agent_pos, start_inv, start_mask)
    parents: dict[int, tuple[int, Action]] = {}
    seen = {pack(*start)}
    frontier = deque([(start, 0)])
    deltas = [(action, _DELTAS[action]) for action in Action]

    goal_key: int | None = None
    while frontier and goal_key is None:
        (pos, inv, mask), depth = frontier.popleft()
        if depth >= budget:
            break
        key_here = pack(pos, inv, mask)
        for action, (dr, dc) in deltas:
            target = (pos[0] + dr, pos[1] + dc)
            if not (0 <= target[0] < n and 0 <= target[1] < n) or target == _RESERVED:
                continue
            obj = None if bit.get(target, 0) & mask else obj_at.get(target)
            if obj is None:
                nxt = (target, inv, mask)
            elif obj[0] == "loose_key":
                nxt = (target, obj[1], mask | bit[target])
            elif obj[0] == "content":
                box = boxes[obj[1]]
                if not mask & bit[box.lock_cell]:
                    continue  # still locked
                if box.content_color == GEM:
                    goal_key = pack(target, inv, mask | bit[target])
                    parents[goal_key] = (key_here, action)
                    break
                nxt = (target, box.content_color, mask | bit[target])
            else:  # lock
                box = boxes[obj[1]]
                if inv != box.lock_color or not box.on_solution_path:
                    continue
                nxt = (target, none_code, mask | bit[target])
            nxt_key = pack(*nxt)
            if nxt_key not in seen:
                seen.add(nxt_key)
                parents[nxt_key] = (key_here, action)
                frontier.append((nxt, depth + 1))

    if goal_key is None:
        return None
    actions: list[Action] = []
    cursor = goal_key
    start_key = pack(*start)
    while cursor != start_key:
        cursor, action = parents[cursor]
        actions.append(action)
    actions.reverse()
    return actions
