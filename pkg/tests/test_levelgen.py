"""Generation invariants: graph structure, placement geometry, determinism."""

import pytest

from relbox.boxworld import (
    BACKWARD,
    GEM,
    InvalidConfig,
    LevelConfig,
    PlacementExhausted,
    generate_level,
    level_to_json,
    sample_graph,
)
from relbox.boxworld.levels import _RESERVED_HALO, validate_level
from relbox.rng import Rng, derive_seed

DEFAULT = LevelConfig()


def test_same_config_seed_is_byte_identical():
    for seed in (0, 42, 12345):
        a = generate_level(DEFAULT, seed)
        b = generate_level(DEFAULT, seed)
        assert level_to_json(a) == level_to_json(b)


def test_minimal_level_has_one_box_and_one_loose_key():
    cfg = LevelConfig(solution_length_range=(1, 1), num_distractor_range=(0, 0))
    for seed in range(20):
        level = generate_level(cfg, seed)
        assert len(level.boxes) == 1
        assert level.boxes[0].content_color == GEM
        assert level.boxes[0].on_solution_path
        assert level.key_pos is not None


def test_structural_invariants_hold_across_seeds():
    for mode_cfg in (DEFAULT, LevelConfig(branching_mode=BACKWARD)):
        for seed in range(200):
            validate_level(generate_level(mode_cfg, seed))


def test_lock_sits_right_of_content():
    level = generate_level(DEFAULT, 7)
    for box in level.boxes:
        assert box.lock_cell == (box.row, box.col + 1)
        assert 0 <= box.col + 1 < DEFAULT.room_size


def test_reserved_halo_and_agent_start_are_clear():
    for seed in range(50):
        level = generate_level(DEFAULT, seed)
        cells = level.object_cells()
        assert not (_RESERVED_HALO & set(cells))
        assert level.agent_start not in cells
        assert level.agent_start != (0, 0)


def test_no_two_objects_overlap():
    for seed in range(50):
        level = generate_level(DEFAULT, seed)
        assert len(level.object_cells()) == 2 * len(level.boxes) + 1


def test_solution_lengths_cover_config_range():
    seen = set()
    for seed in range(200):
        seen.add(generate_level(DEFAULT, seed).graph.solution_length)
    assert seen == {1, 2, 3, 4}


def test_forward_branch_locks_reuse_path_colors():
    cfg = LevelConfig(solution_length_range=(3, 3), num_distractor_range=(2, 2))
    for seed in range(50):
        graph = generate_level(cfg, seed).graph
        for branch in graph.distractor_branches:
            assert branch.boxes[0][0] == graph.path_colors[branch.attach_index]


def test_backward_mode_each_key_opens_one_box():
    cfg = LevelConfig(
        branching_mode=BACKWARD,
        solution_length_range=(2, 4),
        num_distractor_range=(1, 3),
    )
    for seed in range(200):
        locks = generate_level(cfg, seed).graph.lock_colors()
        assert len(set(locks)) == len(locks)


def test_gem_is_final_path_content_only():
    for seed in range(50):
        graph = generate_level(DEFAULT, seed).graph
        assert graph.solution_path[-1][1] == GEM
        assert all(content != GEM for _, content in graph.solution_path[:-1])
        for branch in graph.distractor_branches:
            assert all(content != GEM for _, content in branch.boxes)


def test_path_colors_distinct():
    for seed in range(50):
        colors = generate_level(DEFAULT, seed).graph.path_colors
        assert len(set(colors)) == len(colors)


def test_solution_length_override_escapes_config_range():
    level = generate_level(DEFAULT, 5, solution_length=8)
    assert level.graph.solution_length == 8
    with pytest.raises(InvalidConfig):
        generate_level(DEFAULT, 5, solution_length=0)


def test_forced_transition_lands_adjacent_on_path():
    for seed in range(30):
        level = generate_level(DEFAULT, seed, solution_length=3, forced_transition=(4, 9))
        assert (4, 9) in level.graph.path_transitions()
        colors = level.graph.path_colors
        i = colors.index(4)
        assert colors[i + 1] == 9


def test_forced_transition_rejects_bad_input():
    with pytest.raises(ValueError):
        generate_level(DEFAULT, 1, solution_length=1, forced_transition=(4, 9))
    with pytest.raises(ValueError):
        generate_level(DEFAULT, 1, solution_length=3, forced_transition=(4, 4))
    with pytest.raises(ValueError):
        generate_level(DEFAULT, 1, solution_length=3, forced_transition=(4, 99))


def test_graph_and_placement_streams_are_split():
    # same seed, same graph, regardless of placement retries
    level = generate_level(DEFAULT, 99)
    graph = sample_graph(DEFAULT, Rng(derive_seed(99, 1)))
    assert graph == level.graph


@pytest.mark.parametrize(
    "cfg",
    [
        dict(room_size=5),
        dict(solution_length_range=(0, 2)),
        dict(solution_length_range=(3, 2)),
        dict(num_distractor_range=(-1, 2)),
        dict(num_distractor_range=(3, 1)),
        dict(distractor_length=0),
        dict(branching_mode="sideways"),
        dict(encoding="float16"),
        dict(max_steps=0),
        dict(num_colors=7),  # < 4 + 4 worst case
        dict(num_colors=24),  # rgb palette has 20 entries
    ],
)
def test_invalid_configs_rejected(cfg):
    with pytest.raises(InvalidConfig):
        LevelConfig(**cfg).validate()


def test_one_hot_allows_more_than_palette_colors():
    LevelConfig(num_colors=24, encoding="one_hot").validate()


def test_overdense_config_exhausts_placement():
    cfg = LevelConfig(
        room_size=6,
        solution_length_range=(6, 6),
        num_distractor_range=(4, 4),
        num_colors=10,
        encoding="one_hot",
    )
    with pytest.raises(PlacementExhausted):
        generate_level(cfg, 0)
