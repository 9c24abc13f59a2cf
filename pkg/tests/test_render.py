"""Observation rendering: palettes, one-hot structure, inventory pixel."""

import numpy as np

from relbox.boxworld import (
    Action,
    LevelConfig,
    advance,
    generate_level,
    initial_state,
    oracle_solve,
    render,
)
from relbox.boxworld.env import (
    AGENT_RGB,
    BACKGROUND_RGB,
    GEM_RGB,
    PALETTE,
    key_channel_permutation,
)

RGB_CFG = LevelConfig()
HOT_CFG = LevelConfig(encoding="one_hot")


def test_rgb_shape_and_dtype():
    obs = render(initial_state(generate_level(RGB_CFG, 0)))
    assert obs.shape == (12, 12, 3) and obs.dtype == np.float32


def test_one_hot_every_cell_sums_to_one():
    level = generate_level(HOT_CFG, 1)
    state = initial_state(level)
    for _ in range(10):
        obs = render(state)
        assert obs.shape == (12, 12, HOT_CFG.num_colors + 3)
        np.testing.assert_array_equal(obs.sum(axis=-1), np.ones((12, 12)))
        assert set(np.unique(obs)) <= {0.0, 1.0}
        advance(state, Action.DOWN)


def test_render_is_pure():
    state = initial_state(generate_level(RGB_CFG, 2))
    a, b = render(state), render(state)
    assert a is not b
    np.testing.assert_array_equal(a, b)


def test_rgb_pixel_values():
    level = generate_level(RGB_CFG, 3)
    state = initial_state(level)
    obs = render(state)
    np.testing.assert_array_equal(obs[state.agent_pos], AGENT_RGB)
    np.testing.assert_array_equal(obs[level.key_pos], PALETTE[level.key_color])
    for box in level.boxes:
        np.testing.assert_array_equal(obs[box.lock_cell], PALETTE[box.lock_color])
        if box.content_color >= 0:
            np.testing.assert_array_equal(
                obs[box.content_cell], PALETTE[box.content_color]
            )
        else:
            np.testing.assert_array_equal(obs[box.content_cell], GEM_RGB)
    np.testing.assert_array_equal(obs[0, 0], BACKGROUND_RGB)  # nothing held yet


def test_key_and_lock_share_rgb_triple():
    level = generate_level(RGB_CFG, 4)
    obs = render(initial_state(level))
    # the loose key color equals the first path lock color by construction
    first_box = next(b for b in level.boxes if b.box_id == 0)
    np.testing.assert_array_equal(obs[level.key_pos], obs[first_box.lock_cell])


def test_pickup_clears_cell_and_fills_inventory_pixel():
    for cfg in (RGB_CFG, HOT_CFG):
        for seed in range(10):
            level = generate_level(cfg, seed)
            state = initial_state(level)
            actions = oracle_solve(level)
            # walk until the key is collected
            for action in actions:
                advance(state, action)
                if state.inventory is not None:
                    break
            obs = render(state)
            if cfg.encoding == "one_hot":
                sigma = key_channel_permutation(cfg.num_colors)
                empty_ch = cfg.num_colors + 2
                assert obs[0, 0, sigma[state.inventory]] == 1.0
                former = level.key_pos
                if former != state.agent_pos:
                    assert obs[former][empty_ch] == 1.0
            else:
                np.testing.assert_array_equal(obs[0, 0], PALETTE[state.inventory])
                if level.key_pos != state.agent_pos:
                    np.testing.assert_array_equal(obs[level.key_pos], BACKGROUND_RGB)


def test_one_hot_lock_on_own_channel_key_on_permuted_channel():
    level = generate_level(HOT_CFG, 7)
    state = initial_state(level)
    obs = render(state)
    sigma = key_channel_permutation(HOT_CFG.num_colors)
    assert obs[level.key_pos][sigma[level.key_color]] == 1.0
    for box in level.boxes:
        assert obs[box.lock_cell][box.lock_color] == 1.0
        if box.content_color >= 0:
            assert obs[box.content_cell][sigma[box.content_color]] == 1.0
        else:
            assert obs[box.content_cell][HOT_CFG.num_colors + 1] == 1.0
    assert obs[state.agent_pos][HOT_CFG.num_colors] == 1.0


def test_key_channel_permutation_is_a_nonidentity_bijection():
    for n in (4, 10, 20):
        sigma = key_channel_permutation(n)
        assert sorted(sigma) == list(range(n))
        assert tuple(sigma) != tuple(range(n))
    assert key_channel_permutation(20) == key_channel_permutation(20)


def test_palette_has_20_distinct_triples_distinct_from_specials():
    assert PALETTE.shape == (20, 3)
    rows = {tuple(row) for row in PALETTE}
    assert len(rows) == 20
    for special in (AGENT_RGB, GEM_RGB, BACKGROUND_RGB):
        assert tuple(special) not in rows
