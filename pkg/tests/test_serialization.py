"""Level JSON and replay files: round trips, golden fixtures, tamper checks."""

import json
from pathlib import Path

import pytest

from relbox.boxworld import (
    LevelConfig,
    generate_level,
    level_from_json,
    level_to_json,
    oracle_solve,
)
from relbox.boxworld.levels import validate_level
from relbox.boxworld.replay import (
    load_replay,
    record_replay,
    save_replay,
    verify_replay,
)

DATA = Path(__file__).parent / "data"


def test_round_trip_is_lossless():
    for seed in range(30):
        level = generate_level(LevelConfig(), seed)
        there = level_to_json(level)
        back = level_from_json(there)
        assert back == level
        assert level_to_json(back) == there


def test_serialization_is_byte_stable():
    level = generate_level(LevelConfig(), 5)
    assert level_to_json(level) == level_to_json(level)


def test_golden_level_file():
    text = (DATA / "level_golden.json").read_text().strip()
    level = level_from_json(text)
    validate_level(level)
    assert level_to_json(level) == text
    actions = oracle_solve(level)
    assert actions is not None
    assert level.graph.solution_length == 3


def test_golden_replay_file():
    verify_replay(load_replay(DATA / "replay_golden.json"))


def test_replay_detects_reward_drift(tmp_path):
    doc = load_replay(DATA / "replay_golden.json")
    doc["rewards"][-1] = 3.0
    with pytest.raises(ValueError, match="reward"):
        verify_replay(doc)


def test_replay_detects_outcome_drift():
    doc = load_replay(DATA / "replay_golden.json")
    doc["outcome"] = "timeout"
    with pytest.raises(ValueError, match="outcome"):
        verify_replay(doc)


def test_replay_version_gate():
    doc = load_replay(DATA / "replay_golden.json")
    doc["version"] = 99
    with pytest.raises(ValueError, match="version"):
        verify_replay(doc)


def test_replay_round_trip(tmp_path):
    level = generate_level(LevelConfig(), 9)
    doc = record_replay(level, oracle_solve(level))
    out = tmp_path / "replay.json"
    save_replay(out, doc)
    verify_replay(load_replay(out))


def test_level_version_gate():
    level = generate_level(LevelConfig(), 1)
    doc = json.loads(level_to_json(level))
    doc["version"] = 2
    with pytest.raises(ValueError, match="version"):
        level_from_json(json.dumps(doc))


def test_level_rejects_misplaced_lock():
    level = generate_level(LevelConfig(), 1)
    doc = json.loads(level_to_json(level))
    lock_keys = [k for k, v in doc["placements"].items() if v["kind"] == "lock"]
    entry = doc["placements"].pop(lock_keys[0])
    free = next(
        f"{r},{c}"
        for r in range(3, 12)
        for c in range(3, 12)
        if f"{r},{c}" not in doc["placements"]
    )
    doc["placements"][free] = entry  # detached from its content pixel
    with pytest.raises(ValueError):
        level_from_json(json.dumps(doc))


def test_level_rejects_missing_agent_start():
    level = generate_level(LevelConfig(), 1)
    doc = json.loads(level_to_json(level))
    doc["placements"] = {
        k: v for k, v in doc["placements"].items() if v["kind"] != "agent_start"
    }
    with pytest.raises(ValueError, match="agent_start"):
        level_from_json(json.dumps(doc))


def test_level_rejects_unpaired_boxes():
    level = generate_level(LevelConfig(), 1)
    doc = json.loads(level_to_json(level))
    lock_keys = [k for k, v in doc["placements"].items() if v["kind"] == "lock"]
    del doc["placements"][lock_keys[0]]
    with pytest.raises(ValueError):
        level_from_json(json.dumps(doc))
