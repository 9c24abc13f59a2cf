"""Recorded-trajectory files: a level, an action list, and the rewards the
run must reproduce bit-exactly. Used as regression fixtures for the step
dynamics."""

from __future__ import annotations

import json
from pathlib import Path

from .env import Action, advance, initial_state
from .levels import Level, level_from_json, level_to_json

REPLAY_FORMAT_VERSION = 1


def record_replay(level: Level, actions) -> dict:
    """Run `actions` on a fresh episode and capture the expected outputs."""
    state = initial_state(level)
    rewards = []
    for action in actions:
        reward, done = advance(state, action)
        rewards.append(reward)
        if done:
            break
    return {
        "version": REPLAY_FORMAT_VERSION,
        "level": json.loads(level_to_json(level)),
        "actions": [int(a) for a in actions[: len(rewards)]],
        "rewards": rewards,
        "outcome": state.outcome,
    }


def verify_replay(doc: dict) -> None:
    """Re-run the recorded actions; raises ValueError on any drift."""
    if doc.get("version") != REPLAY_FORMAT_VERSION:
        raise ValueError(f"unsupported replay version: {doc.get('version')!r}")
    level = level_from_json(json.dumps(doc["level"]))
    state = initial_state(level)
    for i, (action, expected) in enumerate(zip(doc["actions"], doc["rewards"])):
        reward, done = advance(state, Action(action))
        if reward != expected:
            raise ValueError(f"step {i}: reward {reward} != recorded {expected}")
        if done and i != len(doc["actions"]) - 1:
            raise ValueError(f"step {i}: episode ended early")
    if state.outcome != doc["outcome"]:
        raise ValueError(f"outcome {state.outcome!r} != recorded {doc['outcome']!r}")


def save_replay(path, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")


def load_replay(path) -> dict:
    return json.loads(Path(path).read_text())
