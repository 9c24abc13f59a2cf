"""One INI file describes a run: [env], [agent], [trainer] sections whose
keys mirror the three config dataclasses. Unknown keys are rejected so a
typo cannot silently fall back to a default. Missing sections or keys use
the dataclass defaults."""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path

from .agent import AgentConfig
from .boxworld.config import InvalidConfig, LevelConfig
from .boxworld.splits import SplitSpec
from .trainer import TrainerConfig

CONFIG_SECTIONS = ("env", "agent", "trainer")


def _int_tuple(raw: str) -> tuple[int, ...]:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise ValueError("expected comma-separated integers")
    return tuple(int(p) for p in parts)


def _int_pair(raw: str) -> tuple[int, int]:
    values = _int_tuple(raw)
    if len(values) != 2:
        raise ValueError(f"expected two comma-separated integers, got {raw!r}")
    return values


def _bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def _optional_float(raw: str):
    lowered = raw.strip().lower()
    if lowered in ("", "none", "off"):
        return None
    return float(raw)


_ENV_PARSERS = {
    "room_size": int,
    "solution_length_range": _int_pair,
    "num_distractor_range": _int_pair,
    "distractor_length": int,
    "branching_mode": str,
    "num_colors": int,
    "max_steps": int,
    "encoding": str,
}

_AGENT_PARSERS = {
    "variant": str,
    "conv_channels": _int_pair,
    "n_heads": int,
    "d": int,
    "n_blocks": int,
    "control_blocks": int,
    "mlp_widths": _int_tuple,
    "n_actions": int,
}

_TRAINER_PARSERS = {
    "discount": float,
    "unroll_length": int,
    "batch_size": int,
    "entropy_cost": float,
    "baseline_cost": float,
    "learning_rate": float,
    "rmsprop_epsilon": float,
    "num_actors": int,
    "total_env_steps": int,
    "eval_interval": int,
    "eval_episodes": int,
    "checkpoint_interval": int,
    "grad_clip_norm": float,
    "queue_capacity": int,
    "stat_window": int,
    "stop_at_solve_rate": _optional_float,
    "mode": str,
}


def _parse_section(parser: configparser.ConfigParser, section: str, parsers: dict) -> dict:
    if not parser.has_section(section):
        return {}
    kwargs = {}
    for key, raw in parser.items(section):
        if key not in parsers:
            raise InvalidConfig(f"[{section}] has no key {key!r}")
        try:
            kwargs[key] = parsers[key](raw)
        except ValueError as exc:
            raise InvalidConfig(f"[{section}] {key} = {raw!r}: {exc}") from exc
    return kwargs


def parse_config_text(text: str) -> tuple[LevelConfig, AgentConfig, TrainerConfig]:
    parser = configparser.ConfigParser()
    parser.read_string(text)
    for section in parser.sections():
        if section not in CONFIG_SECTIONS:
            raise InvalidConfig(f"unknown config section [{section}]")
    level = LevelConfig(**_parse_section(parser, "env", _ENV_PARSERS))
    agent = AgentConfig(**_parse_section(parser, "agent", _AGENT_PARSERS))
    trainer = TrainerConfig(**_parse_section(parser, "trainer", _TRAINER_PARSERS))
    level.validate()
    agent.validate()
    trainer.validate()
    return level, agent, trainer


def load_config(path) -> tuple[LevelConfig, AgentConfig, TrainerConfig]:
    return parse_config_text(Path(path).read_text())


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


def dump_config(level: LevelConfig, agent: AgentConfig, trainer: TrainerConfig) -> str:
    """Round-trippable INI text for the three configs."""
    lines = []
    for section, config in (("env", level), ("agent", agent), ("trainer", trainer)):
        lines.append(f"[{section}]")
        for key, value in asdict(config).items():
            lines.append(f"{key} = {_format_value(value)}")
        lines.append("")
    return "\n".join(lines)


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce a run; a serialized copy plus a
    content hash goes into the output directory."""

    name: str
    level_config: LevelConfig
    agent_config: AgentConfig
    trainer_config: TrainerConfig
    split: SplitSpec
    seeds: tuple[int, ...]
    out_dir: str

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "env": asdict(self.level_config),
            "agent": asdict(self.agent_config),
            "trainer": asdict(self.trainer_config),
            "split": asdict(self.split),
            "seeds": list(self.seeds),
            "out_dir": self.out_dir,
            "config_hash": self.content_hash(),
        }

    def content_hash(self) -> str:
        payload = {
            "env": asdict(self.level_config),
            "agent": asdict(self.agent_config),
            "trainer": asdict(self.trainer_config),
            "split": asdict(self.split),
            "seeds": list(self.seeds),
        }
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:12]

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "experiment.json"
        path.write_text(json.dumps(self.to_json_dict(), indent=1, sort_keys=True) + "\n")
        return path


def spec_from_json_dict(doc: dict) -> ExperimentSpec:
    env = doc["env"]
    agent = doc["agent"]
    trainer = doc["trainer"]
    split = doc["split"]
    for key in ("solution_length_range", "num_distractor_range"):
        env[key] = tuple(env[key])
    agent["conv_channels"] = tuple(agent["conv_channels"])
    agent["mlp_widths"] = tuple(agent["mlp_widths"])
    return ExperimentSpec(
        name=doc["name"],
        level_config=LevelConfig(**env),
        agent_config=AgentConfig(**agent),
        trainer_config=TrainerConfig(**trainer),
        split=SplitSpec(
            kind=split["kind"],
            lengths=tuple(split["lengths"]),
            pairs=tuple(tuple(p) for p in split["pairs"]),
        ),
        seeds=tuple(doc["seeds"]),
        out_dir=doc["out_dir"],
    )


def load_experiment_spec(path) -> ExperimentSpec:
    return spec_from_json_dict(json.loads(Path(path).read_text()))


def override_variant(agent: AgentConfig, variant: str | None) -> AgentConfig:
    return agent if variant is None else replace(agent, variant=variant)
