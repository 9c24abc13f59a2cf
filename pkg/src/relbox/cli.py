"""Command-line harness: level generation, training, evaluation,
generalization reports, attention probes, and the random baseline.

One INI config file (sections [env], [agent], [trainer]) drives every
subcommand; flags override it. Output directories are append-only: a
non-empty --out fails without --force. BOXWORLD_THREADS caps the actor
count (in sync mode it is further reduced to a divisor of batch_size)."""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import replace
from pathlib import Path

from .agent import CONTROL, RELATIONAL, AgentConfig, agent_forward
from .boxworld.config import InvalidConfig, LevelConfig
from .boxworld.env import initial_state, render
from .boxworld.levels import generate_level, level_to_json
from .boxworld.splits import LONGER_SOLUTIONS, NO_SPLIT, WITHHELD_PAIRS, SplitSpec, make_split
from .configio import ExperimentSpec, dump_config, load_config, override_variant
from .relational import probe_attention, write_probe_csv
from .rng import derive_seed
from .schemas import SCHEMAS
from .trainer import (
    AgentPolicy,
    OraclePolicy,
    RandomPolicy,
    TrainerConfig,
    evaluate,
    load_training_checkpoint,
    params_from_arrays,
    train,
)

DEFAULT_GENERALIZATION_LENGTHS = (6, 8, 10)
DEFAULT_WITHHELD_PAIRS = ((0, 1),)


class MissingCheckpoint(FileNotFoundError):
    pass


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 2


def _load_configs(args) -> tuple[LevelConfig, AgentConfig, TrainerConfig]:
    if getattr(args, "config", None):
        level, agent, trainer = load_config(args.config)
    else:
        level, agent, trainer = LevelConfig(), AgentConfig(), TrainerConfig()
    agent = override_variant(agent, getattr(args, "variant", None))
    agent.validate()
    return level, agent, trainer


def _claim_out_dir(out, force: bool) -> Path:
    out = Path(out)
    if out.exists() and any(out.iterdir()) and not force:
        raise InvalidConfig(f"output directory {out} is not empty; pass --force to reuse it")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _thread_cap() -> int | None:
    raw = os.environ.get("BOXWORLD_THREADS")
    if raw is None:
        return None
    cap = int(raw)
    if cap < 1:
        raise InvalidConfig(f"BOXWORLD_THREADS must be >= 1: {raw!r}")
    return cap


def _apply_thread_cap(trainer: TrainerConfig) -> TrainerConfig:
    cap = _thread_cap()
    if cap is None or trainer.num_actors <= cap:
        return trainer
    actors = cap
    if trainer.mode == "sync":
        while trainer.batch_size % actors != 0:
            actors -= 1
    return replace(trainer, num_actors=actors)


def _parse_lengths(raw: str) -> tuple[int, ...]:
    return tuple(int(p) for p in raw.split(",") if p.strip())


def _parse_pairs(raw: str) -> tuple[tuple[int, int], ...]:
    pairs = []
    for chunk in raw.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        a, _, b = chunk.partition(":")
        pairs.append((int(a), int(b)))
    return tuple(pairs)


def _split_spec(args) -> SplitSpec:
    kind = getattr(args, "split", None) or getattr(args, "mode", None) or NO_SPLIT
    if kind == NO_SPLIT:
        return SplitSpec.none()
    if kind == LONGER_SOLUTIONS:
        lengths = _parse_lengths(args.lengths) if args.lengths else DEFAULT_GENERALIZATION_LENGTHS
        return SplitSpec.longer_solutions(lengths)
    if kind == WITHHELD_PAIRS:
        pairs = _parse_pairs(args.pairs) if args.pairs else DEFAULT_WITHHELD_PAIRS
        return SplitSpec.withheld_keylock_pairs(pairs)
    raise InvalidConfig(f"unknown split {kind!r}")


def _write_csv(path, schema: str, rows: list[dict]) -> None:
    names = [name for name, _ in SCHEMAS[schema]]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=names)
        writer.writeheader()
        writer.writerows(rows)


def _load_checkpoint_params(args, agent: AgentConfig):
    path = Path(args.checkpoint)
    if not path.exists():
        raise MissingCheckpoint(f"no checkpoint at {path}")
    store, _, meta = load_training_checkpoint(path)
    try:
        params = params_from_arrays(store, agent)
    except KeyError as exc:
        raise InvalidConfig(
            f"checkpoint {path} does not match agent variant {agent.variant!r} "
            f"(missing {exc.args[0]!r})"
        ) from exc
    return params, meta


def cmd_generate(args) -> int:
    level_config, _, _ = _load_configs(args)
    level_config.validate()
    if args.count < 1:
        raise InvalidConfig(f"--count must be >= 1: {args.count}")
    out = _claim_out_dir(args.out, args.force)
    for i in range(args.count):
        level = generate_level(level_config, derive_seed(args.seed, 0x9E17, i))
        (out / f"level_{i:05d}.json").write_text(level_to_json(level) + "\n")
    print(f"wrote {args.count} levels to {out}")
    return 0


def cmd_train(args) -> int:
    level_config, agent_config, trainer_config = _load_configs(args)
    if args.mode:
        trainer_config = replace(trainer_config, mode=args.mode)
    trainer_config = _apply_thread_cap(trainer_config)
    trainer_config.validate()
    split = _split_spec(args)
    out = _claim_out_dir(args.out, args.force)
    spec = ExperimentSpec(
        name=args.name,
        level_config=level_config,
        agent_config=agent_config,
        trainer_config=trainer_config,
        split=split,
        seeds=(args.seed,),
        out_dir=str(out),
    )
    spec.write(out)
    (out / "config.ini").write_text(dump_config(level_config, agent_config, trainer_config))
    train_sampler, _ = make_split(level_config, split)
    result = train(
        trainer_config,
        agent_config,
        level_config,
        train_sampler,
        seed=args.seed,
        out_dir=out,
        resume_from=args.resume,
    )
    if result.aborted:
        print(
            f"aborted on non-finite values after {result.env_steps} env steps; "
            f"last good checkpoint at {result.checkpoint_path}",
            file=sys.stderr,
        )
        return 1
    print(
        f"trained {result.env_steps} env steps, {result.episodes} episodes, "
        f"eval solve rate {result.final_solve_rate:.3f}, "
        f"checkpoint {result.checkpoint_path}"
    )
    return 0


def _policy_for(args, params, agent_config, greedy: bool):
    kind = getattr(args, "policy", "agent")
    if kind == "agent":
        return AgentPolicy(params, agent_config, greedy=greedy, seed=args.seed)
    if kind == "oracle":
        return OraclePolicy()
    if kind == "random":
        return RandomPolicy(seed=args.seed)
    raise InvalidConfig(f"unknown policy {kind!r}")


def cmd_eval(args) -> int:
    level_config, agent_config, _ = _load_configs(args)
    if args.episodes < 1:
        raise InvalidConfig(f"--episodes must be >= 1: {args.episodes}")
    greedy = (args.mode or "greedy") == "greedy"
    params, meta = _load_checkpoint_params(args, agent_config)
    sampler, _ = make_split(level_config, SplitSpec.none())
    policy = _policy_for(args, params, agent_config, greedy)
    result = evaluate(policy, sampler, args.episodes, seed=args.seed)
    print(
        f"episodes {result.episodes} solve_rate {result.solve_rate:.4f} "
        f"mean_return {result.mean_return:.3f}"
    )
    if args.out:
        out = _claim_out_dir(args.out, args.force)
        _write_csv(
            out / "eval.csv",
            "evals",
            [
                {
                    "env_steps": meta.get("env_steps", 0),
                    "mode": "greedy" if greedy else "sampling",
                    "episodes": result.episodes,
                    "solve_rate": result.solve_rate,
                    "mean_return": result.mean_return,
                }
            ],
        )
    return 0


def cmd_eval_generalization(args) -> int:
    level_config, agent_config, _ = _load_configs(args)
    if args.episodes < 1:
        raise InvalidConfig(f"--episodes must be >= 1: {args.episodes}")
    split = _split_spec(args)
    params, _ = _load_checkpoint_params(args, agent_config)
    train_sampler, _ = make_split(level_config, split)

    rows = []

    def run(name: str, sampler) -> None:
        policy = _policy_for(args, params, agent_config, greedy=True)
        result = evaluate(policy, sampler, args.episodes, seed=args.seed)
        rows.append(
            {
                "split": name,
                "episodes": result.episodes,
                "solve_rate": result.solve_rate,
                "mean_return": result.mean_return,
            }
        )

    run("train", train_sampler)
    if split.kind == LONGER_SOLUTIONS:
        for length in split.lengths:
            _, test_sampler = make_split(
                level_config, SplitSpec.longer_solutions((length,))
            )
            run(f"longer_{length}", test_sampler)
    else:
        _, test_sampler = make_split(level_config, split)
        run("withheld", test_sampler)

    for row in rows:
        print(
            f"{row['split']:>12}: solve_rate {row['solve_rate']:.4f} "
            f"mean_return {row['mean_return']:.3f} over {row['episodes']} episodes"
        )
    if args.out:
        out = _claim_out_dir(args.out, args.force)
        _write_csv(out / "generalization.csv", "generalization", rows)
        print(f"wrote {out / 'generalization.csv'}")
    return 0


def cmd_probe_attention(args) -> int:
    level_config, agent_config, _ = _load_configs(args)
    if agent_config.variant == CONTROL:
        raise InvalidConfig("the control variant has no attention to probe")
    params, _ = _load_checkpoint_params(args, agent_config)
    level = generate_level(level_config, args.seed)
    obs = render(initial_state(level))
    _, traces = agent_forward(obs, params, agent_config, record_traces=True)
    rows = []
    for trace in traces:
        rows.extend(probe_attention(trace, level))
    out = _claim_out_dir(args.out, args.force)
    write_probe_csv(rows, out / "probe.csv")

    key_rows = [r for r in rows if r["source_object"].startswith(("key:", "agent", "gem"))]
    best: dict = {}
    for row in key_rows:
        slot = (row["block"], row["head"], row["source_cell"], row["source_object"])
        if slot not in best or row["weight"] > best[slot]["weight"]:
            best[slot] = row
    lines = []
    for (block, head, cell, obj), row in sorted(best.items()):
        lines.append(
            f"block {block} head {head}: {obj} at {cell} -> "
            f"{row['target_object']} at {row['target_cell']} (weight {row['weight']:.4f})"
        )
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    print(f"wrote {len(rows)} probe rows to {out / 'probe.csv'}")
    return 0


def cmd_random_baseline(args) -> int:
    level_config, _, _ = _load_configs(args)
    if args.episodes < 1:
        raise InvalidConfig(f"--episodes must be >= 1: {args.episodes}")
    rows = []
    for length in range(1, 5):
        config = replace(level_config, solution_length_range=(length, length))
        config.validate()
        sampler, _ = make_split(config, SplitSpec.none())
        result = evaluate(
            RandomPolicy(seed=derive_seed(args.seed, length)),
            sampler,
            args.episodes,
            seed=derive_seed(args.seed, 0xBA5E, length),
        )
        rows.append(
            {
                "solution_length": length,
                "episodes": result.episodes,
                "solved": round(result.solve_rate * result.episodes),
                "solve_rate": result.solve_rate,
                "mean_return": result.mean_return,
            }
        )
        print(
            f"length {length}: solve_rate {result.solve_rate:.4f} "
            f"({rows[-1]['solved']}/{result.episodes}), mean_return {result.mean_return:.3f}"
        )
    if args.out:
        out = _claim_out_dir(args.out, args.force)
        _write_csv(out / "random_baseline.csv", "random_baseline", rows)
        print(f"wrote {out / 'random_baseline.csv'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boxworld", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("--config", help="INI config file ([env]/[agent]/[trainer])")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", required=out_required, help="output directory")
        p.add_argument("--force", action="store_true", help="reuse a non-empty output directory")
        p.add_argument("--variant", choices=[RELATIONAL, CONTROL])

    p = sub.add_parser("generate", help="write serialized levels")
    common(p)
    p.add_argument("--count", type=int, default=100)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="run the actor/learner loop")
    common(p)
    p.add_argument("--mode", choices=["sync", "queue"], help="override trainer mode")
    p.add_argument("--name", default="run")
    p.add_argument("--resume", help="checkpoint to continue from")
    p.add_argument("--split", choices=[NO_SPLIT, LONGER_SOLUTIONS, WITHHELD_PAIRS],
                   default=NO_SPLIT)
    p.add_argument("--lengths", help="comma-separated withheld solution lengths")
    p.add_argument("--pairs", help="withheld lock:content color pairs, e.g. 0:1,2:3")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on the training distribution")
    common(p, out_required=False)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--episodes", type=int, default=1000)
    p.add_argument("--mode", choices=["greedy", "sampling"], default="greedy")
    p.add_argument("--policy", choices=["agent", "oracle", "random"], default="agent")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("eval-gen", help="generalization report on withheld splits")
    common(p, out_required=False)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--episodes", type=int, default=1000)
    p.add_argument("--mode", choices=[LONGER_SOLUTIONS, WITHHELD_PAIRS], required=True)
    p.add_argument("--lengths", help="comma-separated withheld solution lengths")
    p.add_argument("--pairs", help="withheld lock:content color pairs, e.g. 0:1,2:3")
    p.add_argument("--policy", choices=["agent", "oracle", "random"], default="agent")
    p.set_defaults(func=cmd_eval_generalization)

    p = sub.add_parser("probe-attention", help="export attention weights over a level")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=cmd_probe_attention)

    p = sub.add_parser("random-baseline", help="random-policy solve rates by solution length")
    common(p, out_required=False)
    p.add_argument("--episodes", type=int, default=10000)
    p.set_defaults(func=cmd_random_baseline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidConfig, MissingCheckpoint, ValueError) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
