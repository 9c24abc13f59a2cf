"""Synchronous advantage actor-critic with an optional actor/learner queue.

Actors roll out fixed-length unrolls against immutable parameter snapshots;
a single learner consumes batches of trajectories, forms n-step discounted
returns, and applies one RMSprop step per batch. Two execution modes share
all of the rollout and loss code:

* sync: actors advance in lock-step inside the learner thread (one batched
  network call per environment step), bit-reproducible for a fixed
  (config, seed),
* queue: one thread per actor feeding a bounded queue, the learner popping
  batches; throughput over reproducibility.
"""

from __future__ import annotations

import csv
import math
import queue
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .agent import (
    AgentConfig,
    AgentParams,
    agent_forward,
    init_params,
    sample_action,
)
from .boxworld.config import InvalidConfig, LevelConfig
from .boxworld.env import GEM_COLLECTED, NUM_ACTIONS, advance, initial_state, render
from .boxworld.solver import oracle_solve
from .rng import Rng, derive_seed
from .tensor import (
    NonFiniteValue,
    RmsPropConfig,
    ShapeMismatch,
    Tensor,
    add,
    load_checkpoint,
    log_softmax_rows,
    mul,
    reduce_sum,
    reshape,
    rmsprop_init,
    rmsprop_update,
    save_checkpoint,
    scale,
    softmax_rows,
    zero_grads,
)
from .tensor.core import backward

METRICS_CSV_COLUMNS = (
    "wall_time_s",
    "env_steps",
    "episodes",
    "solve_rate",
    "mean_return",
    "loss",
    "pg_loss",
    "baseline_loss",
    "entropy",
)

EVALS_CSV_COLUMNS = ("env_steps", "mode", "episodes", "solve_rate", "mean_return")

SYNC = "sync"
QUEUE = "queue"

_OPT_PREFIX = "__opt__/"
_META_PREFIX = "__meta__/"


class EnvError(RuntimeError):
    """An actor's environment interaction failed (queue mode surfaces the
    originating actor-thread exception through this)."""


@dataclass(frozen=True)
class TrainerConfig:
    discount: float = 0.99
    unroll_length: int = 40
    batch_size: int = 32
    entropy_cost: float = 0.005
    baseline_cost: float = 0.5
    learning_rate: float = 2e-4
    rmsprop_epsilon: float = 0.1
    num_actors: int = 8
    total_env_steps: int = 2_000_000
    eval_interval: int = 100_000
    eval_episodes: int = 200
    checkpoint_interval: int = 500_000
    grad_clip_norm: float = 100.0
    queue_capacity: int = 64
    stat_window: int = 512
    stop_at_solve_rate: float | None = None
    mode: str = SYNC

    def validate(self) -> None:
        if not 0.0 < self.discount < 1.0:
            raise InvalidConfig(f"discount must be in (0, 1): {self.discount}")
        if self.entropy_cost < 0.0 or self.baseline_cost < 0.0:
            raise InvalidConfig("costs must be >= 0")
        if self.learning_rate < 0.0:
            raise InvalidConfig(f"learning_rate must be >= 0: {self.learning_rate}")
        if self.rmsprop_epsilon <= 0.0:
            raise InvalidConfig(f"rmsprop_epsilon must be > 0: {self.rmsprop_epsilon}")
        if min(self.unroll_length, self.batch_size, self.num_actors) < 1:
            raise InvalidConfig("unroll_length, batch_size, num_actors must be >= 1")
        if self.total_env_steps < 1 or self.eval_interval < 1 or self.checkpoint_interval < 1:
            raise InvalidConfig("step budgets and intervals must be >= 1")
        if self.eval_episodes < 1 or self.queue_capacity < 1 or self.stat_window < 1:
            raise InvalidConfig("eval_episodes, queue_capacity, stat_window must be >= 1")
        if self.grad_clip_norm < 0.0:
            raise InvalidConfig("grad_clip_norm must be >= 0 (0 disables)")
        if self.mode not in (SYNC, QUEUE):
            raise InvalidConfig(f"mode must be {SYNC!r} or {QUEUE!r}: {self.mode!r}")
        if self.mode == SYNC and self.batch_size % self.num_actors != 0:
            raise InvalidConfig(
                "sync mode needs batch_size divisible by num_actors "
                f"({self.batch_size} % {self.num_actors} != 0)"
            )

    def optimizer(self) -> RmsPropConfig:
        return RmsPropConfig(learning_rate=self.learning_rate, epsilon=self.rmsprop_epsilon)


@dataclass(frozen=True)
class Trajectory:
    """One unroll_length slice of one actor's experience stream. Episodes
    shorter than the unroll continue into fresh ones; `dones` marks the
    boundaries and the return recursion zeroes the bootstrap across them."""

    actor_id: int
    index: int
    observations: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    dones: np.ndarray
    behavior_logits: np.ndarray
    values: np.ndarray
    bootstrap_value: float


@dataclass(frozen=True)
class PolicySnapshot:
    """Immutable parameters actors evaluate against; `version` counts
    learner steps applied before the snapshot was taken."""

    params: AgentParams
    config: AgentConfig
    version: int


def make_snapshot(params: AgentParams, config: AgentConfig, version: int) -> PolicySnapshot:
    frozen = {
        name: Tensor(t.data, requires_grad=False, name=name) for name, t in params.named().items()
    }
    return PolicySnapshot(
        params=AgentParams.from_named(frozen, config), config=config, version=version
    )


class ActorState:
    """Persistent per-actor stream: environment state survives across
    unrolls, level seeds and action sampling each have their own substream."""

    def __init__(self, actor_id: int, sampler, seed: int):
        self.actor_id = actor_id
        self.sampler = sampler
        self.seed = seed
        self.action_rng = Rng(derive_seed(seed, 0xAC, actor_id))
        self.episode_index = 0
        self.trajectory_index = 0
        self.state = None
        self.obs: np.ndarray | None = None
        self.episode_return = 0.0
        self.finished: deque = deque()

    def ensure_episode(self) -> None:
        if self.state is not None and not self.state.terminated:
            return
        level = self.sampler(derive_seed(self.seed, 0x1E, self.actor_id, self.episode_index))
        self.episode_index += 1
        self.state = initial_state(level)
        self.obs = render(self.state)
        self.episode_return = 0.0

    def apply(self, action: int) -> tuple[float, bool]:
        try:
            reward, done = advance(self.state, action)
        except Exception as exc:
            raise EnvError(f"actor {self.actor_id} failed to step") from exc
        self.episode_return += reward
        if done:
            self.finished.append(
                (self.episode_return, self.state.outcome == GEM_COLLECTED)
            )
        else:
            self.obs = render(self.state)
        return reward, done


def _rollout(
    actors: list[ActorState], snapshot: PolicySnapshot, config: TrainerConfig
) -> list[Trajectory]:
    """Advance every lane unroll_length steps with one batched forward pass
    per step; returns one Trajectory per lane."""
    T = config.unroll_length
    lanes = len(actors)
    for actor in actors:
        actor.ensure_episode()
    obs = [[] for _ in range(lanes)]
    acts = [[] for _ in range(lanes)]
    rews = [[] for _ in range(lanes)]
    dones = [[] for _ in range(lanes)]
    logits_rec = [[] for _ in range(lanes)]
    values_rec = [[] for _ in range(lanes)]
    for _ in range(T):
        batch_obs = np.stack([a.obs for a in actors])
        out, _ = agent_forward(batch_obs, snapshot.params, snapshot.config)
        logits = out.logits_np()
        values = out.values_np()
        for i, actor in enumerate(actors):
            obs[i].append(actor.obs)
            action = sample_action(logits[i], actor.action_rng)
            reward, done = actor.apply(action)
            acts[i].append(action)
            rews[i].append(reward)
            dones[i].append(done)
            logits_rec[i].append(logits[i])
            values_rec[i].append(values[i])
            actor.ensure_episode()
    batch_obs = np.stack([a.obs for a in actors])
    out, _ = agent_forward(batch_obs, snapshot.params, snapshot.config)
    bootstraps = out.values_np()
    trajectories = []
    for i, actor in enumerate(actors):
        trajectories.append(
            Trajectory(
                actor_id=actor.actor_id,
                index=actor.trajectory_index,
                observations=np.stack(obs[i]),
                actions=np.array(acts[i], dtype=np.int64),
                rewards=np.array(rews[i], dtype=np.float32),
                dones=np.array(dones[i], dtype=bool),
                behavior_logits=np.stack(logits_rec[i]),
                values=np.array(values_rec[i], dtype=np.float32),
                bootstrap_value=float(bootstraps[i]),
            )
        )
        actor.trajectory_index += 1
    return trajectories


def run_actor(
    actor: ActorState, snapshot: PolicySnapshot, config: TrainerConfig
) -> Trajectory:
    """Produce exactly one unroll for one actor."""
    return _rollout([actor], snapshot, config)[0]


def compute_returns(
    rewards: np.ndarray, dones: np.ndarray, bootstrap: np.ndarray, discount: float
) -> np.ndarray:
    """n-step discounted returns G_t = r_t + γ·G_{t+1}, zeroed across episode
    boundaries, seeded with the recorded bootstrap value past the unroll."""
    if rewards.shape != dones.shape or bootstrap.shape != rewards.shape[:1]:
        raise ShapeMismatch(
            f"returns: rewards {rewards.shape}, dones {dones.shape}, bootstrap {bootstrap.shape}"
        )
    returns = np.empty_like(rewards)
    carry = bootstrap.astype(rewards.dtype, copy=True)
    for t in range(rewards.shape[1] - 1, -1, -1):
        cont = np.where(dones[:, t], rewards.dtype.type(0.0), carry)
        carry = rewards[:, t] + rewards.dtype.type(discount) * cont
        returns[:, t] = carry
    return returns


def _one_hot(actions: np.ndarray, n: int, dtype) -> np.ndarray:
    out = np.zeros((actions.shape[0], n), dtype=dtype)
    out[np.arange(actions.shape[0]), actions] = 1
    return out


def compute_loss(
    batch: list[Trajectory],
    params: AgentParams,
    agent_config: AgentConfig,
    config: TrainerConfig,
) -> tuple[Tensor, dict[str, float]]:
    """Policy-gradient + baseline + entropy loss over a trajectory batch,
    normalized by batch_size x unroll_length. The policy-gradient advantage
    uses the recorded behavior value estimates (constants, so it is detached
    by construction); the baseline term regresses the freshly computed
    values against the same returns."""
    if len(batch) != config.batch_size:
        raise ShapeMismatch(f"expected {config.batch_size} trajectories, got {len(batch)}")
    T = config.unroll_length
    for traj in batch:
        if traj.actions.shape[0] != T:
            raise ShapeMismatch(f"trajectory length {traj.actions.shape[0]}, unroll {T}")
    B = len(batch)
    n_total = B * T

    observations = np.concatenate([traj.observations for traj in batch], axis=0)
    actions = np.concatenate([traj.actions for traj in batch])
    rewards = np.stack([traj.rewards for traj in batch])
    dones = np.stack([traj.dones for traj in batch])
    bootstraps = np.array([traj.bootstrap_value for traj in batch], dtype=rewards.dtype)

    out, _ = agent_forward(observations, params, agent_config)
    logits = out.logits
    values = reshape(out.value, (n_total,))

    returns = compute_returns(rewards, dones, bootstraps, config.discount)
    returns_flat = returns.reshape(n_total).astype(values.dtype)
    behavior_values = np.concatenate([traj.values for traj in batch]).astype(values.dtype)
    advantages = returns_flat - behavior_values

    log_probs = log_softmax_rows(logits)
    probs = softmax_rows(logits)
    pg_weights = _one_hot(actions, logits.shape[1], logits.dtype) * advantages[:, None]
    pg_sum = scale(reduce_sum(mul(log_probs, Tensor(pg_weights))), -1.0)
    delta = add(values, scale(Tensor(returns_flat), -1.0))
    baseline_sum = reduce_sum(mul(delta, delta))
    entropy_sum = scale(reduce_sum(mul(probs, log_probs)), -1.0)

    loss = scale(
        add(
            add(pg_sum, scale(baseline_sum, config.baseline_cost)),
            scale(entropy_sum, -config.entropy_cost),
        ),
        1.0 / n_total,
    )
    metrics = {
        "loss": float(loss.data),
        "pg_loss": float(pg_sum.data) / n_total,
        "baseline_loss": float(baseline_sum.data) / n_total,
        "entropy": float(entropy_sum.data) / n_total,
    }
    return loss, metrics


def clip_by_global_norm(
    grads: dict[str, np.ndarray], max_norm: float
) -> tuple[dict[str, np.ndarray], float]:
    """Scale all gradients by max_norm/norm when the global L2 norm exceeds
    max_norm; max_norm=0 disables clipping."""
    total = math.sqrt(
        sum(float(np.sum(g.astype(np.float64) ** 2)) for g in grads.values())
    )
    if max_norm <= 0.0 or total <= max_norm or total == 0.0:
        return grads, total
    factor = max_norm / total
    return {name: (g * factor).astype(g.dtype) for name, g in grads.items()}, total


@dataclass(frozen=True)
class EvalResult:
    episodes: int
    solve_rate: float
    mean_return: float


class AgentPolicy:
    """Greedy or sampling policy over a fixed parameter snapshot."""

    needs_observation = True

    def __init__(self, params: AgentParams, config: AgentConfig, greedy: bool = True, seed: int = 0):
        self.params = params
        self.config = config
        self.greedy = greedy
        self.rng = Rng(derive_seed(seed, 0xA9))

    def begin_episode(self, level, state) -> None:
        pass

    def act(self, state, obs) -> int:
        out, _ = agent_forward(obs, self.params, self.config)
        return sample_action(out.logits_np()[0], self.rng, greedy=self.greedy)


class RandomPolicy:
    """Uniform over the four moves; never looks at the observation."""

    needs_observation = False

    def __init__(self, seed: int = 0):
        self.rng = Rng(derive_seed(seed, 0x7A))

    def begin_episode(self, level, state) -> None:
        pass

    def act(self, state, obs) -> int:
        return self.rng.randrange(NUM_ACTIONS)


class OraclePolicy:
    """Replays a shortest solution; test hook pinning evaluate() at 1.0."""

    needs_observation = False

    def __init__(self):
        self.plan: deque = deque()

    def begin_episode(self, level, state) -> None:
        plan = oracle_solve(level)
        if plan is None:
            raise EnvError(f"oracle found no solution for level seed {level.seed}")
        self.plan = deque(plan)

    def act(self, state, obs) -> int:
        if not self.plan:
            raise EnvError("oracle plan exhausted before the episode ended")
        return self.plan.popleft()


def evaluate(policy, sampler, episodes: int, seed: int = 0) -> EvalResult:
    """Run `episodes` fresh levels under `policy`; solve = gem collected.
    Deterministic for deterministic policies (greedy agent, oracle)."""
    if episodes < 1:
        raise InvalidConfig(f"episodes must be >= 1: {episodes}")
    solved = 0
    total_return = 0.0
    for e in range(episodes):
        level = sampler(derive_seed(seed, 0xE7A1, e))
        state = initial_state(level)
        policy.begin_episode(level, state)
        episode_return = 0.0
        done = False
        while not done:
            obs = render(state) if policy.needs_observation else None
            action = policy.act(state, obs)
            reward, done = advance(state, action)
            episode_return += reward
        total_return += episode_return
        if state.outcome == GEM_COLLECTED:
            solved += 1
    return EvalResult(
        episodes=episodes, solve_rate=solved / episodes, mean_return=total_return / episodes
    )


@dataclass
class TrainResult:
    env_steps: int
    episodes: int
    learner_steps: int
    params: AgentParams
    checkpoint_path: str
    metrics_path: str
    evals_path: str
    final_solve_rate: float
    aborted: bool = False
    abort_reason: str = ""
    stopped_early: bool = False


def save_training_checkpoint(
    path,
    params: AgentParams,
    opt_state: dict[str, np.ndarray],
    env_steps: int,
    episodes: int,
    version: int,
) -> None:
    """Parameters plus optimizer state and counters in one checkpoint file;
    the reserved __opt__/ and __meta__/ prefixes keep them apart."""
    store: dict = dict(params.named())
    for name, value in opt_state.items():
        store[_OPT_PREFIX + name] = value
    store[_META_PREFIX + "env_steps"] = np.float64(env_steps)
    store[_META_PREFIX + "episodes"] = np.float64(episodes)
    store[_META_PREFIX + "version"] = np.float64(version)
    save_checkpoint(path, store)


def load_training_checkpoint(
    path,
) -> tuple[dict[str, np.ndarray], dict[str, np.ndarray], dict[str, int]]:
    blob = load_checkpoint(path)
    params_store: dict[str, np.ndarray] = {}
    opt_state: dict[str, np.ndarray] = {}
    meta: dict[str, int] = {}
    for name, value in blob.items():
        if name.startswith(_OPT_PREFIX):
            opt_state[name[len(_OPT_PREFIX):]] = value
        elif name.startswith(_META_PREFIX):
            meta[name[len(_META_PREFIX):]] = int(value)
        else:
            params_store[name] = value
    return params_store, opt_state, meta


def params_from_arrays(store: dict[str, np.ndarray], config: AgentConfig) -> AgentParams:
    tensors = {
        name: Tensor(arr, requires_grad=True, name=name) for name, arr in store.items()
    }
    return AgentParams.from_named(tensors, config)


class _MetricsWriter:
    def __init__(self, path, columns):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", newline="")
        self._writer = csv.DictWriter(self._fh, fieldnames=list(columns))
        self._writer.writeheader()

    def write(self, row: dict) -> None:
        self._writer.writerow(row)
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


class _Learner:
    """Shared state for both training modes: parameters, optimizer,
    episode statistics, metrics/eval logs, checkpoint cadence."""

    def __init__(
        self,
        trainer_config: TrainerConfig,
        agent_config: AgentConfig,
        level_config: LevelConfig,
        sampler,
        seed: int,
        out_dir: Path,
        resume_from=None,
    ):
        self.config = trainer_config
        self.agent_config = agent_config
        self.sampler = sampler
        self.seed = seed
        self.out_dir = out_dir
        obs_channels = level_config.obs_channels
        if resume_from is None:
            self.params = init_params(
                agent_config, derive_seed(seed, 0x1417), obs_channels=obs_channels
            )
            self.opt_state = rmsprop_init(self.params.named())
            self.env_steps = 0
            self.episodes = 0
            self.version = 0
        else:
            store, opt_state, meta = load_training_checkpoint(resume_from)
            self.params = params_from_arrays(store, agent_config)
            self.opt_state = opt_state
            self.env_steps = meta["env_steps"]
            self.episodes = meta["episodes"]
            self.version = meta["version"]
        self.opt_config = trainer_config.optimizer()
        self.snapshot = make_snapshot(self.params, agent_config, self.version)
        self.window = deque(maxlen=trainer_config.stat_window)
        self.start_time = time.time()
        self.metrics = _MetricsWriter(out_dir / "metrics.csv", METRICS_CSV_COLUMNS)
        self.evals = _MetricsWriter(out_dir / "evals.csv", EVALS_CSV_COLUMNS)
        self.next_eval = self.env_steps + trainer_config.eval_interval
        self.next_checkpoint = self.env_steps + trainer_config.checkpoint_interval
        self.final_solve_rate = float("nan")
        self.stopped_early = False

    def drain_stats(self, actors: list[ActorState]) -> None:
        for actor in actors:
            while actor.finished:
                episode_return, solved = actor.finished.popleft()
                self.window.append((episode_return, solved))
                self.episodes += 1

    def step(self, batch: list[Trajectory]) -> None:
        loss, loss_metrics = compute_loss(batch, self.params, self.agent_config, self.config)
        named = self.params.named()
        zero_grads(named.values())
        backward(loss)
        grads = {name: t.grad for name, t in named.items()}
        grads, _ = clip_by_global_norm(grads, self.config.grad_clip_norm)
        new_params, self.opt_state = rmsprop_update(
            named, grads, self.opt_state, self.opt_config
        )
        self.params = AgentParams.from_named(new_params, self.agent_config)
        self.version += 1
        self.snapshot = make_snapshot(self.params, self.agent_config, self.version)
        self.env_steps += self.config.batch_size * self.config.unroll_length
        if self.window:
            solve_rate = sum(1.0 for _, s in self.window if s) / len(self.window)
            mean_return = sum(r for r, _ in self.window) / len(self.window)
        else:
            solve_rate = float("nan")
            mean_return = float("nan")
        self.metrics.write(
            {
                "wall_time_s": round(time.time() - self.start_time, 3),
                "env_steps": self.env_steps,
                "episodes": self.episodes,
                "solve_rate": solve_rate,
                "mean_return": mean_return,
                **{k: loss_metrics[k] for k in ("loss", "pg_loss", "baseline_loss", "entropy")},
            }
        )

    def maybe_eval(self) -> None:
        if self.env_steps < self.next_eval:
            return
        self.next_eval += self.config.eval_interval
        policy = AgentPolicy(self.snapshot.params, self.agent_config, greedy=True)
        result = evaluate(
            policy, self.sampler, self.config.eval_episodes, seed=derive_seed(self.seed, 0xEA)
        )
        self.final_solve_rate = result.solve_rate
        self.evals.write(
            {
                "env_steps": self.env_steps,
                "mode": "greedy",
                "episodes": result.episodes,
                "solve_rate": result.solve_rate,
                "mean_return": result.mean_return,
            }
        )
        threshold = self.config.stop_at_solve_rate
        if threshold is not None and result.solve_rate >= threshold:
            self.stopped_early = True

    def maybe_checkpoint(self) -> None:
        if self.env_steps < self.next_checkpoint:
            return
        self.next_checkpoint += self.config.checkpoint_interval
        step_dir = self.out_dir / "checkpoints"
        step_dir.mkdir(parents=True, exist_ok=True)
        self.save(step_dir / f"step_{self.env_steps}.rbck")

    def save(self, path) -> None:
        save_training_checkpoint(
            path, self.params, self.opt_state, self.env_steps, self.episodes, self.version
        )

    def close(self) -> None:
        self.metrics.close()
        self.evals.close()


def train(
    trainer_config: TrainerConfig,
    agent_config: AgentConfig,
    level_config: LevelConfig,
    sampler,
    seed: int,
    out_dir,
    resume_from=None,
) -> TrainResult:
    """Run the actor/learner loop until the env-step budget (or an early
    solve-rate stop, or a non-finite abort that saves the last good
    checkpoint). `sampler` maps a level seed to a Level (see make_split)."""
    trainer_config.validate()
    agent_config.validate()
    level_config.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    learner = _Learner(
        trainer_config, agent_config, level_config, sampler, seed, out_dir, resume_from
    )
    actor_seed = seed if resume_from is None else derive_seed(seed, 0x5E5, learner.version)
    actors = [
        ActorState(i, sampler, actor_seed) for i in range(trainer_config.num_actors)
    ]
    aborted = False
    abort_reason = ""
    try:
        if trainer_config.mode == SYNC:
            _train_sync(learner, actors)
        else:
            _train_queue(learner, actors)
    except NonFiniteValue as exc:
        aborted = True
        abort_reason = str(exc)
    checkpoint_path = out_dir / "checkpoint.rbck"
    learner.save(checkpoint_path)
    learner.close()
    return TrainResult(
        env_steps=learner.env_steps,
        episodes=learner.episodes,
        learner_steps=learner.version,
        params=learner.params,
        checkpoint_path=str(checkpoint_path),
        metrics_path=str(learner.metrics.path),
        evals_path=str(learner.evals.path),
        final_solve_rate=learner.final_solve_rate,
        aborted=aborted,
        abort_reason=abort_reason,
        stopped_early=learner.stopped_early,
    )


def _train_sync(learner: _Learner, actors: list[ActorState]) -> None:
    config = learner.config
    rounds = config.batch_size // config.num_actors
    while learner.env_steps < config.total_env_steps and not learner.stopped_early:
        batch: list[Trajectory] = []
        for _ in range(rounds):
            batch.extend(_rollout(actors, learner.snapshot, config))
        learner.drain_stats(actors)
        learner.step(batch)
        learner.maybe_eval()
        learner.maybe_checkpoint()


def _train_queue(learner: _Learner, actors: list[ActorState]) -> None:
    config = learner.config
    trajectory_queue: queue.Queue = queue.Queue(maxsize=config.queue_capacity)
    stop = threading.Event()
    failures: list[BaseException] = []

    def produce(actor: ActorState) -> None:
        try:
            while not stop.is_set():
                trajectory = run_actor(actor, learner.snapshot, config)
                while not stop.is_set():
                    try:
                        trajectory_queue.put(trajectory, timeout=0.1)
                        break
                    except queue.Full:
                        continue
        except BaseException as exc:
            failures.append(exc)
            stop.set()

    threads = [
        threading.Thread(target=produce, args=(actor,), daemon=True, name=f"actor-{actor.actor_id}")
        for actor in actors
    ]
    for thread in threads:
        thread.start()
    try:
        while learner.env_steps < config.total_env_steps and not learner.stopped_early:
            batch: list[Trajectory] = []
            while len(batch) < config.batch_size:
                if failures:
                    raise EnvError("actor thread failed") from failures[0]
                try:
                    batch.append(trajectory_queue.get(timeout=0.5))
                except queue.Empty:
                    continue
            learner.drain_stats(actors)
            learner.step(batch)
            learner.maybe_eval()
            learner.maybe_checkpoint()
    finally:
        stop.set()
        while True:
            try:
                trajectory_queue.get_nowait()
            except queue.Empty:
                break
        for thread in threads:
            thread.join(timeout=5.0)
        learner.drain_stats(actors)
