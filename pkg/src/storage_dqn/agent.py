"""Dueling double DQN training loop and a tabular Q-learning baseline."""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import network as nw
from .environment import N_ACTIONS, BatteryEnv, EnvConfig, apply_action, cost_saving, prices_for, trajectory_cost
from .replay import Experience, PerBuffer

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AgentConfig:
    batch_size: int = 32
    replay_capacity: int = 10240
    discount: float = 0.96
    learning_rate: float = 0.00025
    epsilon_initial: float = 1.0
    epsilon_final: float = 0.1
    epsilon_decay_steps: int = 0  # 0: 80% of all training steps
    target_update_every: int = 5  # episodes (days)
    epochs: int = 500
    warmup_transitions: int = 1024
    checkpoint_every: int = 10
    history_days: int = 15
    seed: int = 0
    double: bool = True
    momentum: float = 0.0
    per_alpha: float = 0.6
    per_beta_initial: float = 0.4
    per_beta_final: float = 1.0
    priority_eps: float = 1e-3
    stratified: bool = True
    trunk_sizes: tuple = (64, 64)
    stream_sizes: tuple = (32,)

    def __post_init__(self):
        object.__setattr__(self, "trunk_sizes", tuple(int(s) for s in self.trunk_sizes))
        object.__setattr__(self, "stream_sizes", tuple(int(s) for s in self.stream_sizes))
        if not 0 < self.discount < 1:
            raise ConfigError("discount must lie in (0, 1)")
        if not 0 <= self.epsilon_final <= self.epsilon_initial <= 1:
            raise ConfigError("need 0 <= epsilon_final <= epsilon_initial <= 1")
        if self.batch_size < 1 or self.replay_capacity < self.batch_size:
            raise ConfigError("replay capacity must hold at least one batch")
        if self.epochs < 0 or self.target_update_every < 1 or self.checkpoint_every < 1:
            raise ConfigError("epochs >= 0, target_update_every >= 1, checkpoint_every >= 1")
        if self.history_days < 1:
            raise ConfigError("history_days must be >= 1")
        if not 0 <= self.momentum < 1:
            raise ConfigError("momentum must lie in [0, 1)")

    @property
    def layer_spec(self) -> nw.LayerSpec:
        return nw.LayerSpec(self.trunk_sizes, self.stream_sizes, N_ACTIONS)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["trunk_sizes"] = list(self.trunk_sizes)
        d["stream_sizes"] = list(self.stream_sizes)
        return d


def epsilon_at(config: AgentConfig, step: int, decay_steps: int | None = None) -> float:
    """Linear decay from ``epsilon_initial`` to ``epsilon_final``, then flat."""
    decay = decay_steps if decay_steps is not None else config.epsilon_decay_steps
    if decay <= 0 or step >= decay:
        return config.epsilon_final
    frac = step / decay
    return config.epsilon_initial + frac * (config.epsilon_final - config.epsilon_initial)


def greedy(q_values) -> int:
    # np.argmax returns the first maximum, i.e. the lowest action index on ties
    return int(np.argmax(q_values))


def select_action(params, obs, epsilon, rng) -> int:
    if epsilon > 0 and rng.random() < epsilon:
        return int(rng.integers(N_ACTIONS))
    return greedy(nw.forward(params, obs))


def td_targets(target_params, online_params, rewards, next_obs, dones, discount, double=True):
    """Batched bootstrap targets; terminal transitions are not bootstrapped."""
    rewards = np.asarray(rewards, dtype=float)
    q_target = nw.forward(target_params, np.atleast_2d(next_obs))
    if double:
        chosen = np.argmax(nw.forward(online_params, np.atleast_2d(next_obs)), axis=1)
        bootstrap = q_target[np.arange(len(rewards)), chosen]
    else:
        bootstrap = q_target.max(axis=1)
    return rewards + discount * np.where(np.asarray(dones), 0.0, bootstrap)


def td_target(target_params, online_params, exp: Experience, discount, double=True) -> float:
    return float(td_targets(target_params, online_params, [exp.reward], [exp.next_obs],
                            [exp.done], discount, double)[0])


@dataclass
class TrainRecord:
    epoch: int
    total_reward: float
    cost: float
    savings_pct: float
    mean_loss: float
    epsilon: float


@dataclass
class TrainResult:
    params: nw.NetworkParams
    checkpoints: list  # (epoch, NetworkParams)
    records: list
    skipped_updates: int = 0
    steps: int = 0


class DQNAgent:
    """Owns online/target networks, the replay buffer and the run's RNG."""

    def __init__(self, config: AgentConfig, obs_dim: int, params: nw.NetworkParams | None = None):
        self.config = config
        seeds = np.random.SeedSequence(config.seed).spawn(2)
        self.rng = np.random.default_rng(seeds[0])
        if params is None:
            net_seed = int(seeds[1].generate_state(1)[0])
            params = nw.init(config.layer_spec, obs_dim, net_seed)
        elif params.input_dim != obs_dim:
            raise nw.ShapeError(
                f"checkpoint expects observations of length {params.input_dim}, environment gives {obs_dim}"
            )
        self.online = nw.copy_params(params)
        self.target = nw.copy_params(params)
        self.velocity = np.zeros_like(self.online.vector)
        self.buffer = PerBuffer(config.replay_capacity, obs_dim, alpha=config.per_alpha,
                                beta=config.per_beta_initial, priority_eps=config.priority_eps,
                                stratified=config.stratified)
        self.skipped_updates = 0

    def act(self, obs, epsilon) -> int:
        return select_action(self.online, obs, epsilon, self.rng)

    def sync_target(self):
        self.target = nw.copy_params(self.online)

    def train_step(self) -> float | None:
        """One IS-weighted gradient step on a prioritized batch; None if skipped."""
        cfg = self.config
        if len(self.buffer) < max(cfg.batch_size, cfg.warmup_transitions):
            self.skipped_updates += 1
            return None
        idx, batch, weights = self.buffer.sample(cfg.batch_size, self.rng)
        targets = td_targets(self.target, self.online, batch["rewards"], batch["next_obs"],
                             batch["dones"], cfg.discount, cfg.double)
        value, grad, td = nw.loss_and_grad(self.online, batch["obs"], batch["actions"], targets, weights)
        if cfg.momentum:
            self.velocity = cfg.momentum * self.velocity + grad
            grad = self.velocity
        self.online.vector -= cfg.learning_rate * grad
        self.buffer.update_priorities(idx, td)
        return value


def _days_for_epoch(n_days, history, rng):
    if n_days <= history:
        return range(n_days)
    start = int(rng.integers(0, n_days - history + 1))
    return range(start, start + history)


def train(env_config: EnvConfig, agent_config: AgentConfig, params=None, progress=None) -> TrainResult:
    """Run ``epochs`` passes over the training days, one episode per day.

    Each epoch visits at most ``history_days`` consecutive days (a random
    window when the data is longer). The target network is synced every
    ``target_update_every`` episodes, checkpoints are taken at epoch 0, every
    ``checkpoint_every`` epochs and at the end. Fully determined by the seed.
    """
    cfg = agent_config
    env = BatteryEnv(env_config)
    agent = DQNAgent(cfg, env_config.obs_dim, params)
    n_days = env_config.load.day_count
    days_per_epoch = min(n_days, cfg.history_days)
    total_steps = cfg.epochs * days_per_epoch * 24
    decay = cfg.epsilon_decay_steps or max(1, int(0.8 * total_steps))

    checkpoints = [(0, nw.copy_params(agent.online))]
    records = []
    step = episodes = 0
    for epoch in range(1, cfg.epochs + 1):
        losses, total_reward, agent_cost, base_cost = [], 0.0, 0.0, 0.0
        eps = epsilon_at(cfg, step, decay)
        for day in _days_for_epoch(n_days, cfg.history_days, agent.rng):
            obs = env.reset(day)
            draws, prices = [], []
            done = False
            while not done:
                eps = epsilon_at(cfg, step, decay)
                action = agent.act(obs, eps)
                out = env.step(action)
                agent.buffer.add(obs, action, out.reward, out.next_observation, out.done)
                agent.buffer.beta = cfg.per_beta_initial + (cfg.per_beta_final - cfg.per_beta_initial) * min(
                    1.0, step / max(1, total_steps))
                value = agent.train_step()
                if value is not None:
                    losses.append(value)
                total_reward += out.reward
                draws.append(out.grid_draw)
                prices.append(out.price)
                obs, done = out.next_observation, out.done
                step += 1
            episodes += 1
            if episodes % cfg.target_update_every == 0:
                agent.sync_target()
            agent_cost += trajectory_cost(prices, draws, env_config.dr)
            base_cost += trajectory_cost(prices, env_config.load.day(day), env_config.dr)
        savings = cost_saving(agent_cost, base_cost) if base_cost > 0 else 0.0
        records.append(TrainRecord(epoch, total_reward, agent_cost, savings,
                                   float(np.mean(losses)) if losses else math.nan, eps))
        if epoch % cfg.checkpoint_every == 0 or epoch == cfg.epochs:
            checkpoints.append((epoch, nw.copy_params(agent.online)))
        if progress is not None:
            progress(records[-1])
    return TrainResult(agent.online, checkpoints, records, agent.skipped_updates, step)


def fine_tune(base_params: nw.NetworkParams, env_config: EnvConfig, agent_config: AgentConfig) -> TrainResult:
    """Continue training ``base_params`` in a new environment (e.g. with DR on)."""
    if base_params.input_dim != env_config.obs_dim:
        raise nw.ShapeError(
            f"base network takes {base_params.input_dim} inputs, new environment emits {env_config.obs_dim}"
        )
    if base_params.spec != agent_config.layer_spec:
        agent_config = AgentConfig(**{**agent_config.as_dict(),
                                      "trunk_sizes": base_params.spec.trunk_sizes,
                                      "stream_sizes": base_params.spec.stream_sizes})
    return train(env_config, agent_config, params=base_params)


# --- tabular baseline -------------------------------------------------------

def tabular_q_update(q_table, s, a, r, s_next, alpha, gamma, terminal=False):
    """In-place ``Q(s,a) <- (1-alpha) Q(s,a) + alpha (r + gamma max_a' Q(s',a'))``."""
    bootstrap = 0.0 if terminal or s_next is None else float(np.max(q_table[s_next]))
    q_table[s][a] = (1 - alpha) * q_table[s][a] + alpha * (r + gamma * bootstrap)
    return q_table


@dataclass
class TabularProblem:
    """Deterministic battery day discretized to (hour, SoC level).

    ``loads`` gives the hourly load from hour 0; the battery starts at its
    floor. SoC levels are evenly spaced between floor and ceiling.
    """

    tariff: object
    loads: np.ndarray
    battery: object
    levels: int = 2
    prices: np.ndarray = field(init=False)

    def __post_init__(self):
        self.loads = np.asarray(self.loads, dtype=float)
        self.prices = prices_for(self.tariff, self.loads.size)

    @property
    def horizon(self) -> int:
        return self.loads.size

    def level(self, energy) -> int:
        span = self.battery.ceiling_wh - self.battery.floor_wh
        if span <= 0:
            return 0
        return int(round((energy - self.battery.floor_wh) / span * (self.levels - 1)))

    def transition(self, hour, energy, action):
        new_energy, draw = apply_action(energy, self.battery, action, self.loads[hour])
        return new_energy, -(self.prices[hour] * draw / 1000.0)


def tabular_q_learning(problem: TabularProblem, n_updates=10_000, alpha=0.5, gamma=1.0,
                       epsilon=0.3, seed=0):
    """Epsilon-greedy Q-learning on the tabular problem; returns the Q table.

    The table is indexed ``[hour, level, action]``.
    """
    rng = np.random.default_rng(seed)
    q = np.zeros((problem.horizon, problem.levels, N_ACTIONS))
    updates = 0
    while updates < n_updates:
        energy = problem.battery.floor_wh
        for hour in range(problem.horizon):
            s = (hour, problem.level(energy))
            a = int(rng.integers(N_ACTIONS)) if rng.random() < epsilon else greedy(q[s])
            energy, r = problem.transition(hour, energy, a)
            terminal = hour == problem.horizon - 1
            s_next = None if terminal else (hour + 1, problem.level(energy))
            tabular_q_update(q, s, a, r, s_next, alpha, gamma, terminal)
            updates += 1
            if updates >= n_updates:
                break
    return q


def tabular_greedy_rollout(problem: TabularProblem, q):
    """Greedy actions from the floor state and the resulting trajectory cost."""
    energy = problem.battery.floor_wh
    actions, draws = [], []
    for hour in range(problem.horizon):
        a = greedy(q[hour, problem.level(energy)])
        energy, draw = apply_action(energy, problem.battery, a, problem.loads[hour])
        actions.append(a)
        draws.append(draw)
    return actions, trajectory_cost(problem.prices, draws)
