"""Pieces shared by the learning agents: replay buffer, exploration noise,
the episode/step training loop, and the training log."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..env import PowerControlEnv


class ReplayBuffer:
    """Fixed-capacity ring buffer with uniform sampling."""

    def __init__(self, capacity: int, state_dim: int, action_dim: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros((capacity, action_dim))
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self.size = 0
        self._cursor = 0

    def add(self, state, action, reward, next_state) -> None:
        i = self._cursor
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self._cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator):
        if self.size < batch_size:
            raise ValueError(f"buffer holds {self.size} < batch {batch_size}")
        idx = rng.integers(0, self.size, size=batch_size)
        return (self.states[idx], self.actions[idx], self.rewards[idx],
                self.next_states[idx])


class OuNoise:
    """Ornstein-Uhlenbeck process; mean-reverting exploration noise."""

    def __init__(self, dim: int, theta: float = 0.15, mu: float = 0.0,
                 sigma: float = 0.3):
        self.dim = dim
        self.theta = theta
        self.mu = mu
        self.sigma = sigma
        self.value = np.full(dim, mu, dtype=float)

    def reset(self) -> None:
        self.value[...] = self.mu

    def step(self, rng: np.random.Generator) -> np.ndarray:
        self.value += (self.theta * (self.mu - self.value)
                       + self.sigma * rng.standard_normal(self.dim))
        return self.value.copy()


def noise_schedule(iteration: int, total_iterations: int,
                   floor: float = 0.1, decay_fraction: float = 0.6) -> float:
    """Linear decay from 1.0 to `floor` over the first `decay_fraction`
    of training, held at the floor afterwards."""
    if total_iterations <= 0:
        return floor
    knee = decay_fraction * total_iterations
    if iteration >= knee or knee <= 0:
        return floor
    return 1.0 - (1.0 - floor) * (iteration / knee)


@dataclass
class TrainingLog:
    iterations: list[int] = field(default_factory=list)
    episodes: list[int] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)
    losses: list[float] = field(default_factory=list)
    noise_scales: list[float] = field(default_factory=list)

    def append(self, iteration: int, episode: int, reward: float,
               loss: float, noise_scale: float) -> None:
        self.iterations.append(iteration)
        self.episodes.append(episode)
        self.rewards.append(reward)
        self.losses.append(loss)
        self.noise_scales.append(noise_scale)

    def __len__(self) -> int:
        return len(self.iterations)


def run_training(env: PowerControlEnv, agent, episodes: int,
                 steps_per_episode: int) -> TrainingLog:
    """The nested episode/step loop shared by both agents.

    Per step: act with exploration noise, store the experience, run the
    agent's gradient update(s), and log (reward, loss, noise scale).
    """
    log = TrainingLog()
    total = episodes * steps_per_episode
    iteration = 0
    for episode in range(1, episodes + 1):
        state = env.reset()
        agent.noise.reset()
        for _ in range(steps_per_episode):
            scale = noise_schedule(iteration, total)
            action = agent.select_action(state, noise_scale=scale)
            next_state, reward = env.step(action)
            agent.buffer.add(state, action, reward, next_state)
            loss = agent.train_step() if agent.ready() else float("nan")
            iteration += 1
            log.append(iteration, episode, reward, loss, scale)
            state = next_state
    return log


def run_training_per_group(env: PowerControlEnv, agent, episodes: int,
                           steps_per_episode: int) -> TrainingLog:
    """Training variant where one shared agent acts on each group's own
    feature block; the K per-step experiences share the global reward and
    are all pooled into the replay buffer. Requires equal group sizes."""
    sizes = set(env.group_sizes.values())
    if len(sizes) != 1:
        raise ValueError("per-group mode needs equal group sizes")
    log = TrainingLog()
    total = episodes * steps_per_episode
    iteration = 0
    for episode in range(1, episodes + 1):
        env.reset()
        agent.noise.reset()
        group_states = {g: env.group_state(g) for g in env.group_ids}
        for _ in range(steps_per_episode):
            scale = noise_schedule(iteration, total)
            actions = {g: agent.select_action(group_states[g],
                                              noise_scale=scale)
                       for g in env.group_ids}
            joint = np.concatenate([actions[g] for g in env.group_ids])
            _, reward = env.step(joint)
            next_states = {g: env.group_state(g) for g in env.group_ids}
            for g in env.group_ids:
                agent.buffer.add(group_states[g], actions[g], reward,
                                 next_states[g])
            loss = agent.train_step() if agent.ready() else float("nan")
            iteration += 1
            log.append(iteration, episode, reward, loss, scale)
            group_states = next_states
    return log


def greedy_rollout(env: PowerControlEnv, agent, steps: int,
                   tail_fraction: float = 0.25,
                   per_group: bool = False) -> dict[int, np.ndarray]:
    """Noise-free policy rollout; returns the converged allocation.

    The converged policy may orbit its fixed point at the action-step
    resolution, straddling the minimum-rate boundary, so the recommendation
    is the best feasible allocation seen in the final `tail_fraction` of the
    rollout; if the tail never turns feasible, the projected tail average.
    """
    state = env.reset()
    tail_start = max(0, int(steps * (1.0 - tail_fraction)))
    sums = {g: np.zeros(env.group_sizes[g]) for g in env.group_ids}
    count = 0
    best_rate = -np.inf
    best: dict[int, np.ndarray] | None = None
    for t in range(steps):
        if per_group:
            action = np.concatenate([
                agent.select_action(env.group_state(g), noise_scale=0.0)
                for g in env.group_ids])
        else:
            action = agent.select_action(state, noise_scale=0.0)
        state, _ = env.step(action)
        if t >= tail_start:
            for g in env.group_ids:
                sums[g] += env.alphas[g]
            count += 1
            if env.last_feasible:
                rate = env.average_sum_rate()
                if rate > best_rate:
                    best_rate = rate
                    best = {g: env.alphas[g].copy() for g in env.group_ids}
    if best is not None:
        return best
    if count == 0:
        return {g: env.alphas[g].copy() for g in env.group_ids}
    from ..projection import project_ordered_simplex
    return {g: project_ordered_simplex(sums[g] / count)
            for g in env.group_ids}
