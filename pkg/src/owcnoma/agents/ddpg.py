"""Deep deterministic policy gradient baseline.

Actor maps state to a tanh-bounded action; critic scores (state, action)
pairs, concatenated at the input. Separate target copies of both are soft
updated every training step, which therefore performs two network updates
(critic, then actor) as befits the actor-critic split.
"""

from __future__ import annotations

import numpy as np

from ..nn import (AdamState, adam_step, backward, build_net, forward,
                  load_checkpoint, save_checkpoint, soft_update)
from ..seeding import (STREAM_OU_NOISE, STREAM_REPLAY, STREAM_WEIGHTS,
                       named_rng)
from .common import OuNoise, ReplayBuffer

ACTOR_HIDDEN = [32, 16, 16, 16]
CRITIC_HIDDEN = [32, 32, 32, 32]


class DdpgAgent:
    """Actor-critic pair with target copies, OU exploration, and replay."""

    def __init__(self, state_dim: int, action_dim: int, seed: int = 0,
                 discount: float = 0.995, learning_rate: float = 1e-4,
                 tau: float = 0.001, batch_size: int = 32,
                 buffer_capacity: int = 10_000, clip_norm: float = 1.0,
                 ou_theta: float = 0.15, ou_mu: float = 0.0,
                 ou_sigma: float = 0.3, updates_per_step: int = 1,
                 value_init: float = 0.0):
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.discount = discount
        self.tau = tau
        self.batch_size = batch_size
        self.clip_norm = clip_norm
        self.updates_per_step = updates_per_step
        rng = named_rng(seed, STREAM_WEIGHTS)
        self.actor = build_net(state_dim, ACTOR_HIDDEN, action_dim, rng,
                               output_activation="tanh")
        self.critic = build_net(state_dim + action_dim, CRITIC_HIDDEN, 1, rng)
        # same value warm start as the NAF agent (see naf.py)
        self.critic.layers[-1].bias[0] = value_init
        self.actor_target = self.actor.clone()
        self.critic_target = self.critic.clone()
        self.actor_adam = AdamState.for_params(self.actor.params(),
                                               learning_rate=learning_rate)
        self.critic_adam = AdamState.for_params(self.critic.params(),
                                                learning_rate=learning_rate)
        self.buffer = ReplayBuffer(buffer_capacity, state_dim, action_dim)
        self.noise = OuNoise(action_dim, theta=ou_theta, mu=ou_mu,
                             sigma=ou_sigma)
        self._ou_rng = named_rng(seed, STREAM_OU_NOISE)
        self._replay_rng = named_rng(seed, STREAM_REPLAY)
        self.last_actor_objective = float("nan")

    def ready(self) -> bool:
        return self.buffer.size >= self.batch_size

    def select_action(self, state: np.ndarray,
                      noise_scale: float = 1.0) -> np.ndarray:
        out, _ = forward(self.actor, np.atleast_2d(np.asarray(state,
                                                              dtype=float)))
        action = out[0]
        if noise_scale != 0.0:
            action = action + noise_scale * self.noise.step(self._ou_rng)
        return np.clip(action, -1.0, 1.0)

    def critic_value(self, states: np.ndarray, actions: np.ndarray,
                     target: bool = False) -> np.ndarray:
        net = self.critic_target if target else self.critic
        q, _ = forward(net, np.hstack([np.atleast_2d(states),
                                       np.atleast_2d(actions)]))
        return q[:, 0]

    def train_step(self) -> float:
        critic_loss = float("nan")
        for _ in range(self.updates_per_step):
            critic_loss, actor_objective = ddpg_train_step(self)
            self.last_actor_objective = actor_objective
        return critic_loss

    # -- persistence -----------------------------------------------------------

    def save(self, path) -> None:
        save_checkpoint(path, {"actor": self.actor, "critic": self.critic},
                        meta={"kind": "ddpg", "state_dim": self.state_dim,
                              "action_dim": self.action_dim})

    def load(self, path) -> None:
        nets, meta = load_checkpoint(path)
        if meta.get("kind") != "ddpg":
            raise ValueError(f"checkpoint kind {meta.get('kind')!r} "
                             f"is not 'ddpg'")
        self.actor = nets["actor"]
        self.critic = nets["critic"]
        self.actor_target = self.actor.clone()
        self.critic_target = self.critic.clone()
        self.actor_adam = AdamState.for_params(
            self.actor.params(), learning_rate=self.actor_adam.learning_rate)
        self.critic_adam = AdamState.for_params(
            self.critic.params(),
            learning_rate=self.critic_adam.learning_rate)


def ddpg_train_step(agent: DdpgAgent) -> tuple[float, float]:
    """Critic MSE update toward the target Q, then an actor ascent step
    along the critic's action gradient; soft update both targets.

    Returns (critic_loss, actor_objective); the objective is the batch mean
    of Q(s, actor(s)) before the actor update.
    """
    states, actions, rewards, next_states = agent.buffer.sample(
        agent.batch_size, agent._replay_rng)
    batch = states.shape[0]

    # critic toward y = r + discount * Q_T(s', actor_T(s'))
    next_actions, _ = forward(agent.actor_target, next_states)
    q_next, _ = forward(agent.critic_target,
                        np.hstack([next_states, next_actions]))
    targets = rewards + agent.discount * q_next[:, 0]
    q_pred, cache_c = forward(agent.critic, np.hstack([states, actions]))
    err = q_pred[:, 0] - targets
    critic_loss = float(np.mean(err ** 2))
    dq = (2.0 / batch) * err[:, None]
    critic_grads, _ = backward(agent.critic, cache_c, dq)
    adam_step(agent.critic_adam, agent.critic.params(), critic_grads,
              clip_norm=agent.clip_norm)

    # actor along dQ/da evaluated at a = actor(s)
    policy_actions, cache_a = forward(agent.actor, states)
    q_policy, cache_c2 = forward(agent.critic,
                                 np.hstack([states, policy_actions]))
    actor_objective = float(np.mean(q_policy[:, 0]))
    dq_policy = np.full((batch, 1), -1.0 / batch)  # minimize -mean(Q)
    _, dinput = backward(agent.critic, cache_c2, dq_policy)
    d_action = dinput[:, agent.state_dim:]
    actor_grads, _ = backward(agent.actor, cache_a, d_action)
    adam_step(agent.actor_adam, agent.actor.params(), actor_grads,
              clip_norm=agent.clip_norm)

    soft_update(agent.critic_target, agent.critic, agent.tau)
    soft_update(agent.actor_target, agent.actor, agent.tau)
    return critic_loss, actor_objective
