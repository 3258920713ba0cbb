"""Continuous Q-learning with a normalized advantage function.

One shared hidden layer feeds three heads: a scalar state value V(s), a mean
action mu(s), and the packed lower-triangular entries of L(s). The advantage
is the concave quadratic

    A(s, a) = -1/2 (a - mu(s))^T P(s) (a - mu(s)),   P = L L^T,

so Q(s, a) = V(s) + A(s, a) and the greedy action is mu(s) analytically.
Diagonal entries of L pass through exp(), making P positive definite.
"""

from __future__ import annotations

import numpy as np

from ..nn import (AdamState, DenseNet, adam_step, backward, build_net,
                  forward, load_checkpoint, save_checkpoint, soft_update)
from ..seeding import (STREAM_OU_NOISE, STREAM_REPLAY, STREAM_WEIGHTS,
                       named_rng)
from .common import OuNoise, ReplayBuffer

TRUNK_WIDTH = 32
V_HIDDEN = [16, 16, 16]
MU_HIDDEN = [16, 16, 16]
L_HIDDEN = [32, 32, 32]


class NafNetwork:
    """Trunk + (V, mu, L) heads; holds its own parameter list order."""

    def __init__(self, state_dim: int, action_dim: int,
                 rng: np.random.Generator):
        self.state_dim = state_dim
        self.action_dim = action_dim
        tri = action_dim * (action_dim + 1) // 2
        self.trunk = build_net(state_dim, [], TRUNK_WIDTH, rng,
                               output_activation="relu",
                               output_scale=np.sqrt(6.0 / state_dim))
        self.v = build_net(TRUNK_WIDTH, V_HIDDEN, 1, rng)
        # tanh keeps the advantage's center inside the action box; with a
        # linear output the center drifts arbitrarily far outside and the
        # clipped greedy policy saturates
        self.mu = build_net(TRUNK_WIDTH, MU_HIDDEN, action_dim, rng,
                            output_activation="tanh")
        self.l = build_net(TRUNK_WIDTH, L_HIDDEN, tri, rng)
        self._tril_rows, self._tril_cols = np.tril_indices(action_dim)
        self._diag_mask = self._tril_rows == self._tril_cols

    def subnets(self) -> list[DenseNet]:
        return [self.trunk, self.v, self.mu, self.l]

    def params(self) -> list[np.ndarray]:
        out = []
        for net in self.subnets():
            out.extend(net.params())
        return out

    def clone(self) -> "NafNetwork":
        other = object.__new__(NafNetwork)
        other.state_dim = self.state_dim
        other.action_dim = self.action_dim
        other.trunk = self.trunk.clone()
        other.v = self.v.clone()
        other.mu = self.mu.clone()
        other.l = self.l.clone()
        other._tril_rows = self._tril_rows
        other._tril_cols = self._tril_cols
        other._diag_mask = self._diag_mask
        return other

    # -- forward passes ------------------------------------------------------

    def _trunk_out(self, states: np.ndarray):
        return forward(self.trunk, states)

    def mean_action(self, state: np.ndarray) -> np.ndarray:
        t, _ = self._trunk_out(np.atleast_2d(state))
        mu, _ = forward(self.mu, t)
        return mu[0] if np.ndim(state) == 1 else mu

    def state_value(self, states: np.ndarray) -> np.ndarray:
        t, _ = self._trunk_out(states)
        v, _ = forward(self.v, t)
        return v[:, 0]

    def scale_matrix(self, state: np.ndarray) -> np.ndarray:
        """P(s) for a single state; symmetric positive semi-definite."""
        t, _ = self._trunk_out(np.atleast_2d(state))
        lvec, _ = forward(self.l, t)
        low = self._expand_tril(lvec)
        return low[0] @ low[0].T

    def _expand_tril(self, lvec: np.ndarray) -> np.ndarray:
        batch = lvec.shape[0]
        a_dim = self.action_dim
        low = np.zeros((batch, a_dim, a_dim))
        vals = lvec.copy()
        vals[:, self._diag_mask] = np.exp(vals[:, self._diag_mask])
        low[:, self._tril_rows, self._tril_cols] = vals
        return low

    def q_value(self, states: np.ndarray, actions: np.ndarray
                ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(Q, V, A) for a batch; A <= 0 with equality at a = mu(s)."""
        states = np.atleast_2d(states)
        actions = np.atleast_2d(actions)
        t, _ = self._trunk_out(states)
        v, _ = forward(self.v, t)
        mu, _ = forward(self.mu, t)
        lvec, _ = forward(self.l, t)
        low = self._expand_tril(lvec)
        p = low @ np.transpose(low, (0, 2, 1))
        d = actions - mu
        adv = -0.5 * np.einsum("bi,bij,bj->b", d, p, d)
        return v[:, 0] + adv, v[:, 0], adv

    # -- loss and gradients ----------------------------------------------------

    def loss_and_grads(self, states: np.ndarray, actions: np.ndarray,
                       targets: np.ndarray
                       ) -> tuple[float, list[np.ndarray]]:
        """Mean squared Bellman error and exact gradients, aligned with
        params()."""
        states = np.atleast_2d(states)
        actions = np.atleast_2d(actions)
        targets = np.asarray(targets, dtype=float).ravel()
        batch = states.shape[0]

        t, cache_t = self._trunk_out(states)
        v, cache_v = forward(self.v, t)
        mu, cache_m = forward(self.mu, t)
        lvec, cache_l = forward(self.l, t)
        low = self._expand_tril(lvec)
        p = low @ np.transpose(low, (0, 2, 1))
        d = actions - mu
        adv = -0.5 * np.einsum("bi,bij,bj->b", d, p, d)
        q = v[:, 0] + adv
        err = q - targets
        loss = float(np.mean(err ** 2))

        dq = (2.0 / batch) * err  # dLoss/dQ per sample
        dv = dq[:, None]
        pd = np.einsum("bij,bj->bi", p, d)
        dmu = dq[:, None] * pd  # dA/dmu = +P d, times dQ
        # dA/dP = -1/2 d d^T; dA/dL = (G + G^T) L with G = dLoss/dP
        g = dq[:, None, None] * (-0.5) * np.einsum("bi,bj->bij", d, d)
        dlow = (g + np.transpose(g, (0, 2, 1))) @ low
        dlvec = dlow[:, self._tril_rows, self._tril_cols]
        diag_vals = low[:, self._tril_rows[self._diag_mask],
                        self._tril_cols[self._diag_mask]]
        dlvec[:, self._diag_mask] *= diag_vals  # chain through exp()

        grads_v, dt_v = backward(self.v, cache_v, dv)
        grads_m, dt_m = backward(self.mu, cache_m, dmu)
        grads_l, dt_l = backward(self.l, cache_l, dlvec)
        grads_t, _ = backward(self.trunk, cache_t, dt_v + dt_m + dt_l)
        return loss, grads_t + grads_v + grads_m + grads_l

    def soft_update_from(self, eval_net: "NafNetwork", tau: float) -> None:
        for mine, theirs in zip(self.subnets(), eval_net.subnets()):
            soft_update(mine, theirs, tau)


class NafAgent:
    """NAF evaluation/target pair with OU exploration and replay."""

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
        self.eval_net = NafNetwork(state_dim, action_dim,
                                   named_rng(seed, STREAM_WEIGHTS))
        # warm-start the value scale: at the pinned learning rate, ramping
        # the output bias from 0 to r/(1 - discount) would otherwise dominate
        # the TD error for most of a run, starving the policy heads
        self.eval_net.v.layers[-1].bias[0] = value_init
        self.target_net = self.eval_net.clone()
        self.adam = AdamState.for_params(self.eval_net.params(),
                                         learning_rate=learning_rate)
        self.buffer = ReplayBuffer(buffer_capacity, state_dim, action_dim)
        self.noise = OuNoise(action_dim, theta=ou_theta, mu=ou_mu,
                             sigma=ou_sigma)
        self._ou_rng = named_rng(seed, STREAM_OU_NOISE)
        self._replay_rng = named_rng(seed, STREAM_REPLAY)

    def ready(self) -> bool:
        return self.buffer.size >= self.batch_size

    def select_action(self, state: np.ndarray,
                      noise_scale: float = 1.0) -> np.ndarray:
        action = self.eval_net.mean_action(np.asarray(state, dtype=float))
        if noise_scale != 0.0:
            action = action + noise_scale * self.noise.step(self._ou_rng)
        return np.clip(action, -1.0, 1.0)

    def q_value(self, state: np.ndarray, action: np.ndarray
                ) -> tuple[float, float, float]:
        q, v, adv = self.eval_net.q_value(state, action)
        return float(q[0]), float(v[0]), float(adv[0])

    def train_step(self) -> float:
        """One (or more) sampled minibatch updates; returns the last loss."""
        loss = float("nan")
        for _ in range(self.updates_per_step):
            states, actions, rewards, next_states = self.buffer.sample(
                self.batch_size, self._replay_rng)
            targets = rewards + self.discount * self.target_net.state_value(
                next_states)
            loss, grads = self.eval_net.loss_and_grads(states, actions,
                                                       targets)
            adam_step(self.adam, self.eval_net.params(), grads,
                      clip_norm=self.clip_norm)
            self.target_net.soft_update_from(self.eval_net, self.tau)
        return loss

    # -- persistence -----------------------------------------------------------

    def save(self, path) -> None:
        save_checkpoint(path, {
            "trunk": self.eval_net.trunk, "v": self.eval_net.v,
            "mu": self.eval_net.mu, "l": self.eval_net.l,
        }, meta={"kind": "naf", "state_dim": self.state_dim,
                 "action_dim": self.action_dim})

    def load(self, path) -> None:
        nets, meta = load_checkpoint(path)
        if meta.get("kind") != "naf":
            raise ValueError(f"checkpoint kind {meta.get('kind')!r} "
                             f"is not 'naf'")
        self.eval_net.trunk = nets["trunk"]
        self.eval_net.v = nets["v"]
        self.eval_net.mu = nets["mu"]
        self.eval_net.l = nets["l"]
        self.target_net = self.eval_net.clone()
        self.adam = AdamState.for_params(self.eval_net.params(),
                                         learning_rate=self.adam.learning_rate)
