"""The power-control MDP around the physical model.

State per group: (normalized effective gains, power fractions, normalized
noise variances), concatenated over groups in ascending group-id order.
Actions are continuous per-user adjustments in [-1, 1], scaled by the
scenario's action step and projected back onto the ordered simplex, so every
visited allocation is feasible with respect to the power constraints; only
the minimum-rate constraints can be violated, and those drive the penalty.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .channel import ChannelEstimate
from .projection import project_ordered_simplex
from .rates import (PowerAllocation, RateReport, check_constraints,
                    group_rate_report, system_average_sum_rate)
from .scenario import RewardConfig, Scenario

SUM_TOL = 1e-9


@dataclass(frozen=True)
class Experience:
    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray


class PowerControlEnv:
    """Single-owner mutable environment; one instance per training run."""

    def __init__(self, scenario: Scenario, trace_path=None):
        self.scenario = scenario
        self.reward_config: RewardConfig = scenario.reward
        self.group_ids = scenario.group_ids()
        self.group_sizes = {g: len(scenario.groups[g])
                            for g in self.group_ids}
        self.action_dim = sum(self.group_sizes.values())
        self.state_dim = 3 * self.action_dim

        estimates = scenario.channel_estimates()
        self._gains: dict[int, list[ChannelEstimate]] = {
            g: [estimates[uid] for uid in scenario.groups[g]]
            for g in self.group_ids}
        self._aps = {g: scenario.ap_by_id(g) for g in self.group_ids}
        ref = scenario.reference_gain()
        if ref <= 0:
            raise ValueError("scenario has no usable LOS links")
        self._gain_scale = 1.0 / ref

        self.alphas: dict[int, np.ndarray] = {}
        self.reports: list[RateReport] = []
        self.steps_taken = 0
        self._trace = None
        self._trace_file = None
        if trace_path is not None:
            self._trace_file = open(trace_path, "w", newline="")
            self._trace = csv.writer(self._trace_file)
            self._trace.writerow(["step", "alphas", "reward", "feasible"])

    def close(self) -> None:
        if self._trace_file is not None:
            self._trace_file.close()
            self._trace_file = None
            self._trace = None

    # -- MDP interface -------------------------------------------------------

    def reset(self, seed: int | None = None) -> np.ndarray:
        """Equal power split in every group; recompute rates and state."""
        del seed  # snapshots are static; kept for interface stability
        self.alphas = {g: np.full(m, 1.0 / m)
                       for g, m in self.group_sizes.items()}
        self.steps_taken = 0
        self._recompute()
        return self._state()

    def step(self, action: np.ndarray) -> tuple[np.ndarray, float]:
        if not self.alphas:
            raise RuntimeError("call reset() before step()")
        action = np.asarray(action, dtype=float).ravel()
        if action.size != self.action_dim:
            raise ValueError(f"action dimension {action.size} != "
                             f"{self.action_dim}")
        if not np.all(np.isfinite(action)):
            raise ValueError("action must be finite")
        action = np.clip(action, -1.0, 1.0)
        delta = self.scenario.action_step
        offset = 0
        for g in self.group_ids:
            m = self.group_sizes[g]
            raw = self.alphas[g] + delta * action[offset:offset + m]
            projected = project_ordered_simplex(raw)
            _assert_power_feasible(projected, g)
            self.alphas[g] = projected
            offset += m
        self.steps_taken += 1
        reward = self._recompute()
        if self._trace is not None:
            flat = np.concatenate([self.alphas[g] for g in self.group_ids])
            self._trace.writerow(
                [self.steps_taken, " ".join(repr(v) for v in flat),
                 repr(reward), int(self.last_feasible)])
        return self._state(), reward

    def project_feasible(self, raw: np.ndarray,
                         group_id: int | None = None) -> PowerAllocation:
        gid = self.group_ids[0] if group_id is None else group_id
        return PowerAllocation(group_id=gid,
                               alphas=project_ordered_simplex(raw))

    def violation_measure(self) -> float:
        return violation_measure(self.reports, self.scenario.gamma_min)

    # -- views ---------------------------------------------------------------

    @property
    def last_feasible(self) -> bool:
        return all(r.feasible for r in self.reports)

    def average_sum_rate(self) -> float:
        return system_average_sum_rate(self.reports)

    def group_state(self, group_id: int) -> np.ndarray:
        """The 3*M_k feature block of one group (per-group agent mode)."""
        idx = self.group_ids.index(group_id)
        sizes = [self.group_sizes[g] for g in self.group_ids]
        start = 3 * sum(sizes[:idx])
        return self._state()[start:start + 3 * sizes[idx]]

    # -- internals -----------------------------------------------------------

    def _recompute(self) -> float:
        scenario = self.scenario
        self.reports = []
        for g in self.group_ids:
            alloc = PowerAllocation(group_id=g, alphas=self.alphas[g])
            self.reports.append(group_rate_report(
                self._gains[g], alloc, self._aps[g], scenario.receiver,
                scenario.noise, gamma_min=scenario.gamma_min,
                enforce_cross_rate_min=scenario.enforce_cross_rate_min))
        if self.last_feasible:
            return self.average_sum_rate() / self.reward_config.rate_scale
        return -self.reward_config.penalty_weight * self.violation_measure()

    def _state(self) -> np.ndarray:
        blocks = []
        for g in self.group_ids:
            gains = np.array([ce.effective_gain for ce in self._gains[g]])
            noise_feat = np.full(self.group_sizes[g], 1.0)  # sigma^2/sigma_t^2
            blocks.append(gains * self._gain_scale)
            blocks.append(self.alphas[g])
            blocks.append(noise_feat)
        return np.concatenate(blocks)


def _assert_power_feasible(alphas: np.ndarray, group_id: int) -> None:
    """Post-projection guard; these can only fail on a projection bug."""
    if abs(float(np.sum(alphas)) - 1.0) > SUM_TOL:
        raise RuntimeError(f"group {group_id}: projected sum "
                           f"{np.sum(alphas)} != 1")
    if np.any(alphas < -SUM_TOL) or np.any(alphas > 1.0 + SUM_TOL):
        raise RuntimeError(f"group {group_id}: projected box violation")
    if np.any(alphas[:-1] > alphas[1:] + SUM_TOL):
        raise RuntimeError(f"group {group_id}: projected ordering violation")


def violation_measure(reports: list[RateReport], gamma_min: float) -> float:
    """Sum of normalized violation magnitudes across groups.

    Rate shortfalls are divided by gamma_min; power-fraction gaps count in
    absolute units.
    """
    total = 0.0
    for report in reports:
        for cid, magnitude in report.violations:
            if cid in ("min-rate", "min-cross-rate"):
                total += magnitude / gamma_min if gamma_min > 0 else 0.0
            else:
                total += magnitude
    return total


def evaluate_allocations(scenario: Scenario,
                         alphas: dict[int, np.ndarray]
                         ) -> tuple[list[RateReport], float]:
    """Rate reports and average sum rate for a full allocation set."""
    estimates = scenario.channel_estimates()
    reports = []
    for g in scenario.group_ids():
        gains = [estimates[uid] for uid in scenario.groups[g]]
        alloc = PowerAllocation(group_id=g,
                                alphas=np.asarray(alphas[g], dtype=float))
        reports.append(group_rate_report(
            gains, alloc, scenario.ap_by_id(g), scenario.receiver,
            scenario.noise, gamma_min=scenario.gamma_min,
            enforce_cross_rate_min=scenario.enforce_cross_rate_min))
    return reports, system_average_sum_rate(reports)


def allocation_violations(alloc: PowerAllocation, report: RateReport,
                          gamma_min: float):
    return check_constraints(alloc, report, gamma_min)
