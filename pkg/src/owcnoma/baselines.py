"""Non-learning power allocation references.

GRPA weights users by powers of the gain ratio against the strongest user;
exhaustive search enumerates the ordered rational grid on the simplex; fixed
allocation splits power equally. All three return allocations that satisfy
the sum, box, and ordering constraints by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelEstimate
from .rates import (NoiseModel, PowerAllocation, RateReport,
                    group_rate_report)
from .scenario import Scenario


def fixed_allocation(m: int, group_id: int = 0) -> PowerAllocation:
    """Equal split across the group's users."""
    if m < 1:
        raise ValueError("group size must be >= 1")
    return PowerAllocation(group_id=group_id, alphas=np.full(m, 1.0 / m))


def grpa_allocation(effective_gains: np.ndarray,
                    group_id: int = 0) -> PowerAllocation:
    """Gain-ratio rule: weight w_i = (g_1 / g_i)^i, normalized.

    Gains must be strictly positive and non-increasing in order index (order
    1 is the strongest user); the result is then non-decreasing, so the
    ordering constraint holds automatically.
    """
    g = np.asarray(effective_gains, dtype=float)
    if g.ndim != 1 or g.size < 1:
        raise ValueError("need a non-empty gain vector")
    if np.any(g <= 0.0):
        raise ValueError("effective gains must be strictly positive")
    exponents = np.arange(1, g.size + 1)
    weights = (g[0] / g) ** exponents
    return PowerAllocation(group_id=group_id, alphas=weights / weights.sum())


def ordered_grid(m: int, denominator: int):
    """All alpha = n/G with integer n non-decreasing and summing to G,
    ascending lexicographically."""
    def rec(prefix, remaining, slots, minimum):
        if slots == 1:
            if remaining >= minimum:
                yield prefix + [remaining]
            return
        # keep enough for the remaining slots to stay non-decreasing
        for n in range(minimum, remaining // slots + 1):
            yield from rec(prefix + [n], remaining - n, slots - 1, n)

    for counts in rec([], denominator, m, 0):
        yield np.array(counts, dtype=float) / denominator


@dataclass
class ExhaustiveResult:
    allocation: PowerAllocation
    sum_rate: float
    report: RateReport
    feasible: bool  # False when no grid point met the rate constraints
    candidates: int


def exhaustive_search(gains: list[ChannelEstimate], ap, rx,
                      noise: NoiseModel, gamma_min: float,
                      grid_denominator: int,
                      enforce_cross_rate_min: bool = True,
                      group_id: int = 0) -> ExhaustiveResult:
    """Best feasible grid allocation for one group.

    Ties break toward the lexicographically smallest alpha (the enumeration
    is lexicographic, so the first maximizer wins). When no candidate is
    feasible the best infeasible candidate is returned, flagged.
    """
    m = len(gains)
    if grid_denominator < m:
        raise ValueError(f"grid denominator {grid_denominator} < group "
                         f"size {m}")
    best = None
    best_infeasible = None
    count = 0
    for alphas in ordered_grid(m, grid_denominator):
        count += 1
        alloc = PowerAllocation(group_id=group_id, alphas=alphas)
        report = group_rate_report(
            gains, alloc, ap, rx, noise, gamma_min=gamma_min,
            enforce_cross_rate_min=enforce_cross_rate_min)
        entry = (report.group_sum, alloc, report)
        if report.feasible:
            if best is None or entry[0] > best[0]:
                best = entry
        elif best_infeasible is None or entry[0] > best_infeasible[0]:
            best_infeasible = entry
    if best is not None:
        sum_rate, alloc, report = best
        return ExhaustiveResult(alloc, sum_rate, report, True, count)
    sum_rate, alloc, report = best_infeasible
    return ExhaustiveResult(alloc, sum_rate, report, False, count)


def default_grid_denominator(m: int) -> int:
    """Grid resolution keeping candidate counts in the low hundreds."""
    return 50 if m <= 2 else 40


def scenario_grpa(scenario: Scenario) -> dict[int, np.ndarray]:
    estimates = scenario.channel_estimates()
    out = {}
    for g in scenario.group_ids():
        gains = np.array([estimates[uid].effective_gain
                          for uid in scenario.groups[g]])
        out[g] = grpa_allocation(gains, group_id=g).alphas
    return out


def scenario_exhaustive(scenario: Scenario,
                        grid_denominator: int | None = None
                        ) -> tuple[dict[int, np.ndarray], dict[int, ExhaustiveResult]]:
    estimates = scenario.channel_estimates()
    allocs = {}
    results = {}
    for g in scenario.group_ids():
        gains = [estimates[uid] for uid in scenario.groups[g]]
        denom = (grid_denominator if grid_denominator is not None
                 else default_grid_denominator(len(gains)))
        res = exhaustive_search(
            gains, scenario.ap_by_id(g), scenario.receiver, scenario.noise,
            scenario.gamma_min, denom,
            enforce_cross_rate_min=scenario.enforce_cross_rate_min,
            group_id=g)
        allocs[g] = res.allocation.alphas
        results[g] = res
    return allocs, results


def scenario_fixed(scenario: Scenario) -> dict[int, np.ndarray]:
    return {g: fixed_allocation(len(scenario.groups[g]), group_id=g).alphas
            for g in scenario.group_ids()}
