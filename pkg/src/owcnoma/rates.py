"""Achievable rates under power-domain NOMA with SIC decoding.

Within a group, users are sorted by location order: index 1 has the best
channel, receives the least power and cancels everyone else; the last index
receives the most power and treats all lower-indexed signals as noise. Rates
use the IM/DD tight bound, i.e. an e/(2*pi) factor inside the log argument.

All rate formulas share the per-layer signal term

    q_j = (e/2pi) * (responsivity * h_eff * alpha_j * P_t)^2

with AWGN power sigma_t^2 at the photodetector output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import AccessPoint, ChannelEstimate, ReceiverProfile

E_OVER_2PI = math.e / (2.0 * math.pi)

# constraint identifiers used in violation reports
SUM_TO_ONE = "sum-to-one"
BOX_BOUNDS = "box-bounds"
ORDERING = "ordering"
MIN_RATE = "min-rate"
MIN_CROSS_RATE = "min-cross-rate"

SUM_TOL = 1e-9


@dataclass(frozen=True)
class PowerAllocation:
    """Ordered power fractions for one group, index 1..M by location order."""

    group_id: int
    alphas: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.alphas, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("alphas must be a non-empty 1-D vector")
        if not np.all(np.isfinite(arr)):
            raise ValueError("alphas must be finite")
        object.__setattr__(self, "alphas", arr)

    @property
    def size(self) -> int:
        return int(self.alphas.size)


@dataclass(frozen=True)
class NoiseModel:
    sigma_t: float  # A, AWGN std at the PD output

    def __post_init__(self):
        if self.sigma_t <= 0:
            raise ValueError("sigma_t must be > 0")


@dataclass
class RateReport:
    """Per-group rate summary.

    cross_rates[m, i] (0-based) holds the rate at which the order-(i+1) user
    can decode the order-(m+1) user's signal, defined for m < i only; other
    entries are NaN.
    """

    group_id: int
    per_user_rates: np.ndarray  # bit/s, by order index
    cross_rates: np.ndarray  # bit/s, (M, M), NaN where undefined
    group_sum: float
    feasible: bool = False
    violations: list[tuple[str, float]] = field(default_factory=list)


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    violations: list[tuple[str, float]]


def _signal_terms(h_eff: float, alphas: np.ndarray, ap: AccessPoint,
                  rx: ReceiverProfile) -> np.ndarray:
    amp = rx.responsivity * h_eff * ap.transmit_power
    return E_OVER_2PI * (amp * alphas) ** 2


def user_rate_top(order1_gain: float, alpha1: float, ap: AccessPoint,
                  rx: ReceiverProfile, noise: NoiseModel) -> float:
    """Rate of the order-1 user: full SIC, no residual interference."""
    q = E_OVER_2PI * (rx.responsivity * order1_gain * alpha1
                      * ap.transmit_power) ** 2
    return ap.bandwidth * math.log2(1.0 + q / noise.sigma_t ** 2)


def user_rate_sic(i: int, gains: ChannelEstimate, alloc: PowerAllocation,
                  ap: AccessPoint, rx: ReceiverProfile,
                  noise: NoiseModel) -> float:
    """Rate of the order-i user (i >= 2): interference from orders j < i."""
    if i < 2 or i > alloc.size:
        raise IndexError(
            f"order index {i} outside [2, {alloc.size}]; "
            f"use user_rate_top for i=1")
    q = _signal_terms(gains.effective_gain, alloc.alphas, ap, rx)
    num = q[i - 1]
    den = float(np.sum(q[: i - 1])) + noise.sigma_t ** 2
    return ap.bandwidth * math.log2(1.0 + num / den)


def cross_decoding_rate(m_prime: int, i: int, gains: ChannelEstimate,
                        alloc: PowerAllocation, ap: AccessPoint,
                        rx: ReceiverProfile, noise: NoiseModel) -> float:
    """Rate at which the order-i user decodes the order-m' signal, m' < i.

    The denominator accumulates layers m'..i-1 as seen at receiver i.
    """
    if not 1 <= m_prime < i <= alloc.size:
        raise IndexError(f"need 1 <= m'={m_prime} < i={i} <= {alloc.size}")
    q = _signal_terms(gains.effective_gain, alloc.alphas, ap, rx)
    num = q[m_prime - 1]
    den = float(np.sum(q[m_prime - 1: i - 1])) + noise.sigma_t ** 2
    return ap.bandwidth * math.log2(1.0 + num / den)


def group_rate_report(gains: list[ChannelEstimate], alloc: PowerAllocation,
                      ap: AccessPoint, rx: ReceiverProfile, noise: NoiseModel,
                      gamma_min: float = 0.0,
                      enforce_cross_rate_min: bool = True) -> RateReport:
    """Rates for a whole group; gains listed by order index (1 first)."""
    m_users = alloc.size
    if len(gains) != m_users:
        raise ValueError(f"{len(gains)} gains vs {m_users} power fractions")
    rates = np.empty(m_users)
    rates[0] = user_rate_top(gains[0].effective_gain, float(alloc.alphas[0]),
                             ap, rx, noise)
    for i in range(2, m_users + 1):
        rates[i - 1] = user_rate_sic(i, gains[i - 1], alloc, ap, rx, noise)
    cross = np.full((m_users, m_users), np.nan)
    for i in range(2, m_users + 1):
        for m_prime in range(1, i):
            cross[m_prime - 1, i - 1] = cross_decoding_rate(
                m_prime, i, gains[i - 1], alloc, ap, rx, noise)
    report = RateReport(group_id=alloc.group_id, per_user_rates=rates,
                        cross_rates=cross, group_sum=float(np.sum(rates)))
    res = check_constraints(alloc, report, gamma_min,
                            enforce_cross_rate_min=enforce_cross_rate_min)
    report.feasible = res.feasible
    report.violations = res.violations
    return report


def system_average_sum_rate(reports: list[RateReport]) -> float:
    """Objective value: group sum rates averaged over the K groups."""
    if not reports:
        raise ValueError("need at least one group report")
    return float(np.mean([r.group_sum for r in reports]))


def check_constraints(alloc: PowerAllocation, report: RateReport,
                      gamma_min: float,
                      enforce_cross_rate_min: bool = True,
                      sum_tol: float = SUM_TOL) -> FeasibilityResult:
    """Test the full constraint set for one group.

    Violation magnitudes are in natural units: power-fraction gaps for the
    sum/box/ordering constraints, rate shortfalls in bit/s for the minimum
    rate constraints (own-signal and, unless relaxed, every cross-decoding
    step).
    """
    a = alloc.alphas
    violations: list[tuple[str, float]] = []

    gap = abs(float(np.sum(a)) - 1.0)
    if gap > sum_tol:
        violations.append((SUM_TO_ONE, gap))

    box = float(np.sum(np.maximum(-a, 0.0)) + np.sum(np.maximum(a - 1.0, 0.0)))
    if box > 0.0:
        violations.append((BOX_BOUNDS, box))

    if a.size > 1:
        order_gap = float(np.sum(np.maximum(a[:-1] - a[1:], 0.0)))
        if order_gap > 0.0:
            violations.append((ORDERING, order_gap))

    for i, rate in enumerate(report.per_user_rates):
        if rate < gamma_min:
            violations.append((MIN_RATE, float(gamma_min - rate)))
    if enforce_cross_rate_min:
        m_users = a.size
        for i in range(2, m_users + 1):
            for m_prime in range(1, i):
                rate = report.cross_rates[m_prime - 1, i - 1]
                if rate < gamma_min:
                    violations.append((MIN_CROSS_RATE, float(gamma_min - rate)))

    return FeasibilityResult(feasible=not violations, violations=violations)
