"""Uplink NOMA power allocation with SIC and energy-efficiency accounting.

Within a cluster the receiver decodes the strongest-gain UE first, so the
weakest UE is interference-free and each stronger UE sees the weaker,
still-undecoded UEs as interference.  Minimum powers meeting a common
rate demand follow from a fixed-point sweep from the weakest UE upward;
UEs whose power would exceed the budget are dropped (outage) and the
remaining set is re-solved.
"""

import math
from dataclasses import dataclass

import numpy as np

CONVERGENCE_TOL_W = 1e-12
MAX_FIXED_POINT_ITERS = 1000
MAX_SPECTRAL_EFFICIENCY = 60.0  # bits/s/Hz guard against exponent overflow


class InfeasibleDemandError(ValueError):
    """Rate demand exceeds the supported spectral-efficiency range."""


@dataclass(frozen=True)
class RateDemand:
    """Per-UE traffic: fixed payload per frame."""

    data_bits: float
    frame_duration: float = 1.0  # seconds

    def __post_init__(self):
        if self.data_bits <= 0:
            raise ValueError("data_bits must be > 0")
        if self.frame_duration <= 0:
            raise ValueError("frame_duration must be > 0")

    @property
    def required_rate(self) -> float:
        return self.data_bits / self.frame_duration


@dataclass
class PowerSolution:
    """Per-cluster allocation outcome (arrays indexed like the input)."""

    power: np.ndarray          # watts, 0 for outage UEs
    achieved_rate: np.ndarray  # bits/s, 0 for outage UEs
    outage: np.ndarray         # bool
    iterations: int
    converged: bool
    sic_order: list            # strongest-gain first


@dataclass
class EeBreakdown:
    total_bits: float
    total_energy: float        # joules
    ee: float                  # bits/joule, 0 when nothing is served
    circuit_power: float       # watts per served UE
    served_count: int
    outage_count: int


def sinr_gamma(required_rate, cluster_bandwidth):
    """Shannon-inverted SINR target: 2^(rate/B) - 1."""
    if cluster_bandwidth <= 0:
        raise ValueError("cluster_bandwidth must be > 0")
    se = required_rate / cluster_bandwidth
    if se > MAX_SPECTRAL_EFFICIENCY:
        raise InfeasibleDemandError(
            f"demand of {se:.1f} bits/s/Hz exceeds the supported range")
    return 2.0 ** se - 1.0


def min_power_single(gamma, noise, gain):
    """Closed-form power for an interference-free UE."""
    if gain <= 0 or noise <= 0 or gamma < 0:
        raise ValueError("require gain > 0, noise > 0, gamma >= 0")
    return gamma * noise / gain


def sic_order(gains):
    """Decode order: non-increasing gain, ties by UE index ascending."""
    g = np.asarray(gains, dtype=float)
    return sorted(range(g.size), key=lambda i: (-g[i], i))


def closed_form_cluster_powers(gains, gammas, noise):
    """Exact minimum powers under SIC, without any budget clamping.

    Recursion from the weakest (interference-free) UE upward; serves as
    the analytic reference for the iterative allocator.
    """
    g = np.asarray(gains, dtype=float)
    gam = np.asarray(gammas, dtype=float)
    p = np.zeros(g.size)
    interference = 0.0
    for i in reversed(sic_order(g)):  # weakest first
        p[i] = gam[i] * (noise + interference) / g[i]
        interference += p[i] * g[i]
    return p


def _fixed_point(gains, gamma, noise, order, served):
    """Sweep weakest-to-strongest until powers stop changing."""
    p = np.zeros(gains.size)
    for it in range(1, MAX_FIXED_POINT_ITERS + 1):
        max_change = 0.0
        interference = 0.0
        for i in reversed(order):
            if not served[i]:
                continue
            new_p = gamma * (noise + interference) / gains[i]
            max_change = max(max_change, abs(new_p - p[i]))
            p[i] = new_p
            interference += p[i] * gains[i]
        if max_change < CONVERGENCE_TOL_W:
            return p, it, True
    return p, MAX_FIXED_POINT_ITERS, False


def iterative_power_allocation(cluster_gains, demand: RateDemand,
                               cluster_bandwidth, noise, p_max):
    """Minimum-power allocation for one cluster with admission control.

    After convergence, while any served UE needs more than p_max, the UE
    with the largest power-to-limit ratio is dropped and the reduced set
    is re-solved.
    """
    gains = np.asarray(cluster_gains, dtype=float)
    n = gains.size
    if n == 0:
        raise ValueError("cluster must contain at least one UE")
    if p_max <= 0:
        raise ValueError("p_max must be > 0")

    gamma = sinr_gamma(demand.required_rate, cluster_bandwidth)
    order = sic_order(gains)
    served = np.ones(n, dtype=bool)
    total_iters = 0
    while True:
        p, iters, converged = _fixed_point(gains, gamma, noise, order, served)
        total_iters += iters
        if not np.any(served):
            break
        worst = int(np.argmax(np.where(served, p, -np.inf)))
        if p[worst] <= p_max:
            break
        served[worst] = False
        p[worst] = 0.0

    rates = np.zeros(n)
    interference = 0.0
    for i in reversed(order):
        if not served[i]:
            continue
        rates[i] = cluster_bandwidth * math.log2(
            1.0 + p[i] * gains[i] / (noise + interference))
        interference += p[i] * gains[i]

    return PowerSolution(power=p, achieved_rate=rates, outage=~served,
                         iterations=total_iters, converged=converged,
                         sic_order=order)


def compute_ee(solutions, demand: RateDemand, circuit_power):
    """Bits-per-joule over one frame; outage UEs contribute nothing."""
    served = 0
    outage = 0
    tx_power = 0.0
    for sol in solutions:
        served_mask = ~sol.outage
        served += int(served_mask.sum())
        outage += int(sol.outage.sum())
        tx_power += float(sol.power[served_mask].sum())

    total_bits = demand.data_bits * served
    total_energy = demand.frame_duration * (tx_power + circuit_power * served)
    ee = total_bits / total_energy if served > 0 else 0.0
    return EeBreakdown(total_bits=total_bits, total_energy=total_energy,
                       ee=ee, circuit_power=circuit_power,
                       served_count=served, outage_count=outage)
