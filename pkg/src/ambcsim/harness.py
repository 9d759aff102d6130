"""Monte Carlo experiment driver.

Each trial samples one random deployment and evaluates it twice on the
same positions: once with backscatter tags active ("triad") and once
with them ignored ("baseline"), so the two modes differ only in the
backscatter term (common-random-numbers pairing).  Sweeps vary the UE
count or the per-UE payload and aggregate energy efficiency per mode.
"""

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List

import numpy as np

from .channel import Position, effective_gains, noise_power
from .clustering import ClusterPlan, group_users
from .config import SimConfig, dbm_to_watts
from .power import (EeBreakdown, RateDemand, compute_ee,
                    iterative_power_allocation)

UE_HEIGHT = 1.5   # m, handset
TAG_HEIGHT = 1.0  # m

MODE_TRIAD = "triad"
MODE_BASELINE = "baseline"

_MASK64 = (1 << 64) - 1


@dataclass
class Deployment:
    ue_positions: List[Position]
    tag_positions: List[Position]
    uav_position: Position


@dataclass
class TrialModeResult:
    """One mode of one trial, with full per-cluster detail."""

    mode: str
    ee: float
    served: int
    outage: int
    k: int
    f_statistic: float
    served_mask: np.ndarray
    max_power: float         # largest served transmit power, W
    min_rate_margin: float   # min over served of achieved/required - 1
    subcarrier_total: int
    solutions: list
    plan: ClusterPlan
    breakdown: EeBreakdown


@dataclass
class TrialRecord:
    sweep_value: float
    trial: int
    trial_seed: int
    mode: str
    ee: float
    served: int
    outage: int
    k: int
    f_statistic: float
    max_power: float
    min_rate_margin: float
    subcarrier_total: int


@dataclass
class Aggregate:
    sweep_value: float
    mode: str
    mean_ee: float
    std_ee: float
    ci95_half: float
    n_trials: int


@dataclass
class EeReport:
    sweep: str  # "users" or "data"
    records: List[TrialRecord]
    aggregates: List[Aggregate]


def _splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_trial_seed(base_seed, sweep_index, trial_index):
    """64-bit splitmix mixing of (base seed, sweep index, trial index)."""
    x = _splitmix64(base_seed & _MASK64)
    x = _splitmix64((x + sweep_index) & _MASK64)
    return _splitmix64((x + trial_index) & _MASK64)


def sample_deployment(config: SimConfig, trial_seed) -> Deployment:
    """Uniform-in-disk positions; UAV fixed at the cell center.

    Draw order (UE radii, UE azimuths, tag radii, tag azimuths) is part
    of the reproducibility contract.
    """
    rng = np.random.default_rng(trial_seed)

    def draw(n, z):
        r = config.coverage_radius * np.sqrt(rng.random(n))
        phi = 2.0 * np.pi * rng.random(n)
        return [Position(float(ri * np.cos(pi)), float(ri * np.sin(pi)), z)
                for ri, pi in zip(r, phi)]

    ues = draw(config.n_ues, UE_HEIGHT)
    tags = draw(config.n_tags, TAG_HEIGHT)
    uav = Position(0.0, 0.0, config.uav_altitude)
    return Deployment(ues, tags, uav)


def evaluate_mode(config: SimConfig, deployment: Deployment, trial_seed,
                  ambc_enabled, mode) -> TrialModeResult:
    """Channel -> grouping -> per-cluster power allocation -> EE."""
    state = effective_gains(deployment, config.channel, ambc_enabled)
    plan = group_users(state, config.n_subcarriers, k_max=config.k_max,
                       seed=trial_seed)
    demand = RateDemand(config.data_bits, config.frame_duration)
    subcarrier_bw = config.bandwidth / config.n_subcarriers

    n = state.effective_gain.size
    served_mask = np.zeros(n, dtype=bool)
    solutions = []
    max_power = 0.0
    min_margin = math.inf
    for c in range(plan.k):
        idx = np.where(plan.assignment == c)[0]
        bw = float(plan.subcarriers_per_cluster[c]) * subcarrier_bw
        noise = noise_power(bw, config.channel.noise_psd)
        sol = iterative_power_allocation(state.effective_gain[idx], demand,
                                         bw, noise, config.p_max)
        solutions.append(sol)
        in_service = ~sol.outage
        served_mask[idx[in_service]] = True
        if in_service.any():
            max_power = max(max_power, float(sol.power[in_service].max()))
            min_margin = min(min_margin, float(
                (sol.achieved_rate[in_service] / demand.required_rate
                 - 1.0).min()))

    breakdown = compute_ee(solutions, demand,
                           dbm_to_watts(config.circuit_power))
    return TrialModeResult(
        mode=mode, ee=breakdown.ee, served=breakdown.served_count,
        outage=breakdown.outage_count, k=plan.k,
        f_statistic=plan.f_statistic, served_mask=served_mask,
        max_power=max_power, min_rate_margin=min_margin,
        subcarrier_total=int(plan.subcarriers_per_cluster.sum()),
        solutions=solutions, plan=plan, breakdown=breakdown)


def run_trial(config: SimConfig, trial_seed):
    """One paired trial; returns (triad, baseline) on the same deployment."""
    deployment = sample_deployment(config, trial_seed)
    triad = evaluate_mode(config, deployment, trial_seed,
                          config.ambc_enabled, MODE_TRIAD)
    baseline = evaluate_mode(config, deployment, trial_seed, False,
                             MODE_BASELINE)
    return triad, baseline


def _aggregate(records):
    keys = sorted({(r.sweep_value, r.mode) for r in records})
    out = []
    for value, mode in keys:
        ees = np.array([r.ee for r in records
                        if r.sweep_value == value and r.mode == mode])
        n = ees.size
        std = float(np.std(ees, ddof=1)) if n > 1 else 0.0
        out.append(Aggregate(sweep_value=value, mode=mode,
                             mean_ee=float(ees.mean()), std_ee=std,
                             ci95_half=1.96 * std / math.sqrt(n),
                             n_trials=n))
    return out


def _sweep(config: SimConfig, name, values, make_cfg) -> EeReport:
    records = []
    for si, value in enumerate(values):
        cfg = make_cfg(config, value)
        for t in range(config.n_trials):
            ts = derive_trial_seed(config.seed, si, t)
            triad, baseline = run_trial(cfg, ts)
            for r in (triad, baseline):
                records.append(TrialRecord(
                    sweep_value=value, trial=t, trial_seed=ts, mode=r.mode,
                    ee=r.ee, served=r.served, outage=r.outage, k=r.k,
                    f_statistic=r.f_statistic, max_power=r.max_power,
                    min_rate_margin=r.min_rate_margin,
                    subcarrier_total=r.subcarrier_total))
    return EeReport(sweep=name, records=records,
                    aggregates=_aggregate(records))


def sweep_users(config: SimConfig, ue_counts) -> EeReport:
    """EE versus UE count at fixed payload."""
    if not ue_counts or any(c < 1 for c in ue_counts):
        raise ValueError("ue_counts must be non-empty with entries >= 1")
    return _sweep(config, "users", list(ue_counts),
                  lambda cfg, v: replace(cfg, n_ues=int(v)))


def sweep_data(config: SimConfig, data_sizes) -> EeReport:
    """EE versus per-UE payload at fixed UE count."""
    if not data_sizes or any(d <= 0 for d in data_sizes):
        raise ValueError("data_sizes must be non-empty with entries > 0")
    return _sweep(config, "data", list(data_sizes),
                  lambda cfg, v: replace(cfg, data_bits=float(v)))


def _fmt(value):
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".12g")


def write_results(report: EeReport, out_dir):
    """Emit trials.csv and aggregates.csv (UTF-8, LF, 12 sig. digits)."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        trials_path = out / "trials.csv"
        with open(trials_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sweep_value", "trial", "mode", "ee_bits_per_joule",
                        "served", "outage", "k", "f_statistic"])
            rows = sorted(report.records,
                          key=lambda r: (r.sweep_value, r.trial, r.mode))
            for r in rows:
                w.writerow([_fmt(r.sweep_value), _fmt(r.trial), r.mode,
                            _fmt(r.ee), _fmt(r.served), _fmt(r.outage),
                            _fmt(r.k), _fmt(r.f_statistic)])
        agg_path = out / "aggregates.csv"
        with open(agg_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sweep_value", "mode", "mean_ee", "std_ee",
                        "ci95_half", "n_trials"])
            rows = sorted(report.aggregates,
                          key=lambda a: (a.sweep_value, a.mode))
            for a in rows:
                w.writerow([_fmt(a.sweep_value), a.mode, _fmt(a.mean_ee),
                            _fmt(a.std_ee), _fmt(a.ci95_half),
                            _fmt(a.n_trials)])
    except OSError as exc:
        raise OSError(f"failed writing results under {out}: {exc}") from exc
    return trials_path, agg_path
