"""Deterministic uplink-cell simulator: UAV relay, passive backscatter
tags, k-means NOMA grouping, and minimum-power allocation."""

from .channel import (ChannelParams, ChannelState, Position,
                      a2g_path_loss, cascaded_backscatter_gain,
                      effective_gains, elevation_angle, noise_power)
from .clustering import (ClusterPlan, allocate_subcarriers, anova_f_test,
                         elbow_select_k, group_users, kmeans)
from .config import ConfigError, SimConfig, dbm_to_watts
from .harness import (Deployment, EeReport, derive_trial_seed, run_trial,
                      sample_deployment, sweep_data, sweep_users,
                      write_results)
from .power import (EeBreakdown, InfeasibleDemandError, PowerSolution,
                    RateDemand, closed_form_cluster_powers, compute_ee,
                    iterative_power_allocation, min_power_single,
                    sinr_gamma)

__version__ = "0.1.0"
