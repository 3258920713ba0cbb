"""owcnoma: indoor optical-wireless NOMA downlink simulation, DRL-based
power allocation, and a GF(256) random linear network coding codec."""

__version__ = "0.1.0"

from .channel import (AccessPoint, ChannelEstimate, ReceiverProfile,
                      UserState, csi_error, effective_channel,
                      lambertian_order, los_channel_gain)
from .env import Experience, PowerControlEnv, evaluate_allocations
from .projection import project_ordered_simplex
from .rates import (FeasibilityResult, NoiseModel, PowerAllocation,
                    RateReport, check_constraints, cross_decoding_rate,
                    system_average_sum_rate, user_rate_sic, user_rate_top)
from .scenario import (RewardConfig, Scenario, load_default_scenario,
                       load_scenario, save_scenario)

__all__ = [
    "__version__",
    "AccessPoint", "ChannelEstimate", "ReceiverProfile", "UserState",
    "csi_error", "effective_channel", "lambertian_order", "los_channel_gain",
    "Experience", "PowerControlEnv", "evaluate_allocations",
    "project_ordered_simplex",
    "FeasibilityResult", "NoiseModel", "PowerAllocation", "RateReport",
    "check_constraints", "cross_decoding_rate", "system_average_sum_rate",
    "user_rate_sic", "user_rate_top",
    "RewardConfig", "Scenario", "load_default_scenario", "load_scenario",
    "save_scenario",
]
