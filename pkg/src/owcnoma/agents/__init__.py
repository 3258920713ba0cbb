from .common import (OuNoise, ReplayBuffer, TrainingLog, greedy_rollout,
                     noise_schedule, run_training)
from .ddpg import DdpgAgent, ddpg_train_step
from .naf import NafAgent, NafNetwork

__all__ = [
    "OuNoise", "ReplayBuffer", "TrainingLog", "greedy_rollout",
    "noise_schedule", "run_training", "DdpgAgent", "ddpg_train_step",
    "NafAgent", "NafNetwork",
]
