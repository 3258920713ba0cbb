"""Deterministic named random streams.

Every run derives all randomness from a single 64-bit seed. Each consumer
(scenario generation, OU noise, replay sampling, weight init, ...) gets its
own named substream so that adding or reordering one consumer never perturbs
the draws seen by another.
"""

from __future__ import annotations

import hashlib

import numpy as np

STREAM_SCENARIO = "scenario-gen"
STREAM_OU_NOISE = "ou-noise"
STREAM_REPLAY = "replay-sampling"
STREAM_WEIGHTS = "weight-init"
STREAM_EVAL = "eval-rollout"


def _stable_name_key(name: str) -> int:
    # sha256 keeps the mapping stable across Python processes (hash() is salted)
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def named_rng(seed: int, name: str) -> np.random.Generator:
    """Generator for substream `name` of run seed `seed`."""
    ss = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF,
                                spawn_key=(_stable_name_key(name),))
    return np.random.default_rng(ss)
