"""Deterministic randomness: one named seed, counter-based generator."""

from __future__ import annotations

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    """Philox generator for the given seed; identical streams across runs."""
    return np.random.Generator(np.random.Philox(int(seed)))
