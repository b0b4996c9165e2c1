"""Noise injection and the utility metric for the utility-privacy tradeoff.

Noise is additive Gaussian, scaled per field by ``level`` times the field's
population std. Draws come from numpy's PCG64 generator seeded with the
spec's 64-bit seed, which is reproducible across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DataSet, InvalidNoiseLevel, MarketError


class ShapeMismatch(MarketError):
    pass


def check_level(level: float) -> float:
    if not 0.0 <= level <= 1.0:
        raise InvalidNoiseLevel(f"noise level {level} outside [0, 1]")
    return float(level)


@dataclass(frozen=True)
class NoiseSpec:
    level: float
    seed: int

    def __post_init__(self):
        check_level(self.level)


def noise_generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed & 0xFFFF_FFFF_FFFF_FFFF))


def inject_noise(data: DataSet, spec: NoiseSpec) -> DataSet:
    level = check_level(spec.level)
    if level == 0.0:
        return data.with_values(data.values.copy())
    rng = noise_generator(spec.seed)
    scale = level * data.values.std(axis=0)
    eps = rng.standard_normal(data.values.shape) * scale
    return data.with_values(data.values + eps)


def utility_score(original: DataSet, noisy: DataSet) -> float:
    """1 - NRMSE, clamped at 0. NRMSE is averaged over fields."""
    a, b = original.values, noisy.values
    if a.shape != b.shape:
        raise ShapeMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    std = a.std(axis=0)
    rmse = np.sqrt(np.mean((a - b) ** 2, axis=0))
    nrmse = np.empty_like(std)
    flat = std == 0
    # a constant field has no scale: exact copy scores 0 error, anything else 1
    nrmse[flat] = np.where(rmse[flat] == 0, 0.0, 1.0)
    nrmse[~flat] = rmse[~flat] / std[~flat]
    return float(max(0.0, 1.0 - nrmse.mean()))
