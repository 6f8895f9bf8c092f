"""Synthetic multi-look speckle on amplitude images.

An L-look intensity factor is the mean of L unit-mean exponentials, i.e.
Gamma(L, 1/L). Its square root multiplies the clean amplitude, so
``f / u`` is Nakagami(L, 1) distributed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["NoiseSpec", "add_speckle", "speckle_moments", "speckle_factor"]


@dataclass(frozen=True)
class NoiseSpec:
    looks: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.looks < 1:
            raise ValueError("looks must be >= 1")


def _rng(seed):
    # Philox is counter based; one key gives one fixed stream
    return np.random.Generator(np.random.Philox(key=int(seed) & (2**64 - 1)))


def speckle_factor(shape, spec: NoiseSpec) -> np.ndarray:
    """Multiplicative amplitude factor ``sqrt(s)``, ``s ~ Gamma(L, 1/L)``."""
    s = _rng(spec.seed).standard_gamma(spec.looks, size=shape) / spec.looks
    return np.sqrt(s)


def add_speckle(u, spec: NoiseSpec) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if np.any(u < 0):
        raise ValueError("amplitudes must be non-negative")
    return u * speckle_factor(u.shape, spec)


def speckle_moments(samples, reference):
    """Sample mean and variance of ``(f/u)^2`` (estimates of 1 and 1/L)."""
    r2 = np.square(np.asarray(samples, dtype=np.float64) / np.asarray(reference, dtype=np.float64))
    return float(r2.mean()), float(r2.var())
