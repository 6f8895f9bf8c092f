"""PSNR and SSIM (Gaussian-windowed, valid region)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

__all__ = ["QualityReport", "psnr", "ssim", "quality"]

SSIM_WIN = 11
SSIM_SIGMA = 1.5
K1, K2 = 0.01, 0.03


@dataclass(frozen=True)
class QualityReport:
    psnr_db: float
    ssim: float

    def __str__(self):
        return f"{self.psnr_db:.2f}/{self.ssim:.4f}"


def _pair(x, ref):
    x = np.asarray(x, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if x.shape != ref.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {ref.shape}")
    return x, ref


def psnr(x, ref, peak: float = 255.0) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` for identical inputs."""
    x, ref = _pair(x, ref)
    mse = np.mean(np.square(x - ref))
    if mse == 0:
        return float("inf")
    return float(10.0 * np.log10(peak * peak / mse))


def _gauss_window():
    r = SSIM_WIN // 2
    g = np.exp(-0.5 * (np.arange(-r, r + 1) / SSIM_SIGMA) ** 2)
    return g / g.sum()


def _local_mean(img, g):
    r = len(g) // 2
    out = correlate1d(correlate1d(img, g, axis=0), g, axis=1)
    return out[r:-r, r:-r]


def ssim(x, ref, peak: float = 255.0) -> float:
    """Mean SSIM over all fully contained 11x11 Gaussian windows (sigma 1.5)."""
    x, ref = _pair(x, ref)
    if min(x.shape) < SSIM_WIN:
        raise ValueError(f"images must be at least {SSIM_WIN} pixels per side")
    g = _gauss_window()
    c1 = (K1 * peak) ** 2
    c2 = (K2 * peak) ** 2
    mx, my = _local_mean(x, g), _local_mean(ref, g)
    sxx = _local_mean(x * x, g) - mx * mx
    syy = _local_mean(ref * ref, g) - my * my
    sxy = _local_mean(x * ref, g) - mx * my
    num = (2 * mx * my + c1) * (2 * sxy + c2)
    den = (mx * mx + my * my + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))


def quality(x, ref, peak: float = 255.0) -> QualityReport:
    return QualityReport(psnr(x, ref, peak), ssim(x, ref, peak))
