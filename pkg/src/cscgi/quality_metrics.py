"""PSNR and SSIM for images with dynamic range [0, 1]."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ghost_optics import SceneImage


@dataclass
class MetricReport:
    algorithm: str
    frame_count: int
    psnr_db: float  # may be math.inf for identical images
    ssim: float


def _as_array(img) -> np.ndarray:
    if isinstance(img, SceneImage):
        return img.pixels
    return np.asarray(img, dtype=np.float64)


def psnr(a, b) -> float:
    """10*log10(1/MSE) in dB; identical images return +inf."""
    a, b = _as_array(a), _as_array(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def ssim(a, b, window: int = 8, k1: float = 0.01, k2: float = 0.03) -> float:
    """Mean local SSIM over all sliding windows (uniform window, L = 1).

    Per window, with population statistics mu, sigma^2, sigma_ab:
      ((2 mu_a mu_b + C1)(2 sigma_ab + C2)) /
      ((mu_a^2 + mu_b^2 + C1)(sigma_a^2 + sigma_b^2 + C2))
    C1 = (k1 L)^2, C2 = (k2 L)^2.
    """
    a, b = _as_array(a), _as_array(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    if window > min(a.shape):
        raise ValueError("window larger than image")
    c1, c2 = k1 * k1, k2 * k2
    wa = np.lib.stride_tricks.sliding_window_view(a, (window, window))
    wb = np.lib.stride_tricks.sliding_window_view(b, (window, window))
    mu_a = wa.mean(axis=(-2, -1))
    mu_b = wb.mean(axis=(-2, -1))
    var_a = (wa * wa).mean(axis=(-2, -1)) - mu_a * mu_a
    var_b = (wb * wb).mean(axis=(-2, -1)) - mu_b * mu_b
    cov = (wa * wb).mean(axis=(-2, -1)) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))
