"""Shared 1-D/2-D Gaussian kernel helpers (operators, smoother prior, SSIM)."""

from __future__ import annotations

import math

import numpy as np
from scipy.ndimage import correlate1d

from .errors import BadKernel


def gaussian_taps(sigma: float, width: int) -> np.ndarray:
    """Normalized samples of exp(-d^2 / (2 sigma^2)) at integer offsets."""
    if sigma <= 0.0:
        raise BadKernel(f"sigma must be > 0, got {sigma}")
    if width < 1 or width % 2 == 0:
        raise BadKernel(f"width must be odd and >= 1, got {width}")
    d = np.arange(width, dtype=np.float64) - width // 2
    taps = np.exp(-(d * d) / (2.0 * sigma * sigma))
    return taps / taps.sum()


def gaussian_support(sigma: float) -> int:
    """Odd tap count covering +-3 sigma."""
    return 2 * math.ceil(3.0 * sigma) + 1


def blur2d(volume: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Separable correlation over the trailing two axes, symmetric boundary.

    Symmetric taps + symmetric (edge-repeating) reflection make the induced
    matrix exactly symmetric, so this routine is its own adjoint.
    """
    out = correlate1d(volume, taps, axis=-1, mode="reflect")
    return correlate1d(out, taps, axis=-2, mode="reflect")


def smooth_frames(volume: np.ndarray, sigma: float) -> np.ndarray:
    """Per-frame 2-D Gaussian smoothing; sigma == 0 is the identity."""
    if sigma == 0.0:
        return np.array(volume, dtype=np.float64)
    taps = gaussian_taps(sigma, gaussian_support(sigma))
    return blur2d(np.asarray(volume, dtype=np.float64), taps)
