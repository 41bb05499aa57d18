"""Quantitative evaluation: PSNR, SSIM, measurement residual, frame spread."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .errors import FrameTooSmall, ShapeMismatch, SingleFrame
from .kernels import gaussian_taps
from .operators import LinearOp
from .video import as_volume

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
DYNAMIC_RANGE = 1.0


@dataclass(frozen=True)
class MetricReport:
    psnr_db: float
    ssim: float
    residual: float
    inter_batch_diff: float
    # reserved for external perceptual evaluators
    lpips: float | None = None
    fvd: float | None = None

    def to_dict(self) -> dict:
        return {
            "psnr_db": self.psnr_db,
            "ssim": self.ssim,
            "residual": self.residual,
            "inter_batch_diff": self.inter_batch_diff,
            "lpips": self.lpips,
            "fvd": self.fvd,
        }


def _pair(x, ref) -> tuple[np.ndarray, np.ndarray]:
    xv, rv = as_volume(x), as_volume(ref)
    if xv.shape != rv.shape:
        raise ShapeMismatch(f"shapes differ: {xv.shape} vs {rv.shape}")
    return xv, rv


def psnr(x, ref) -> float:
    """10 log10(1 / MSE) over all voxels, peak value 1; +inf for identical input."""
    xv, rv = _pair(x, ref)
    mse = float(np.mean((xv - rv) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _local_stats(gray: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Gaussian-windowed local means over (N, H, W); cropped to positions whose
    window lies fully inside the frame (padding mode is then irrelevant)."""
    half = len(taps) // 2
    out = correlate1d(gray, taps, axis=-1, mode="nearest")
    out = correlate1d(out, taps, axis=-2, mode="nearest")
    return out[:, half:-half, half:-half]


def ssim(x, ref) -> float:
    """Mean structural similarity over frames (Gaussian 11x11 window, sigma 1.5,
    K1=0.01, K2=0.03, dynamic range 1); channels are averaged to gray first."""
    xv, rv = _pair(x, ref)
    n, c, h, w = xv.shape
    if h < SSIM_WINDOW or w < SSIM_WINDOW:
        raise FrameTooSmall(f"frame {h}x{w} smaller than the {SSIM_WINDOW}px window")
    gx = xv.mean(axis=1)
    gr = rv.mean(axis=1)
    taps = gaussian_taps(SSIM_SIGMA, SSIM_WINDOW)
    mu_x = _local_stats(gx, taps)
    mu_r = _local_stats(gr, taps)
    xx = _local_stats(gx * gx, taps) - mu_x * mu_x
    rr = _local_stats(gr * gr, taps) - mu_r * mu_r
    xr = _local_stats(gx * gr, taps) - mu_x * mu_r
    c1 = (SSIM_K1 * DYNAMIC_RANGE) ** 2
    c2 = (SSIM_K2 * DYNAMIC_RANGE) ** 2
    ssim_map = ((2.0 * mu_x * mu_r + c1) * (2.0 * xr + c2)) / (
        (mu_x * mu_x + mu_r * mu_r + c1) * (xx + rr + c2)
    )
    return float(ssim_map.reshape(n, -1).mean(axis=1).mean())


def inter_batch_diff(x) -> float:
    """Mean Frobenius distance between consecutive frames."""
    xv = as_volume(x)
    n = xv.shape[0]
    if n < 2:
        raise SingleFrame("need at least 2 frames")
    diffs = xv[1:] - xv[:-1]
    norms = np.sqrt((diffs.reshape(n - 1, -1) ** 2).sum(axis=1))
    return float(norms.sum() / (n - 1))


def residual(a: LinearOp, x, y) -> float:
    """Squared Frobenius norm of Y - A(X)."""
    xv = as_volume(x)
    yv = as_volume(y)
    if xv.shape != a.in_shape or yv.shape != a.out_shape:
        raise ShapeMismatch(
            f"residual expects X {a.in_shape} and Y {a.out_shape}, "
            f"got {xv.shape} and {yv.shape}"
        )
    diff = yv - a._apply(xv)
    return float((diff * diff).sum())


def report(x, ref, a: LinearOp | None = None, y=None) -> MetricReport:
    """Bundle the standard metrics; residual needs the operator and measurement
    (falls back to ||x - ref||^2 when omitted)."""
    if a is not None and y is not None:
        res = residual(a, x, y)
    else:
        xv, rv = _pair(x, ref)
        res = float(((xv - rv) ** 2).sum())
    n = as_volume(x).shape[0]
    ibd = inter_batch_diff(x) if n >= 2 else 0.0
    return MetricReport(psnr_db=psnr(x, ref), ssim=ssim(x, ref), residual=res, inter_batch_diff=ibd)
