"""Classical comparators: plain least-squares CG and TV-regularized ADMM."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch
from .krylov import _cg_on, cg_data_consistency
from .operators import LinearOp
from .video import VideoTensor, as_volume

TV_AXES = {"t": 0, "h": 2, "w": 3}


def _wrap(y, x: np.ndarray):
    """Return the estimate in the measurement's container type."""
    return VideoTensor(x) if isinstance(y, VideoTensor) else x


@dataclass(frozen=True)
class AdmmConfig:
    rho: float = 1.0
    lam: float = 0.001
    outer: int = 30
    inner: int = 20
    axes: tuple[str, ...] = ("t", "h", "w")

    def __post_init__(self):
        if self.rho <= 0.0:
            raise ValueError(f"rho must be > 0, got {self.rho}")
        if self.lam < 0.0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if self.outer < 1 or self.inner < 1:
            raise ValueError("outer and inner iteration counts must be >= 1")
        if not self.axes or any(a not in TV_AXES for a in self.axes):
            raise ValueError(f"axes must be a nonempty subset of {tuple(TV_AXES)}")


def standalone_cg(a: LinearOp, y, total_iters: int):
    """CG on the normal equations from a zero start; the measurement-residual
    yardstick the diffusion solver is compared against."""
    if total_iters < 1:
        raise ValueError(f"total_iters must be >= 1, got {total_iters}")
    yv = as_volume(y)
    if yv.shape != a.out_shape:
        raise ShapeMismatch(f"measurement shape {yv.shape} != {a.out_shape}")
    x0 = np.zeros(a.in_shape)
    x, _ = cg_data_consistency(a, yv, x0, total_iters)
    return _wrap(y, x)


def forward_diff(x: np.ndarray, axis: int) -> np.ndarray:
    """Forward difference with the trailing slice set to zero."""
    out = np.zeros_like(x)
    src = [slice(None)] * x.ndim
    dst = [slice(None)] * x.ndim
    src[axis] = slice(1, None)
    dst[axis] = slice(None, -1)
    out[tuple(dst)] = x[tuple(src)] - x[tuple(dst)]
    return out


def forward_diff_adjoint(z: np.ndarray, axis: int) -> np.ndarray:
    """Exact adjoint of :func:`forward_diff` (negative divergence)."""
    out = np.zeros_like(z)
    first = [slice(None)] * z.ndim
    first[axis] = slice(None, 1)
    out[tuple(first)] = -z[tuple(first)]
    mid_dst = [slice(None)] * z.ndim
    mid_dst[axis] = slice(1, -1)
    prev = [slice(None)] * z.ndim
    prev[axis] = slice(None, -2)
    cur = [slice(None)] * z.ndim
    cur[axis] = slice(1, -1)
    out[tuple(mid_dst)] = z[tuple(prev)] - z[tuple(cur)]
    last = [slice(None)] * z.ndim
    last[axis] = slice(-1, None)
    second_last = [slice(None)] * z.ndim
    second_last[axis] = slice(-2, -1)
    out[tuple(last)] = z[tuple(second_last)]
    return out


def soft_threshold(v: np.ndarray, kappa: float) -> np.ndarray:
    """sign(v) * max(|v| - kappa, 0), elementwise."""
    return np.sign(v) * np.maximum(np.abs(v) - kappa, 0.0)


def _tv_stack(x: np.ndarray, axis_ids: tuple[int, ...]) -> np.ndarray:
    return np.stack([forward_diff(x, a) for a in axis_ids])


def _tv_stack_adjoint(z: np.ndarray, axis_ids: tuple[int, ...]) -> np.ndarray:
    out = np.zeros(z.shape[1:])
    for k, a in enumerate(axis_ids):
        out += forward_diff_adjoint(z[k], a)
    return out


def tv_objective(a: LinearOp, x, y, lam: float, axes=("t", "h", "w")) -> float:
    """(1/2) ||A x - y||^2 + lam * sum |D x| with anisotropic differences."""
    xv = as_volume(x)
    yv = as_volume(y)
    axis_ids = tuple(TV_AXES[name] for name in axes)
    fit = a._apply(xv) - yv
    return float(0.5 * (fit * fit).sum() + lam * np.abs(_tv_stack(xv, axis_ids)).sum())


def admm_tv(a: LinearOp, y, cfg: AdmmConfig):
    """ADMM on (1/2)||A X - Y||^2 + lam ||D X||_1 with the split Z = D X.

    X starts at zero; each X-update runs ``cfg.inner`` CG iterations on
    (A^T A + rho D^T D) warm-started from the previous X; Z is the
    soft-threshold shrinkage at lam/rho; U is the scaled dual ascent.
    Returns the estimate and the objective value per outer iteration
    (entry 0 evaluated at the zero start).
    """
    yv = as_volume(y)
    if yv.shape != a.out_shape:
        raise ShapeMismatch(f"measurement shape {yv.shape} != {a.out_shape}")
    axis_ids = tuple(TV_AXES[name] for name in cfg.axes)
    x = np.zeros(a.in_shape)
    z = np.zeros((len(axis_ids),) + tuple(a.in_shape))
    u = np.zeros_like(z)
    aty = a._adjoint(yv)
    kappa = cfg.lam / cfg.rho

    def matvec(v: np.ndarray) -> np.ndarray:
        return a.normal_apply(v) + cfg.rho * _tv_stack_adjoint(_tv_stack(v, axis_ids), axis_ids)

    history = [tv_objective(a, x, yv, cfg.lam, cfg.axes)]
    for _ in range(cfg.outer):
        b = aty + cfg.rho * _tv_stack_adjoint(z - u, axis_ids)
        _cg_on(matvec, b, x, cfg.inner)
        v = _tv_stack(x, axis_ids) + u
        z = soft_threshold(v, kappa)
        u = v - z
        history.append(tv_objective(a, x, yv, cfg.lam, cfg.axes))
    return _wrap(y, x), history
