"""Data-consistency solvers on a denoised estimate.

``cg_data_consistency`` runs conjugate gradients on the normal equations
A^T A X = A^T Y from a warm start, which keeps every iterate in the warm
start plus the Krylov span of the normal-equation matrix and makes the
measurement residual ||Y - A(X_k)|| nonincreasing in k.
``gd_data_consistency`` is the one-step gradient alternative.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NonFiniteEncountered, ShapeMismatch
from .operators import LinearOp
from .video import as_volume, like

BREAKDOWN_EPS = 1e-30  # curvature below this means a flat direction (common for masks)


@dataclass(frozen=True)
class CgReport:
    """residual_norms[k] is the measurement residual ||Y - A(X_k)||, entry 0
    taken at the warm start; monotone nonincreasing by construction."""

    iterations_run: int
    residual_norms: tuple[float, ...]
    converged: bool


def _cg_on(matvec: Callable[[np.ndarray], np.ndarray], b: np.ndarray, x: np.ndarray,
           iters: int, on_update: Callable[[np.ndarray], bool] | None = None) -> int:
    """Plain CG on an SPD matvec; mutates x in place, returns iterations run.

    ``on_update`` is called after each update; returning True stops early.
    """
    r = b - matvec(x)
    p = r.copy()
    rs = float(np.vdot(r, r).real)
    done = 0
    for _ in range(iters):
        if rs <= BREAKDOWN_EPS:
            break
        q = matvec(p)
        curvature = float(np.vdot(p, q).real)
        if curvature <= BREAKDOWN_EPS:
            break
        step = rs / curvature
        x += step * p
        r -= step * q
        done += 1
        if not np.isfinite(x).all():
            raise NonFiniteEncountered(f"CG produced non-finite values at iteration {done}")
        if on_update is not None and on_update(x):
            break
        rs_next = float(np.vdot(r, r).real)
        p = r + (rs_next / rs) * p
        rs = rs_next
    return done


def cg_data_consistency(a: LinearOp, y, x_init, l: int, tol: float = 0.0):
    """At most ``l`` CG iterations on the normal equations, warm-started at
    ``x_init``; stops early once the measurement residual drops to ``tol``."""
    if l < 1:
        raise ValueError(f"l must be >= 1, got {l}")
    if tol < 0.0:
        raise ValueError(f"tol must be >= 0, got {tol}")
    yv = as_volume(y)
    xv = as_volume(x_init).copy()
    if yv.shape != a.out_shape:
        raise ShapeMismatch(f"measurement shape {yv.shape} != {a.out_shape}")
    if xv.shape != a.in_shape:
        raise ShapeMismatch(f"warm start shape {xv.shape} != {a.in_shape}")

    residuals = [float(np.linalg.norm(yv - a._apply(xv)))]

    def record(x: np.ndarray) -> bool:
        rn = float(np.linalg.norm(yv - a._apply(x)))
        residuals.append(rn)
        return tol > 0.0 and rn <= tol

    iters = _cg_on(a.normal_apply, a._adjoint(yv), xv, l, on_update=record)
    converged = residuals[-1] <= tol if tol > 0.0 else iters < l
    return like(x_init, xv), CgReport(iters, tuple(residuals), converged)


def gd_data_consistency(a: LinearOp, y, x_hat, gamma: float):
    """One explicit gradient step on ||Y - A(X)||^2:
    x_hat - gamma * 2 * A^T (A x_hat - Y)."""
    if gamma <= 0.0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    yv = as_volume(y)
    xv = as_volume(x_hat)
    if yv.shape != a.out_shape:
        raise ShapeMismatch(f"measurement shape {yv.shape} != {a.out_shape}")
    if xv.shape != a.in_shape:
        raise ShapeMismatch(f"estimate shape {xv.shape} != {a.in_shape}")
    out = xv - gamma * 2.0 * a._adjoint(a._apply(xv) - yv)
    if not np.isfinite(out).all():
        raise NonFiniteEncountered("gradient step produced non-finite values")
    return like(x_hat, out)
