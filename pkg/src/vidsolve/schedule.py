"""Noise-schedule tables and the reverse-step algebra shared by all samplers.

Tables are float64 and 1-indexed through accessors: ``alpha_bar_at(t)`` for
t in [1, T], with ``alpha_bar_at(0) == 1`` as the clean-signal convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadNfe, BadRange, EtaTooLarge, ShapeMismatch
from .video import as_volume, like


@dataclass(frozen=True)
class NoiseSchedule:
    """Per-step noise tables: beta, alpha = 1-beta, their running product, and
    the posterior scale beta_tilde[t] = (1-abar[t-1])/(1-abar[t]) * beta[t]."""

    t_base: int
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray
    beta_tilde: np.ndarray

    def _check_t(self, t: int) -> int:
        if not 1 <= t <= self.t_base:
            raise BadRange(f"step index {t} outside [1, {self.t_base}]")
        return t - 1

    def beta_at(self, t: int) -> float:
        return float(self.beta[self._check_t(t)])

    def alpha_bar_at(self, t: int) -> float:
        if t == 0:
            return 1.0
        return float(self.alpha_bar[self._check_t(t)])

    def beta_tilde_at(self, t: int) -> float:
        return float(self.beta_tilde[self._check_t(t)])


@dataclass(frozen=True)
class StepPlan:
    """Strictly decreasing base-schedule indices visited by one reverse pass."""

    nfe: int
    timesteps: tuple[int, ...]


def make_linear_schedule(t_base: int, beta_start: float, beta_end: float) -> NoiseSchedule:
    if t_base < 2:
        raise BadRange(f"t_base must be >= 2, got {t_base}")
    if not (0.0 < beta_start <= beta_end < 1.0):
        raise BadRange(
            f"need 0 < beta_start <= beta_end < 1, got ({beta_start}, {beta_end})"
        )
    beta = np.linspace(beta_start, beta_end, t_base, dtype=np.float64)
    alpha = 1.0 - beta
    alpha_bar = np.cumprod(alpha)
    beta_tilde = np.zeros(t_base)
    beta_tilde[1:] = (1.0 - alpha_bar[:-1]) / (1.0 - alpha_bar[1:]) * beta[1:]
    for arr in (beta, alpha, alpha_bar, beta_tilde):
        arr.setflags(write=False)
    return NoiseSchedule(t_base, beta, alpha, alpha_bar, beta_tilde)


def default_schedule() -> NoiseSchedule:
    """Linear beta from 1e-4 to 0.02 over 1000 base steps."""
    return make_linear_schedule(1000, 1e-4, 0.02)


def subsample_steps(s: NoiseSchedule, nfe: int) -> StepPlan:
    """Evenly spaced step indices over [1, T], highest first."""
    if not 1 <= nfe <= s.t_base:
        raise BadNfe(f"nfe must be in [1, {s.t_base}], got {nfe}")
    stride = s.t_base // nfe
    timesteps = tuple(s.t_base - i * stride for i in range(nfe))
    return StepPlan(nfe=nfe, timesteps=timesteps)


def tweedie(x_t, eps_hat, abar_t: float):
    """Posterior-mean estimate of the clean signal:
    (x_t - sqrt(1-abar)*eps_hat) / sqrt(abar)."""
    if not 0.0 < abar_t <= 1.0:
        raise BadRange(f"abar_t must be in (0, 1], got {abar_t}")
    xv = as_volume(x_t)
    ev = as_volume(eps_hat)
    if xv.shape != ev.shape:
        raise ShapeMismatch(f"x_t {xv.shape} vs eps_hat {ev.shape}")
    out = (xv - math.sqrt(1.0 - abar_t) * ev) / math.sqrt(abar_t)
    return like(x_t, out)


def renoise(xbar, eps_det, eps_sto, s: NoiseSchedule, t: int, t_prev: int, eta: float):
    """Map a clean estimate back to the noise level of step ``t_prev``.

    Returns ``sqrt(abar_prev)*xbar + sqrt(1-abar_prev-(eta*bt)^2)*eps_det
    + eta*bt*eps_sto`` with ``bt = beta_tilde[t]``; eta = 0 is fully
    deterministic (the stochastic coefficient is exactly zero).
    """
    if eta < 0.0:
        raise ValueError(f"eta must be >= 0, got {eta}")
    xv = as_volume(xbar)
    dv = as_volume(eps_det)
    sv = as_volume(eps_sto)
    if not xv.shape == dv.shape == sv.shape:
        raise ShapeMismatch(
            f"shapes differ: xbar {xv.shape}, eps_det {dv.shape}, eps_sto {sv.shape}"
        )
    abar_prev = s.alpha_bar_at(t_prev)
    bt = s.beta_tilde_at(t)
    coef_sto = eta * bt
    var_det = 1.0 - abar_prev - coef_sto * coef_sto
    if var_det < -1e-12:
        raise EtaTooLarge(
            f"eta={eta} leaves negative deterministic variance {var_det:.3e} at t={t}"
        )
    out = (
        math.sqrt(abar_prev) * xv
        + math.sqrt(max(var_det, 0.0)) * dv
        + coef_sto * sv
    )
    return like(xbar, out)
