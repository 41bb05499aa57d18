"""Reverse-diffusion solvers for spatio-temporal inverse problems.

``solve`` runs the conditional sampler: per step, every frame is denoised
individually (Tweedie), the whole volume is pulled toward the measurement by
a few conjugate-gradient iterations on the normal equations (warm-started at
the denoised batch), and the result is renoised to the next level reusing the
step's cached noise prediction.  Sharing one stochastic noise field across
all frames (``noise_sync``) keeps the per-frame trajectories aligned, and the
data-consistency step is what differentiates the frames.

The last plan step emits the data-consistent denoised batch directly (the
clean-signal level, no renoising), so a run costs exactly ``nfe`` denoiser
calls.  ``unconditional_sample`` is the same loop without data consistency.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .denoiser import EpsModel
from .errors import EmptyGrid, NonFiniteEncountered, ShapeMismatch
from .krylov import cg_data_consistency, gd_data_consistency
from .operators import LinearOp, PsfSpec, temporal_psf
from .schedule import NoiseSchedule, renoise, subsample_steps, tweedie
from .video import VideoTensor, as_volume

UPDATE_RULES = ("cg", "gd")


@dataclass(frozen=True)
class SolverConfig:
    nfe: int = 20
    eta: float = 0.15
    l: int = 5
    update: str = "cg"
    gamma: float = 0.5
    noise_sync: bool = True
    seed: int = 0
    trace: bool = False

    def __post_init__(self):
        if self.nfe < 1:
            raise ValueError(f"nfe must be >= 1, got {self.nfe}")
        if self.eta < 0.0:
            raise ValueError(f"eta must be >= 0, got {self.eta}")
        if self.update not in UPDATE_RULES:
            raise ValueError(f"update must be one of {UPDATE_RULES}, got {self.update!r}")
        if self.update == "cg" and self.l < 1:
            raise ValueError(f"l must be >= 1 for CG updates, got {self.l}")
        if self.update == "gd" and self.gamma <= 0.0:
            raise ValueError(f"gamma must be > 0 for GD updates, got {self.gamma}")


@dataclass(frozen=True)
class StepRecord:
    t: int
    residual: float
    inter_batch_diff: float
    tweedie_batch: np.ndarray | None = None


@dataclass(frozen=True)
class SolveTrace:
    steps: tuple[StepRecord, ...] = field(default_factory=tuple)

    def records(self) -> list[dict]:
        return [
            {"t": s.t, "residual": s.residual, "inter_batch_diff": s.inter_batch_diff}
            for s in self.steps
        ]


def _draw_noise(rng: np.random.Generator, shape, sync: bool) -> np.ndarray:
    """One standard-normal field per frame, or a single field replicated over
    all frames when synchronized (frames then start bitwise identical)."""
    if sync:
        single = rng.standard_normal(size=(1,) + tuple(shape[1:]))
        return np.broadcast_to(single, tuple(shape)).copy()
    return rng.standard_normal(size=tuple(shape))


def _frame_spread(xv: np.ndarray) -> float:
    n = xv.shape[0]
    if n < 2:
        return 0.0
    diffs = (xv[1:] - xv[:-1]).reshape(n - 1, -1)
    return float(np.sqrt((diffs**2).sum(axis=1)).sum() / (n - 1))


def _reverse_loop(
    a: LinearOp | None,
    yv: np.ndarray | None,
    model: EpsModel,
    s: NoiseSchedule,
    cfg: SolverConfig,
    shape,
    consistency: bool,
) -> tuple[np.ndarray, SolveTrace]:
    plan = subsample_steps(s, cfg.nfe)
    rng = np.random.default_rng(cfg.seed)
    x = _draw_noise(rng, shape, cfg.noise_sync)
    records: list[StepRecord] = []
    for i, t in enumerate(plan.timesteps):
        abar = s.alpha_bar_at(t)
        eps_hat = model.predict(x, t, abar)  # one call per step, reused for renoising
        if eps_hat.shape != x.shape:
            raise ShapeMismatch(f"denoiser returned {eps_hat.shape}, expected {x.shape}")
        x_hat = tweedie(x, eps_hat, abar)
        if consistency:
            if cfg.update == "cg":
                x_bar, _ = cg_data_consistency(a, yv, x_hat, cfg.l)
            else:
                x_bar = gd_data_consistency(a, yv, x_hat, cfg.gamma)
        else:
            x_bar = x_hat
        if not np.isfinite(x_bar).all():
            raise NonFiniteEncountered(f"non-finite estimate at step {i} (t={t})")
        res = float(np.linalg.norm(yv - a._apply(x_bar)) ** 2) if a is not None else 0.0
        records.append(
            StepRecord(
                t=t,
                residual=res,
                inter_batch_diff=_frame_spread(x_hat),
                tweedie_batch=x_hat.copy() if cfg.trace else None,
            )
        )
        if i + 1 == len(plan.timesteps):
            return x_bar, SolveTrace(tuple(records))
        eps_sto = _draw_noise(rng, shape, cfg.noise_sync)
        x = renoise(x_bar, eps_hat, eps_sto, s, t, plan.timesteps[i + 1], cfg.eta)
    raise AssertionError("unreachable: plan has at least one step")


def solve(
    a: LinearOp,
    y,
    model: EpsModel,
    s: NoiseSchedule,
    cfg: SolverConfig,
    *,
    consistency: bool = True,
) -> tuple[VideoTensor, SolveTrace]:
    """Reconstruct the volume behind measurement ``y`` under operator ``a``.

    ``consistency=False`` skips the measurement-fitting step (diagnostic switch
    for isolating the sampling behavior).
    """
    yv = as_volume(y)
    if yv.shape != a.out_shape:
        raise ShapeMismatch(f"measurement shape {yv.shape} != operator {a.out_shape}")
    out, trace = _reverse_loop(a, yv, model, s, cfg, a.in_shape, consistency)
    return VideoTensor(out), trace


def unconditional_sample(
    model: EpsModel,
    s: NoiseSchedule,
    shape,
    nfe: int,
    eta: float,
    noise_sync: bool,
    seed: int,
) -> VideoTensor:
    """Reverse diffusion with no measurement: with synchronized noise all frame
    trajectories coincide exactly; without it they wander independently."""
    cfg = SolverConfig(nfe=nfe, eta=eta, noise_sync=noise_sync, seed=seed)
    out, _ = _reverse_loop(None, None, model, s, cfg, tuple(shape), consistency=False)
    return VideoTensor(out)


def estimate_psf(x, y, family: str = "uniform", grid=(1, 3, 5, 7, 9, 11, 13, 15)) -> PsfSpec:
    """Grid search for the temporal kernel minimizing ||Y - k * X||^2.

    Candidates are scanned smallest kernel first, keeping strict improvements,
    so ties resolve toward the smaller kernel.
    """
    xv = as_volume(x)
    yv = as_volume(y)
    if xv.shape != yv.shape:
        raise ShapeMismatch(f"shapes differ: {xv.shape} vs {yv.shape}")
    candidates = sorted(grid)
    if not candidates:
        raise EmptyGrid("PSF search grid is empty")
    best_spec, best_res = None, np.inf
    for param in candidates:
        spec = PsfSpec.uniform(int(param)) if family == "uniform" else PsfSpec.gaussian(float(param))
        diff = yv - temporal_psf(spec, xv.shape)._apply(xv)
        res = float((diff * diff).sum())
        if res < best_res:
            best_spec, best_res = spec, res
    return best_spec


def blind_deblur(
    y,
    model: EpsModel,
    s: NoiseSchedule,
    cfg: SolverConfig,
    pre_restoration=None,
    grid=(1, 3, 5, 7, 9, 11, 13, 15),
    family: str = "uniform",
) -> tuple[VideoTensor, PsfSpec, PsfSpec]:
    """Two-stage blind temporal deblurring.

    The initial kernel is estimated against ``pre_restoration`` when supplied
    (otherwise against the measurement itself), a first reconstruction runs
    with it, the kernel is re-estimated from that reconstruction, and a second
    reconstruction with the refined kernel is returned along with both kernel
    estimates.  Costs two full solves (2 * nfe denoiser calls).
    """
    yv = as_volume(y)
    reference = yv if pre_restoration is None else as_volume(pre_restoration)
    if reference.shape != yv.shape:
        raise ShapeMismatch(f"pre-restoration {reference.shape} != measurement {yv.shape}")
    initial = estimate_psf(reference, yv, family, grid)
    stage1, _ = solve(temporal_psf(initial, yv.shape), yv, model, s, cfg)
    refined = estimate_psf(stage1, yv, family, grid)
    stage2, _ = solve(temporal_psf(refined, yv.shape), yv, model, s, cfg)
    return stage2, initial, refined
