"""Linear degradation operators with exact adjoints.

Every constructor returns a :class:`LinearOp` whose ``apply``/``adjoint`` pair
satisfies the dot-product identity <A x, y> == <x, A^T y>; compositions chain
both directions.  Operators act on (N, C, H, W) volumes (VideoTensor or
ndarray), compute in float64, and return the caller's container type.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BadKernel, BadRatio, ConfigError, NonDivisible, ShapeMismatch
from .kernels import blur2d, gaussian_support, gaussian_taps
from .video import VideoTensor, as_volume, like

Shape = tuple[int, int, int, int]


@dataclass(frozen=True)
class LinearOp:
    in_shape: Shape
    out_shape: Shape
    kind: str
    _apply: Callable[[np.ndarray], np.ndarray]
    _adjoint: Callable[[np.ndarray], np.ndarray]

    def apply(self, x):
        xv = as_volume(x)
        if xv.shape != self.in_shape:
            raise ShapeMismatch(f"{self.kind}: apply expects {self.in_shape}, got {xv.shape}")
        return like(x, self._apply(xv))

    def adjoint(self, y):
        yv = as_volume(y)
        if yv.shape != self.out_shape:
            raise ShapeMismatch(f"{self.kind}: adjoint expects {self.out_shape}, got {yv.shape}")
        return like(y, self._adjoint(yv))

    def normal_apply(self, x: np.ndarray) -> np.ndarray:
        """A^T A x on a raw volume (the conjugate-gradient workhorse)."""
        return self._adjoint(self._apply(x))


@dataclass(frozen=True)
class PsfSpec:
    """1-D temporal kernel: a uniform box of odd width or a sampled Gaussian."""

    family: str
    width: int | None = None
    sigma: float | None = None
    support: int = 1

    @staticmethod
    def uniform(width: int) -> "PsfSpec":
        if width < 1 or width % 2 == 0:
            raise BadKernel(f"uniform width must be odd and >= 1, got {width}")
        return PsfSpec(family="uniform", width=width, support=width)

    @staticmethod
    def gaussian(sigma: float) -> "PsfSpec":
        if sigma <= 0.0:
            raise BadKernel(f"gaussian sigma must be > 0, got {sigma}")
        return PsfSpec(family="gaussian", sigma=sigma, support=gaussian_support(sigma))

    def taps(self) -> np.ndarray:
        if self.family == "uniform":
            return np.full(self.width, 1.0 / self.width)
        if self.family == "gaussian":
            return gaussian_taps(self.sigma, self.support)
        raise BadKernel(f"unknown PSF family {self.family!r}")

    def describe(self) -> str:
        if self.family == "uniform":
            return f"temporal:uniform:{self.width}"
        return f"temporal:gaussian:{self.sigma:g}"


def identity_op(shape: Shape) -> LinearOp:
    return LinearOp(tuple(shape), tuple(shape), "identity", lambda x: x.copy(), lambda y: y.copy())


def temporal_psf(spec: PsfSpec, shape: Shape) -> LinearOp:
    """Convolution along the frame axis with replicate (clamped) boundary.

    Realized as a dense n_frames x n_frames matrix so the adjoint is its exact
    transpose; frame counts are small enough for this to stay cheap.
    """
    n = shape[0]
    taps = spec.taps()
    support = len(taps)
    if support > 2 * n - 1:
        raise BadKernel(f"support {support} too wide for {n} frames")
    half = support // 2
    mat = np.zeros((n, n))
    for row in range(n):
        for j, tap in enumerate(taps):
            src = min(max(row + j - half, 0), n - 1)
            mat[row, src] += tap
    mat.setflags(write=False)

    def _apply(x: np.ndarray) -> np.ndarray:
        return np.tensordot(mat, x, axes=(1, 0))

    def _adjoint(y: np.ndarray) -> np.ndarray:
        return np.tensordot(mat.T, y, axes=(1, 0))

    return LinearOp(tuple(shape), tuple(shape), spec.describe(), _apply, _adjoint)


def spatial_gaussian_blur(sigma: float, kernel_width: int, shape: Shape) -> LinearOp:
    """Separable per-frame Gaussian blur, symmetric boundary; self-adjoint."""
    taps = gaussian_taps(sigma, kernel_width)
    taps.setflags(write=False)
    blur = lambda v: blur2d(v, taps)
    kind = f"spatial:gauss:{sigma:g}:{kernel_width}"
    return LinearOp(tuple(shape), tuple(shape), kind, blur, blur)


def avgpool_sr(factor: int, shape: Shape) -> LinearOp:
    """Block-mean downsampling; the adjoint spreads each value over its block
    scaled by 1/factor^2."""
    n, c, h, w = shape
    if factor < 1 or h % factor or w % factor:
        raise NonDivisible(f"factor {factor} must divide {h}x{w}")
    out_shape = (n, c, h // factor, w // factor)
    inv_area = 1.0 / (factor * factor)

    def _apply(x: np.ndarray) -> np.ndarray:
        return x.reshape(n, c, h // factor, factor, w // factor, factor).mean(axis=(3, 5))

    def _adjoint(y: np.ndarray) -> np.ndarray:
        up = np.repeat(np.repeat(y, factor, axis=-2), factor, axis=-1)
        return up * inv_area

    return LinearOp(tuple(shape), out_shape, f"sr:{factor}", _apply, _adjoint)


def random_mask(ratio: float, seed: int, shape: Shape, share_across_frames: bool = False) -> LinearOp:
    """Diagonal 0/1 pixel mask: exactly round(ratio*H*W) pixels zeroed per
    frame, shared across channels.  Masks are drawn independently per frame
    unless ``share_across_frames``.  Self-adjoint and idempotent."""
    if not 0.0 < ratio < 1.0:
        raise BadRatio(f"ratio must be in (0, 1), got {ratio}")
    n, c, h, w = shape
    n_zero = int(math.floor(ratio * h * w + 0.5))
    rng = np.random.default_rng(seed)

    def _one_mask() -> np.ndarray:
        keep = np.ones(h * w)
        keep[rng.permutation(h * w)[:n_zero]] = 0.0
        return keep.reshape(h, w)

    if share_across_frames:
        mask = np.broadcast_to(_one_mask()[None, None], (n, 1, h, w)).copy()
    else:
        mask = np.stack([_one_mask() for _ in range(n)])[:, None]
    mask.setflags(write=False)
    suffix = ":shared" if share_across_frames else ""
    project = lambda v: v * mask
    return LinearOp(tuple(shape), tuple(shape), f"mask:{ratio:g}:{seed}{suffix}", project, project)


def compose(outer: LinearOp, inner: LinearOp) -> LinearOp:
    """outer after inner; adjoint chains in reverse."""
    if inner.out_shape != outer.in_shape:
        raise ShapeMismatch(
            f"cannot compose: inner {inner.kind} emits {inner.out_shape}, "
            f"outer {outer.kind} expects {outer.in_shape}"
        )
    return LinearOp(
        inner.in_shape,
        outer.out_shape,
        f"{inner.kind} | {outer.kind}",
        lambda x: outer._apply(inner._apply(x)),
        lambda y: inner._adjoint(outer._adjoint(y)),
    )


def degrade(x: VideoTensor, a: LinearOp, noise_std: float, seed: int) -> VideoTensor:
    """Measurement synthesis: A(x) plus i.i.d. Gaussian noise of the given std."""
    if noise_std < 0.0:
        raise ValueError(f"noise_std must be >= 0, got {noise_std}")
    xv = as_volume(x)
    if xv.shape != a.in_shape:
        raise ShapeMismatch(f"degrade expects {a.in_shape}, got {xv.shape}")
    out = a._apply(xv)
    if noise_std > 0.0:
        out = out + np.random.default_rng(seed).normal(0.0, noise_std, size=out.shape)
    return VideoTensor(out, x.meta)


# --- textual operator grammar ----------------------------------------------------
#
# "stage | stage | ..." applies left to right, e.g.
# "temporal:uniform:7 | spatial:gauss:2.0:13 | sr:4 | mask:0.5:21".


def _stage_tokens(grammar: str) -> list[list[str]]:
    stages = [s.strip() for s in grammar.split("|")]
    if any(not s for s in stages):
        raise ConfigError(f"empty stage in operator grammar {grammar!r}")
    return [s.split(":") for s in stages]


def _build_stage(parts: list[str], shape: Shape) -> LinearOp:
    head = parts[0]
    try:
        if head == "identity" and len(parts) == 1:
            return identity_op(shape)
        if head == "temporal" and len(parts) == 3:
            family, param = parts[1], parts[2]
            if family == "uniform":
                return temporal_psf(PsfSpec.uniform(int(param)), shape)
            if family == "gaussian":
                return temporal_psf(PsfSpec.gaussian(float(param)), shape)
        if head == "spatial" and len(parts) == 4 and parts[1] == "gauss":
            return spatial_gaussian_blur(float(parts[2]), int(parts[3]), shape)
        if head == "sr" and len(parts) == 2:
            return avgpool_sr(int(parts[1]), shape)
        if head == "mask" and len(parts) in (3, 4):
            shared = len(parts) == 4 and parts[3] == "shared"
            if len(parts) == 4 and not shared:
                raise ConfigError(f"bad mask modifier {parts[3]!r}")
            return random_mask(float(parts[1]), int(parts[2]), shape, shared)
    except (ValueError, BadKernel, BadRatio, NonDivisible) as exc:
        raise ConfigError(f"bad operator stage {':'.join(parts)!r}: {exc}") from exc
    raise ConfigError(f"unknown operator stage {':'.join(parts)!r}")


def parse_op(grammar: str, in_shape: Shape) -> LinearOp:
    """Build the composed operator described by the grammar string."""
    op: LinearOp | None = None
    shape = tuple(in_shape)
    for parts in _stage_tokens(grammar):
        stage = _build_stage(parts, shape)
        op = stage if op is None else compose(stage, op)
        shape = stage.out_shape
    return op


def infer_in_shape(grammar: str, out_shape: Shape) -> Shape:
    """Walk the grammar backwards from a measurement shape to the signal shape.

    Only ``sr`` changes shape (upscales H and W by its factor on the way back).
    """
    shape = tuple(out_shape)
    for parts in reversed(_stage_tokens(grammar)):
        if parts[0] == "sr":
            try:
                f = int(parts[1])
            except (IndexError, ValueError) as exc:
                raise ConfigError(f"bad operator stage {':'.join(parts)!r}") from exc
            shape = (shape[0], shape[1], shape[2] * f, shape[3] * f)
    return shape
