"""Spatio-temporal tensor type, file formats, preprocessing, synthetic clips.

A video volume is N frames x C channels x H x W, stored frame-major as
float32 in [0, 1] after normalization.  ``VideoTensor`` is immutable after
construction and safe to share across threads.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    CropTooLarge,
    DimOverflow,
    EmptyResult,
    NonFiniteEncountered,
    ShapeMismatch,
    TruncatedFile,
    UnsupportedChannels,
    UnsupportedVersion,
)

SVTF_MAGIC = b"SVTF"
SVTF_VERSION = 1
MAX_DIM = 1 << 20


@dataclass(frozen=True)
class VideoMeta:
    """Provenance and value-range bookkeeping for a video volume."""

    source_id: str = ""
    frame_rate: float | None = None
    value_range: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        lo, hi = self.value_range
        if not lo < hi:
            raise ValueError(f"value_range must satisfy lo < hi, got {self.value_range}")


@dataclass(frozen=True)
class VideoTensor:
    """Immutable (N, C, H, W) float32 volume plus metadata."""

    data: np.ndarray
    meta: VideoMeta = field(default_factory=VideoMeta)

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float32, order="C")  # own copy; frozen below
        if arr.ndim != 4:
            raise ShapeMismatch(f"expected 4-D (N,C,H,W) data, got ndim={self.data.ndim}")
        if min(arr.shape) < 1:
            raise ShapeMismatch(f"all dimensions must be >= 1, got {arr.shape}")
        if not np.isfinite(arr).all():
            raise NonFiniteEncountered("video tensor contains NaN or Inf")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.data.shape

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    @property
    def n_channels(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[2]

    @property
    def width(self) -> int:
        return self.data.shape[3]

    def with_data(self, data: np.ndarray) -> "VideoTensor":
        return VideoTensor(data, self.meta)


def as_volume(x, dtype=np.float64) -> np.ndarray:
    """View a VideoTensor or array as a plain (N,C,H,W) ndarray of `dtype`."""
    arr = x.data if isinstance(x, VideoTensor) else np.asarray(x)
    if arr.ndim != 4:
        raise ShapeMismatch(f"expected 4-D volume, got shape {arr.shape}")
    return arr.astype(dtype, copy=False)


def like(reference, volume: np.ndarray):
    """Wrap `volume` in the same container type as `reference`.

    VideoTensor reference -> VideoTensor (float32, metadata preserved);
    ndarray reference -> ndarray cast to the reference dtype.
    """
    if isinstance(reference, VideoTensor):
        return VideoTensor(volume, reference.meta)
    return np.asarray(volume, dtype=np.asarray(reference).dtype)


# --- SVTF container -----------------------------------------------------------
#
# Layout: magic "SVTF", u32 version, u32 N, C, H, W, then N*C*H*W little-endian
# float32 values in frame-major order.

_HEADER = struct.Struct("<4sIIIII")


def save_svtf(v: VideoTensor, path) -> None:
    n, c, h, w = v.shape
    for dim in (n, c, h, w):
        if dim > MAX_DIM:
            raise DimOverflow(f"dimension {dim} exceeds {MAX_DIM}")
    payload = np.ascontiguousarray(v.data, dtype="<f4").tobytes()
    with open(path, "wb") as f:
        f.write(_HEADER.pack(SVTF_MAGIC, SVTF_VERSION, n, c, h, w))
        f.write(payload)


def load_svtf(path) -> VideoTensor:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        if raw[:4] != SVTF_MAGIC:
            raise BadMagic(f"{path}: not an SVTF file")
        raise TruncatedFile(f"{path}: header truncated ({len(raw)} bytes)")
    magic, version, n, c, h, w = _HEADER.unpack_from(raw)
    if magic != SVTF_MAGIC:
        raise BadMagic(f"{path}: bad magic {magic!r}")
    if version != SVTF_VERSION:
        raise UnsupportedVersion(f"{path}: SVTF version {version} not supported")
    for dim in (n, c, h, w):
        if not 1 <= dim <= MAX_DIM:
            raise DimOverflow(f"{path}: dimension {dim} outside [1, {MAX_DIM}]")
    count = n * c * h * w
    body = raw[_HEADER.size:]
    if len(body) < count * 4:
        raise TruncatedFile(
            f"{path}: payload holds {len(body)} bytes, header promises {count * 4}"
        )
    data = np.frombuffer(body[: count * 4], dtype="<f4").reshape(n, c, h, w)
    return VideoTensor(data, VideoMeta(source_id=str(path)))


# --- PPM frame export ----------------------------------------------------------


def save_ppm_frames(v: VideoTensor, dir_path) -> int:
    """Write each frame as binary PPM (P6, maxval 255) into `dir_path`.

    Values are clamped to [0, 1] and quantized with round-half-away-from-zero.
    Single-channel video is replicated to gray RGB.  Returns the frame count.
    """
    n, c, h, w = v.shape
    if c not in (1, 3):
        raise UnsupportedChannels(f"PPM export needs 1 or 3 channels, got {c}")
    out_dir = Path(dir_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    clamped = np.clip(v.data, 0.0, 1.0)
    # round half away from zero; values are non-negative here so floor(x+0.5) works
    bytes_ncHW = np.floor(255.0 * clamped + 0.5).astype(np.uint8)
    if c == 1:
        bytes_ncHW = np.repeat(bytes_ncHW, 3, axis=1)
    header = f"P6\n{w} {h}\n255\n".encode("ascii")
    for i in range(n):
        rgb = np.moveaxis(bytes_ncHW[i], 0, -1)  # (H, W, 3)
        with open(out_dir / f"frame_{i:04d}.ppm", "wb") as f:
            f.write(header)
            f.write(rgb.tobytes())
    return n


# --- preprocessing --------------------------------------------------------------


def resize_bilinear(frames: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize with half-pixel centers over the trailing two axes."""
    *lead, h, w = frames.shape
    arr = frames.reshape(-1, h, w).astype(np.float64, copy=False)

    def _axis_coords(n_in, n_out):
        src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        lo = np.clip(np.floor(src).astype(int), 0, n_in - 1)
        hi = np.clip(lo + 1, 0, n_in - 1)
        frac = np.clip(src - lo, 0.0, 1.0)
        return lo, hi, frac

    y0, y1, fy = _axis_coords(h, out_h)
    x0, x1, fx = _axis_coords(w, out_w)
    top = arr[:, y0][:, :, x0] * (1 - fx) + arr[:, y0][:, :, x1] * fx
    bot = arr[:, y1][:, :, x0] * (1 - fx) + arr[:, y1][:, :, x1] * fx
    out = top * (1 - fy)[None, :, None] + bot * fy[None, :, None]
    return out.reshape(*lead, out_h, out_w)


def preprocess(frames: VideoTensor, crop: int, out_size: int, chunk: int) -> list[VideoTensor]:
    """Center-crop, resize, normalize to [0, 1], and split into frame chunks.

    Normalization divides by the span of the declared ``meta.value_range``;
    frames left over after the last complete chunk are dropped.
    """
    n, c, h, w = frames.shape
    if crop > min(h, w):
        raise CropTooLarge(f"crop {crop} exceeds frame size {h}x{w}")
    if chunk < 1:
        raise ValueError("chunk must be >= 1")
    y0 = (h - crop) // 2
    x0 = (w - crop) // 2
    cropped = frames.data[:, :, y0 : y0 + crop, x0 : x0 + crop].astype(np.float64)
    resized = resize_bilinear(cropped, out_size, out_size)
    lo, hi = frames.meta.value_range
    norm = np.clip((resized - lo) / (hi - lo), 0.0, 1.0)
    n_chunks = n // chunk
    if n_chunks == 0:
        raise EmptyResult(f"{n} frames cannot fill a chunk of {chunk}")
    meta = replace(frames.meta, value_range=(0.0, 1.0))
    return [
        VideoTensor(norm[i * chunk : (i + 1) * chunk], replace(meta, source_id=f"{frames.meta.source_id}[{i}]"))
        for i in range(n_chunks)
    ]


# --- synthetic clips --------------------------------------------------------------

SYNTH_KINDS = ("moving_square", "gradient_drift", "static")


def _smooth_background(rng: np.random.Generator, c: int, h: int, w: int) -> np.ndarray:
    coarse = rng.uniform(0.0, 1.0, size=(c, max(2, h // 8), max(2, w // 8)))
    return 0.1 + 0.35 * resize_bilinear(coarse, h, w)


def _base_frame(rng: np.random.Generator, c: int, h: int, w: int) -> np.ndarray:
    frame = _smooth_background(rng, c, h, w)
    side = max(2, min(h, w) // 4)
    y = int(rng.integers(0, h - side + 1))
    x = int(rng.integers(0, w - side + 1))
    frame[:, y : y + side, x : x + side] = 0.95
    return frame


def synth_video(kind: str, n: int, c: int, h: int, w: int, seed: int) -> VideoTensor:
    """Deterministic synthetic test clip; values always in [0, 1].

    moving_square: a bright square over a smooth background, the whole scene
    drifting 1 px/frame along the width with wraparound.
    gradient_drift: a horizontal ramp whose phase advances 1 px/frame.
    static: one fixed frame repeated.
    """
    if kind not in SYNTH_KINDS:
        raise ValueError(f"unknown synthetic kind {kind!r}; choose from {SYNTH_KINDS}")
    if min(n, c, h, w) < 1:
        raise ValueError("all dimensions must be >= 1")
    rng = np.random.default_rng(seed)
    if kind == "static":
        frame = _base_frame(rng, c, h, w)
        data = np.repeat(frame[None], n, axis=0)
    elif kind == "moving_square":
        base = _base_frame(rng, c, h, w)
        data = np.stack([np.roll(base, f, axis=-1) for f in range(n)])
    else:  # gradient_drift: smooth horizontal wave advancing 4 px/frame (fast scene)
        phase = rng.uniform(0.0, 2.0 * math.pi)
        cols = np.arange(w)
        frames = []
        for f in range(n):
            wave = 0.5 + 0.4 * np.sin(2.0 * math.pi * (cols + 4.0 * f) / w + phase)
            frames.append(np.broadcast_to(wave, (c, h, w)).copy())
        data = np.stack(frames)
    return VideoTensor(np.clip(data, 0.0, 1.0), VideoMeta(source_id=f"synth:{kind}:{seed}"))
