"""Pluggable per-frame noise predictors.

Every model maps a noisy (N, C, H, W) volume at noise level ``abar`` to a
same-shape noise estimate, frame by frame: output frame i depends only on
input frame i.  In-process models are pure functions; ``ExternalEps`` talks
to a child process over a framed stdin/stdout protocol.

Wire protocol (all little-endian):
  handshake  client -> "HELO" + u32 version(=1); server echoes the 8 bytes.
             A server refusing the version replies an error frame instead
             ("EPR1" + nonzero status + u32 length + UTF-8 message).
  request    "EPQ1" + u32 t_index + f64 abar + u32 N,C,H,W + N*C*H*W float32
  response   "EPR1" + u32 status; status 0 carries u32 N,C,H,W + float32
             payload, nonzero status carries u32 length + UTF-8 message.
"""

from __future__ import annotations

import math
import os
import select
import shlex
import struct
import subprocess
import time

import numpy as np

from .errors import (
    BridgeTimeout,
    ExternalProtocolError,
    PeerClosed,
    ProtocolVersionMismatch,
    ShapeMismatch,
)
from .kernels import smooth_frames
from .video import as_volume, like

PROTOCOL_VERSION = 1
MAGIC_HELO = b"HELO"
MAGIC_REQ = b"EPQ1"
MAGIC_RSP = b"EPR1"
SMOOTHER_SIGMA_CAP = 5.0  # px; prevents degenerate over-smoothing at high noise


class EpsModel:
    """Interface: ``predict`` returns the estimated noise for each frame."""

    descriptor: str = "abstract"

    def predict(self, x_t, t: int, abar_t: float):
        xv = self._check(x_t, abar_t)
        return like(x_t, self._predict(xv, t, abar_t))

    def _check(self, x_t, abar_t: float) -> np.ndarray:
        if not 0.0 < abar_t <= 1.0:
            raise ValueError(f"abar_t must be in (0, 1], got {abar_t}")
        return as_volume(x_t)

    def _predict(self, xv: np.ndarray, t: int, abar_t: float) -> np.ndarray:
        raise NotImplementedError


class ZeroEps(EpsModel):
    """Predicts zero noise everywhere; Tweedie then returns x_t / sqrt(abar)."""

    descriptor = "zero"

    def _predict(self, xv, t, abar_t):
        return np.zeros_like(xv)


class OracleGaussianEps(EpsModel):
    """Exact noise predictor for a Gaussian prior x0 ~ N(mu, sigma0^2 I).

    The implied clean estimate is the analytic posterior mean
    mu + (sqrt(abar) sigma0^2 / (abar sigma0^2 + 1 - abar)) (x_t - sqrt(abar) mu).
    """

    def __init__(self, mu: float, sigma0: float):
        if sigma0 <= 0.0:
            raise ValueError(f"sigma0 must be > 0, got {sigma0}")
        self.mu = float(mu)
        self.sigma0 = float(sigma0)
        self.descriptor = f"oracle_gaussian(mu={self.mu:g},sigma0={self.sigma0:g})"

    def posterior_mean(self, xv: np.ndarray, abar_t: float) -> np.ndarray:
        sa = math.sqrt(abar_t)
        var0 = self.sigma0 * self.sigma0
        gain = sa * var0 / (abar_t * var0 + 1.0 - abar_t)
        return self.mu + gain * (xv - sa * self.mu)

    def _predict(self, xv, t, abar_t):
        if abar_t == 1.0:
            return np.zeros_like(xv)
        x0 = self.posterior_mean(xv, abar_t)
        return (xv - math.sqrt(abar_t) * x0) / math.sqrt(1.0 - abar_t)


class SmootherEps(EpsModel):
    """Training-free stand-in prior: the clean estimate is a per-frame Gaussian
    smoothing of x_t / sqrt(abar) with width scale * sqrt((1-abar)/abar) px,
    capped at SMOOTHER_SIGMA_CAP; the noise estimate is backed out of the
    forward corruption identity."""

    def __init__(self, scale: float = 1.0):
        if scale <= 0.0:
            raise ValueError(f"scale must be > 0, got {scale}")
        self.scale = float(scale)
        self.descriptor = f"smoother(scale={self.scale:g})"

    def _predict(self, xv, t, abar_t):
        if abar_t == 1.0:
            return np.zeros_like(xv)
        sa = math.sqrt(abar_t)
        sigma = min(self.scale * math.sqrt((1.0 - abar_t) / abar_t), SMOOTHER_SIGMA_CAP)
        x0 = smooth_frames(xv / sa, sigma)
        return (xv - sa * x0) / math.sqrt(1.0 - abar_t)


# --- external bridge --------------------------------------------------------------


def _recv_exact(fd: int, count: int, deadline: float) -> bytes:
    chunks = bytearray()
    while len(chunks) < count:
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            raise BridgeTimeout(f"peer sent {len(chunks)}/{count} bytes before deadline")
        ready, _, _ = select.select([fd], [], [], remaining)
        if not ready:
            raise BridgeTimeout(f"peer sent {len(chunks)}/{count} bytes before deadline")
        got = os.read(fd, count - len(chunks))
        if not got:
            raise PeerClosed(f"peer closed after {len(chunks)}/{count} bytes")
        chunks.extend(got)
    return bytes(chunks)


class BridgeClient:
    """Client half of the denoiser wire protocol; one request in flight."""

    def __init__(self, cmd: str | list[str], timeout: float = 5.0):
        self.cmd = shlex.split(cmd) if isinstance(cmd, str) else list(cmd)
        self.timeout = float(timeout)
        self._proc: subprocess.Popen | None = None

    def start(self) -> None:
        if self._proc is not None:
            return
        try:
            self._proc = subprocess.Popen(
                self.cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE
            )
        except OSError as exc:
            raise ExternalProtocolError(f"cannot spawn bridge {self.cmd!r}: {exc}") from exc
        self._send(MAGIC_HELO + struct.pack("<I", PROTOCOL_VERSION))
        reply = self._recv(8)
        if reply[:4] == MAGIC_RSP:
            # error frame: we already hold magic+status, the message follows
            status = struct.unpack("<I", reply[4:])[0]
            (msg_len,) = struct.unpack("<I", self._recv(4))
            msg = self._recv(msg_len).decode("utf-8", "replace")
            raise ProtocolVersionMismatch(f"bridge refused handshake (status {status}): {msg}")
        if reply != MAGIC_HELO + struct.pack("<I", PROTOCOL_VERSION):
            raise ProtocolVersionMismatch(f"unexpected handshake echo {reply!r}")

    def close(self) -> None:
        if self._proc is None:
            return
        proc, self._proc = self._proc, None
        for stream in (proc.stdin, proc.stdout):
            if stream is not None:
                try:
                    stream.close()
                except OSError:
                    pass  # peer already gone; nothing left to flush
        proc.terminate()
        try:
            proc.wait(timeout=2.0)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()

    def __enter__(self) -> "BridgeClient":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _send(self, blob: bytes) -> None:
        assert self._proc is not None
        try:
            self._proc.stdin.write(blob)
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise PeerClosed(f"bridge stdin closed: {exc}") from exc

    def _recv(self, count: int) -> bytes:
        assert self._proc is not None
        deadline = time.monotonic() + self.timeout
        return _recv_exact(self._proc.stdout.fileno(), count, deadline)

    def predict(self, xv: np.ndarray, t: int, abar_t: float) -> np.ndarray:
        if self._proc is None:
            self.start()
        n, c, h, w = xv.shape
        payload = np.ascontiguousarray(xv, dtype="<f4").tobytes()
        header = MAGIC_REQ + struct.pack("<Id4I", t, abar_t, n, c, h, w)
        self._send(header + payload)
        magic = self._recv(4)
        if magic != MAGIC_RSP:
            raise ExternalProtocolError(f"expected response magic, got {magic!r}")
        (status,) = struct.unpack("<I", self._recv(4))
        if status != 0:
            (msg_len,) = struct.unpack("<I", self._recv(4))
            msg = self._recv(msg_len).decode("utf-8", "replace")
            raise ExternalProtocolError(f"bridge error (status {status}): {msg}")
        dims = struct.unpack("<4I", self._recv(16))
        if dims != (n, c, h, w):
            raise ShapeMismatch(f"bridge replied dims {dims}, expected {(n, c, h, w)}")
        body = self._recv(n * c * h * w * 4)
        eps = np.frombuffer(body, dtype="<f4").reshape(n, c, h, w)
        return eps.astype(np.float64)


class ExternalEps(EpsModel):
    """Denoiser served by a child process speaking the wire protocol."""

    def __init__(self, cmd: str | list[str], timeout: float = 5.0):
        self.client = BridgeClient(cmd, timeout)
        self.descriptor = f"external({cmd if isinstance(cmd, str) else shlex.join(cmd)})"

    def _predict(self, xv, t, abar_t):
        return self.client.predict(xv, t, abar_t)

    def close(self) -> None:
        self.client.close()

    def __enter__(self) -> "ExternalEps":
        self.client.start()
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def external_predict(client: BridgeClient, x_t, t: int, abar_t: float):
    """One request/response round trip against an already-started bridge."""
    xv = as_volume(x_t)
    return like(x_t, client.predict(xv, t, abar_t))
