"""Exception types raised by the public API.

Grouped by subsystem; the CLI maps these groups onto exit codes (bad
inputs/config -> 2, numeric failures -> 3, external-denoiser failures -> 4).
"""


class VidsolveError(Exception):
    """Base class for all library errors."""


# --- file formats and preprocessing -----------------------------------------

class BadMagic(VidsolveError):
    """File does not start with the expected magic bytes."""


class UnsupportedVersion(VidsolveError):
    """File carries a format version this build cannot read."""


class TruncatedFile(VidsolveError):
    """Header promised more payload than the file contains."""


class DimOverflow(VidsolveError):
    """A declared dimension is outside the sane range [1, 2**20]."""


class UnsupportedChannels(VidsolveError):
    """Frame export only handles 1- or 3-channel video."""


class CropTooLarge(VidsolveError):
    """Requested center crop exceeds the frame size."""


class EmptyResult(VidsolveError):
    """Chunking produced no complete chunk (fewer frames than chunk size)."""


# --- schedule / sampling ------------------------------------------------------

class BadRange(VidsolveError):
    """Schedule parameters outside their valid range."""


class BadNfe(VidsolveError):
    """Requested step count outside [1, t_base]."""


class EtaTooLarge(VidsolveError):
    """Stochasticity weight makes the deterministic noise coefficient imaginary."""


# --- operators ----------------------------------------------------------------

class ShapeMismatch(VidsolveError):
    """Tensor shape does not match what the operation requires."""


class BadKernel(VidsolveError):
    """Kernel specification invalid (even width, non-positive sigma, ...)."""


class NonDivisible(VidsolveError):
    """Pooling factor does not divide the frame dimensions."""


class BadRatio(VidsolveError):
    """Masking ratio outside the open interval (0, 1)."""


# --- solvers ------------------------------------------------------------------

class NonFiniteEncountered(VidsolveError):
    """A NaN or Inf appeared mid-computation; aborted with diagnostics."""


class EmptyGrid(VidsolveError):
    """Kernel-parameter search grid is empty."""


# --- metrics ------------------------------------------------------------------

class SingleFrame(VidsolveError):
    """Inter-frame statistics need at least two frames."""


class FrameTooSmall(VidsolveError):
    """Frame smaller than the similarity window."""


# --- external denoiser protocol -------------------------------------------------

class ExternalProtocolError(VidsolveError):
    """Base class for failures talking to an external denoiser process."""


class BridgeTimeout(ExternalProtocolError):
    """Peer did not answer within the configured deadline."""


class PeerClosed(ExternalProtocolError):
    """Peer closed its stream mid-conversation."""


class ProtocolVersionMismatch(ExternalProtocolError):
    """Peer speaks a different protocol version."""


# --- CLI ------------------------------------------------------------------------

class ConfigError(VidsolveError):
    """Invalid run configuration (unknown key, bad value, missing input)."""
