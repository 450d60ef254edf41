"""Feature extractors: averaged FFT magnitudes, averaged LPC coefficients, min/max amplitudes."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .dsp import _levinson_batch, autocorrelation, fft, is_power_of_two
from .errors import DegenerateSignalError, EmptySampleError, InvalidArgumentError
from .loaders import Sample

DEFAULT_FFT_CHUNK = 1024
DEFAULT_LPC_ORDER = 20
DEFAULT_LPC_WINDOW = 128
DEFAULT_MINMAX_K = 50


class FeatureKind(str, enum.Enum):
    FFT = "fft"
    LPC = "lpc"
    MINMAX = "minmax"


@dataclass
class FeatureVector:
    values: np.ndarray
    kind: FeatureKind
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or self.values.size == 0:
            raise InvalidArgumentError("feature vector must be a non-empty 1D array")
        if not np.all(np.isfinite(self.values)):
            raise InvalidArgumentError("feature vector must be finite")

    def __len__(self):
        return self.values.shape[0]


def _frames(x: np.ndarray, size: int) -> np.ndarray:
    """Consecutive non-overlapping frames, the last one zero-padded."""
    count = -(-x.shape[0] // size)
    padded = np.zeros(count * size)
    padded[: x.shape[0]] = x
    return padded.reshape(count, size)


def extract_fft_features(s: Sample, chunk_size: int = DEFAULT_FFT_CHUNK) -> FeatureVector:
    """Mean magnitude spectrum (bins 0..chunk/2-1) over consecutive chunks."""
    if not is_power_of_two(chunk_size) or chunk_size < 2:
        raise InvalidArgumentError(f"chunk size must be a power of two >= 2, got {chunk_size}")
    if s.point_count == 0:
        raise EmptySampleError("cannot extract features from an empty sample")
    mags = np.abs(fft(_frames(s.amplitudes, chunk_size)))[:, : chunk_size // 2]
    return FeatureVector(mags.mean(axis=0), FeatureKind.FFT, {"chunk": chunk_size})


def extract_lpc_features(
    s: Sample, order: int = DEFAULT_LPC_ORDER, window_size: int = DEFAULT_LPC_WINDOW
) -> FeatureVector:
    """Mean LPC coefficient vector over consecutive windows.

    Windows whose recursion cannot complete (all-zero window, or a residual
    that vanishes before ``order``) are left out of the mean.
    """
    if order < 1:
        raise InvalidArgumentError(f"LPC order must be >= 1, got {order}")
    if window_size <= order:
        raise InvalidArgumentError(f"LPC window {window_size} must exceed order {order}")
    if s.point_count == 0:
        raise EmptySampleError("cannot extract features from an empty sample")
    windows = _frames(s.amplitudes, window_size)
    r = autocorrelation(windows, order)
    coeffs, _, failed = _levinson_batch(r, order)
    ok = failed == 0
    if not ok.any():
        raise DegenerateSignalError("every LPC window is degenerate (silent or perfectly predictable)")
    return FeatureVector(
        coeffs[ok].mean(axis=0), FeatureKind.LPC, {"order": order, "window": window_size}
    )


def extract_minmax(s: Sample, k: int = DEFAULT_MINMAX_K) -> FeatureVector:
    """The k smallest then the k largest amplitudes, each block ascending."""
    if k < 1 or 2 * k > s.point_count:
        raise InvalidArgumentError(f"min/max needs 1 <= k and 2k <= {s.point_count} points, got k={k}")
    ordered = np.sort(s.amplitudes)
    return FeatureVector(np.concatenate([ordered[:k], ordered[-k:]]), FeatureKind.MINMAX, {"k": k})
