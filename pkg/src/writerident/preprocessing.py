"""Noise removal, brick-wall FFT filters, silence removal, normalization, flattening.

2D operations work scanline by scanline (a true 2D transform is never taken)
and clamp their result back to [0, 1]. The ``*_rows`` kernels expose the
unclamped output for callers that need exact filter algebra.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .dsp import fft, ifft, is_power_of_two, next_power_of_two
from .errors import AllSilentError, EmptySampleError, InvalidArgumentError
from .loaders import LoaderKind, Sample, Sample2D

DEFAULT_LOW_PASS_CUTOFF = 0.35
DEFAULT_HIGH_PASS_CUTOFF = 0.35
DEFAULT_BAND = (0.125, 0.35)
DEFAULT_SILENCE_THRESHOLD = 0.01


class FilterKind(str, enum.Enum):
    LOW_PASS = "low"
    HIGH_PASS = "high"
    BAND_PASS = "band"
    BAND_STOP = "bandstop"


class FlattenOrder(str, enum.Enum):
    ROW_MAJOR = "row"
    COLUMN_MAJOR = "col"


@dataclass(frozen=True)
class FilterResponse:
    kind: FilterKind
    low_cutoff: float = 0.0
    high_cutoff: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "kind", FilterKind(self.kind))
        for name in ("low_cutoff", "high_cutoff"):
            v = getattr(self, name)
            if not 0.0 <= v <= 0.5:
                raise InvalidArgumentError(f"{name} must be a normalized frequency in [0, 0.5], got {v}")
        if self.kind in (FilterKind.BAND_PASS, FilterKind.BAND_STOP) and self.low_cutoff > self.high_cutoff:
            raise InvalidArgumentError("band filters need low_cutoff <= high_cutoff")

    @classmethod
    def default(cls, kind) -> "FilterResponse":
        kind = FilterKind(kind)
        if kind is FilterKind.LOW_PASS:
            return cls(kind, 0.0, DEFAULT_LOW_PASS_CUTOFF)
        if kind is FilterKind.HIGH_PASS:
            return cls(kind, DEFAULT_HIGH_PASS_CUTOFF, 0.5)
        return cls(kind, *DEFAULT_BAND)


def _require_nonempty(s: Sample) -> None:
    if s.point_count == 0:
        raise EmptySampleError("sample has no points")


def normalize(s: Sample) -> Sample:
    """Remove the mean, then scale so the peak magnitude is 1 (constant -> zeros)."""
    _require_nonempty(s)
    centered = s.amplitudes - s.amplitudes.mean()
    peak = np.max(np.abs(centered))
    if peak == 0.0:
        return s.with_amplitudes(np.zeros_like(centered))
    return s.with_amplitudes(centered / peak)


def remove_silence(s: Sample, threshold: float = DEFAULT_SILENCE_THRESHOLD) -> Sample:
    """Drop every point with ``|a| < threshold``, keeping the rest in order."""
    if threshold < 0:
        raise InvalidArgumentError(f"silence threshold must be >= 0, got {threshold}")
    kept = s.amplitudes[np.abs(s.amplitudes) >= threshold]
    if kept.size == 0:
        raise AllSilentError(f"every point is below the silence threshold {threshold}")
    return s.with_amplitudes(kept)


def make_response_mask(r: FilterResponse, fft_size: int) -> np.ndarray:
    if not is_power_of_two(fft_size):
        raise InvalidArgumentError(f"fft_size must be a power of two, got {fft_size}")
    k = np.arange(fft_size)
    f = np.minimum(k, fft_size - k) / fft_size
    if r.kind is FilterKind.LOW_PASS:
        passed = f <= r.high_cutoff
    elif r.kind is FilterKind.HIGH_PASS:
        passed = f >= r.low_cutoff
    else:
        passed = (f >= r.low_cutoff) & (f <= r.high_cutoff)
        if r.kind is FilterKind.BAND_STOP:
            passed = ~passed
    return passed.astype(np.float64)


def filter_rows(x, r: FilterResponse) -> np.ndarray:
    """Apply the brick-wall filter along the last axis; no clamping."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    size = next_power_of_two(n)
    padded = np.zeros(x.shape[:-1] + (size,))
    padded[..., :n] = x
    spectrum = fft(padded) * make_response_mask(r, size)
    return ifft(spectrum)[..., :n].real


def fft_filter_1d(s: Sample, r: FilterResponse) -> Sample:
    _require_nonempty(s)
    return s.with_amplitudes(filter_rows(s.amplitudes, r))


def _require_nonempty_image(img: Sample2D) -> None:
    if img.pixels.size == 0:
        raise EmptySampleError("image has zero size")


def fft_filter_2d(img: Sample2D, r: FilterResponse) -> Sample2D:
    _require_nonempty_image(img)
    return Sample2D(np.clip(filter_rows(img.pixels, r), 0.0, 1.0), img.source_path)


def spectral_subtract_rows(pixels, noise) -> np.ndarray:
    """Per-row magnitude subtraction of the blank-sheet spectrum, phase kept.

    Row ``i`` of ``pixels`` is paired with noise row ``i % noise_rows``. Both
    are zero-padded to a common power-of-two length. No clamping.
    """
    pixels = np.asarray(pixels, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    if noise.ndim != 2 or noise.size == 0:
        raise InvalidArgumentError("noise sample must be a non-empty 2D page")
    rows, cols = pixels.shape
    size = next_power_of_two(max(cols, noise.shape[1]))

    padded = np.zeros((rows, size))
    padded[:, :cols] = pixels
    noise_padded = np.zeros((noise.shape[0], size))
    noise_padded[:, : noise.shape[1]] = noise

    X = fft(padded)
    noise_mag = np.abs(fft(noise_padded))[np.arange(rows) % noise.shape[0]]
    mag = np.abs(X)
    kept = np.maximum(mag - noise_mag, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(mag > 0.0, kept / mag, 0.0)
    return ifft(X * scale)[:, :cols].real


def subtract_noise_spectrum(img: Sample2D, noise: Sample2D) -> Sample2D:
    _require_nonempty_image(img)
    out = spectral_subtract_rows(img.pixels, noise.pixels)
    return Sample2D(np.clip(out, 0.0, 1.0), img.source_path)


def flatten(img: Sample2D, order: FlattenOrder = FlattenOrder.ROW_MAJOR) -> Sample:
    """Serialize the page to 1D and rescale [0, 1] to [-1, 1]."""
    _require_nonempty_image(img)
    order = FlattenOrder(order)
    flat = img.pixels.ravel(order="C" if order is FlattenOrder.ROW_MAJOR else "F")
    return Sample(
        2.0 * flat - 1.0,
        img.source_path,
        LoaderKind.IMAGE,
        {"rows": img.rows, "cols": img.cols, "flatten": order.value},
    )


def unflatten(s: Sample, rows: int, cols: int, order: FlattenOrder = FlattenOrder.ROW_MAJOR) -> Sample2D:
    order = FlattenOrder(order)
    if s.point_count != rows * cols:
        raise InvalidArgumentError(f"{s.point_count} points cannot fill a {rows}x{cols} page")
    grid = ((s.amplitudes + 1.0) / 2.0).reshape(
        (rows, cols), order="C" if order is FlattenOrder.ROW_MAJOR else "F"
    )
    return Sample2D(grid, s.source_path)
