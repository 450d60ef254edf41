"""Numeric kernel: radix-2 FFT, autocorrelation, Levinson-Durbin, Gauss-Jordan inversion.

numpy is used as the array container only; the transforms and solvers are
written out here so that the rest of the package never reaches for
``numpy.fft`` or ``numpy.linalg``.

Every function accepts stacked inputs along the leading axes where that is
useful to callers (row-wise image filtering, window-wise LPC), which keeps the
per-line loops inside numpy.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    DegenerateSignalError,
    InvalidArgumentError,
    SingularityError,
    SingularMatrixError,
)

PIVOT_EPS = 1e-12
SMOOTHING_EPS = 1e-6
# Residual below this fraction of r[0] counts as a vanished prediction error.
RESIDUAL_EPS = 1e-12


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def next_power_of_two(n: int) -> int:
    if n <= 1:
        return 1
    return 1 << (n - 1).bit_length()


@lru_cache(maxsize=64)
def _bit_reverse_permutation(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n, dtype=np.int64)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    rev.setflags(write=False)
    return rev


@lru_cache(maxsize=64)
def _twiddles(size: int) -> np.ndarray:
    half = size // 2
    w = np.exp(-2j * np.pi * np.arange(half) / size)
    w.setflags(write=False)
    return w


def fft(x) -> np.ndarray:
    """Unnormalized forward DFT along the last axis.

    ``X[k] = sum_n x[n] exp(-2 pi i n k / N)``. The last axis must have a
    power-of-two length; callers zero-pad.
    """
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim == 0:
        raise InvalidArgumentError("fft needs at least one axis")
    n = x.shape[-1]
    if not is_power_of_two(n):
        raise InvalidArgumentError(f"fft length must be a power of two, got {n}")

    out = np.ascontiguousarray(x[..., _bit_reverse_permutation(n)])
    lead = out.shape[:-1]
    size = 2
    while size <= n:
        half = size // 2
        blocks = out.reshape(lead + (n // size, size))
        even = blocks[..., :half].copy()
        odd = blocks[..., half:] * _twiddles(size)
        blocks[..., :half] = even + odd
        blocks[..., half:] = even - odd
        size <<= 1
    return out


def ifft(X) -> np.ndarray:
    """Inverse DFT with 1/N normalization, so ``ifft(fft(x)) == x``."""
    X = np.asarray(X, dtype=np.complex128)
    if X.ndim == 0:
        raise InvalidArgumentError("ifft needs at least one axis")
    n = X.shape[-1]
    if not is_power_of_two(n):
        raise InvalidArgumentError(f"ifft length must be a power of two, got {n}")
    return np.conj(fft(np.conj(X))) / n


def autocorrelation(x, max_lag: int) -> np.ndarray:
    """Biased autocorrelation ``r[k] = sum_{n<N-k} x[n] x[n+k]`` for k = 0..max_lag.

    Works along the last axis, so a stack of windows gives a stack of
    autocorrelation vectors.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    if max_lag < 0 or max_lag >= n:
        raise InvalidArgumentError(f"max_lag must be in [0, {n - 1}], got {max_lag}")
    r = np.empty(x.shape[:-1] + (max_lag + 1,))
    for k in range(max_lag + 1):
        r[..., k] = np.sum(x[..., : n - k] * x[..., k:], axis=-1)
    return r


@dataclass(frozen=True)
class LpcResult:
    coefficients: np.ndarray
    prediction_error: float


def _levinson_batch(r: np.ndarray, order: int):
    """Run the recursion on each row of ``r``.

    Returns ``(coefficients, errors, failed_stage)`` where ``failed_stage`` is
    0 for rows that completed, -1 for rows with r[0] <= 0, and the 1-based
    recursion stage for rows whose residual vanished.
    """
    batch = r.shape[0]
    a = np.zeros((batch, order))
    err = r[:, 0].copy()
    failed = np.where(err > 0, 0, -1)
    floor = RESIDUAL_EPS * np.abs(r[:, 0])
    for i in range(1, order + 1):
        live = failed == 0
        vanished = live & (err <= floor)
        failed[vanished] = i
        live &= ~vanished
        if not live.any():
            break
        # a[:, :i-1] holds the order-(i-1) predictor
        acc = r[:, i] - np.einsum("bj,bj->b", a[:, : i - 1], r[:, i - 1 : 0 : -1])
        k = np.zeros(batch)
        k[live] = acc[live] / err[live]
        prev = a[:, : i - 1].copy()
        a[:, : i - 1] = prev - k[:, None] * prev[:, ::-1]
        a[:, i - 1] = k
        err = np.where(live, err * (1.0 - k * k), err)
    return a, err, failed


def levinson_durbin(r, order: int) -> LpcResult:
    """Solve the Toeplitz normal equations ``R a = r[1..order]``.

    The coefficients predict ``x[n] ~ sum_i a[i] x[n-i-1]``.
    """
    r = np.asarray(r, dtype=np.float64)
    if order < 1:
        raise InvalidArgumentError(f"order must be >= 1, got {order}")
    if r.ndim != 1 or r.shape[0] < order + 1:
        raise InvalidArgumentError(f"need at least {order + 1} autocorrelation values")
    if not r[0] > 0:
        raise DegenerateSignalError(f"r[0] must be positive, got {r[0]}")
    a, err, failed = _levinson_batch(r[None, : order + 1], order)
    if failed[0] > 0:
        raise SingularityError(int(failed[0]))
    return LpcResult(coefficients=a[0], prediction_error=max(float(err[0]), 0.0))


def _gauss_jordan(m: np.ndarray) -> np.ndarray | None:
    n = m.shape[0]
    aug = np.hstack([m, np.eye(n)])
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(aug[col:, col])))
        if abs(aug[pivot, col]) < PIVOT_EPS:
            return None
        if pivot != col:
            aug[[col, pivot]] = aug[[pivot, col]]
        aug[col] /= aug[col, col]
        factors = aug[:, col].copy()
        factors[col] = 0.0
        aug -= np.outer(factors, aug[col])
    return aug[:, n:]


def invert_matrix(m, smooth: bool = False) -> np.ndarray:
    """Gauss-Jordan inverse with partial pivoting.

    With ``smooth`` set, a pivot below 1e-12 triggers one retry on
    ``m + 1e-6 * I``.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidArgumentError(f"matrix must be square, got shape {m.shape}")
    inv = _gauss_jordan(m)
    if inv is None and smooth:
        inv = _gauss_jordan(m + SMOOTHING_EPS * np.eye(m.shape[0]))
    if inv is None:
        raise SingularMatrixError(
            "matrix is singular" + (" even after diagonal smoothing" if smooth else "")
        )
    return inv
