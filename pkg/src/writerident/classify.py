"""Per-writer clusters and nearest-cluster classification.

A :class:`TrainingSet` holds one cluster per 32-bit subject id, either a
running mean or a coordinate-wise median over that subject's feature vectors.
It also accumulates the pooled within-subject scatter matrix that the
Mahalanobis classifier turns into an inverse covariance.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .dsp import invert_matrix
from .errors import (
    ConfigMismatchError,
    DimensionError,
    DomainError,
    InvalidArgumentError,
    NotTrainedError,
    ZeroVectorError,
)

DEFAULT_MINKOWSKI_P = 3.0
DEFAULT_HAMMING_TOLERANCE = 0.0
DEFAULT_DIFF_TOLERANCE = 1e-4


class ClusterMode(str, enum.Enum):
    MEAN = "mean"
    MEDIAN = "median"


class Polarity(str, enum.Enum):
    SMALLER_BETTER = "smaller-better"
    LARGER_BETTER = "larger-better"


class Measure(str, enum.Enum):
    CHEBYSHEV = "cheb"
    EUCLIDEAN = "eucl"
    MINKOWSKI = "mink"
    MAHALANOBIS = "mah"
    HAMMING = "hamming"
    DIFF = "diff"
    COSINE = "cos"


class CovarianceSource(str, enum.Enum):
    POOLED = "pooled"
    IDENTITY = "identity"


def check_subject_id(subject) -> int:
    subject = int(subject)
    if not -(2**31) <= subject < 2**31:
        raise InvalidArgumentError(f"subject id {subject} does not fit in 32 bits")
    return subject


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionError(f"vector shapes differ: {a.shape} vs {b.shape}")
    return a, b


# ---------------------------------------------------------------------------
# measures


def chebyshev(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.max(np.abs(a - b))) if a.size else 0.0


def euclidean(a, b) -> float:
    a, b = _pair(a, b)
    d = a - b
    return float(np.sqrt(np.dot(d, d)))


def minkowski(a, b, p: float = DEFAULT_MINKOWSKI_P) -> float:
    if not p >= 1:
        raise InvalidArgumentError(f"Minkowski order must be >= 1, got {p}")
    a, b = _pair(a, b)
    d = np.abs(a - b)
    if p == 1:
        return float(np.sum(d))
    if p == 2:
        return float(np.sqrt(np.dot(d, d)))
    # scale by the largest term so large p does not overflow
    top = np.max(d) if d.size else 0.0
    if top == 0.0:
        return 0.0
    return float(top * np.sum((d / top) ** p) ** (1.0 / p))


def mahalanobis(a, b, covariance_inverse) -> float:
    a, b = _pair(a, b)
    ci = np.asarray(covariance_inverse, dtype=np.float64)
    if ci.shape != (a.size, a.size):
        raise DimensionError(f"inverse covariance shape {ci.shape} does not match dimension {a.size}")
    d = a - b
    q = float(d @ ci @ d)
    # rounding can push a PSD form a few ulps below zero
    slack = 1e-12 * float(np.dot(d, d)) * float(np.max(np.abs(ci)))
    if -slack <= q < 0:
        q = 0.0
    if q < 0:
        raise DomainError(f"negative quadratic form {q}: inverse covariance is not positive semi-definite")
    return float(np.sqrt(q))


def hamming(a, b, tolerance: float = DEFAULT_HAMMING_TOLERANCE) -> int:
    """Number of coordinates that differ by more than ``tolerance``."""
    a, b = _pair(a, b)
    return int(np.count_nonzero(np.abs(a - b) > tolerance))


def diff_distance(a, b, allowed_error: float = DEFAULT_DIFF_TOLERANCE) -> float:
    """Sum of ``|a_i - b_i|`` over coordinates that differ by more than ``allowed_error``.

    Loosely modelled on line-oriented diff: coordinates within tolerance
    count as matching and contribute nothing, mismatches contribute their
    magnitude. At zero tolerance this is the L1 distance.
    """
    a, b = _pair(a, b)
    d = np.abs(a - b)
    return float(np.sum(d[d > allowed_error]))


def cosine_similarity(a, b) -> float:
    a, b = _pair(a, b)
    ta, tb = np.max(np.abs(a)), np.max(np.abs(b))
    if ta == 0.0 or tb == 0.0:
        raise ZeroVectorError("cosine similarity is undefined for a zero vector")
    # pre-scaling keeps the norms clear of underflow and overflow
    a, b = a / ta, b / tb
    return float(np.clip(np.dot(a, b) / np.sqrt(np.dot(a, a) * np.dot(b, b)), -1.0, 1.0))


@dataclass(frozen=True)
class ClassifierSpec:
    measure: Measure = Measure.COSINE
    minkowski_p: float = DEFAULT_MINKOWSKI_P
    hamming_tolerance: float = DEFAULT_HAMMING_TOLERANCE
    diff_tolerance: float = DEFAULT_DIFF_TOLERANCE
    covariance: CovarianceSource = CovarianceSource.POOLED

    def __post_init__(self):
        object.__setattr__(self, "measure", Measure(self.measure))
        object.__setattr__(self, "covariance", CovarianceSource(self.covariance))
        if not self.minkowski_p >= 1:
            raise InvalidArgumentError(f"Minkowski order must be >= 1, got {self.minkowski_p}")
        if self.hamming_tolerance < 0 or self.diff_tolerance < 0:
            raise InvalidArgumentError("tolerances must be non-negative")

    @property
    def polarity(self) -> Polarity:
        return Polarity.LARGER_BETTER if self.measure is Measure.COSINE else Polarity.SMALLER_BETTER


# ---------------------------------------------------------------------------
# training


@dataclass
class ClusterRecord:
    subject: int
    mode: ClusterMode
    centroid: np.ndarray
    count: int = 1
    history: list[np.ndarray] = field(default_factory=list)


@dataclass
class TrainingSet:
    fingerprint: str = ""
    mode: ClusterMode = ClusterMode.MEAN
    dimension: int = 0
    clusters: dict[int, ClusterRecord] = field(default_factory=dict)
    # pooled within-subject scatter, sum over subjects of (x - mean_s)(x - mean_s)^T
    scatter: np.ndarray | None = None
    _inverse_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.mode = ClusterMode(self.mode)

    @property
    def total_count(self) -> int:
        return sum(c.count for c in self.clusters.values())

    def check_fingerprint(self, fingerprint: str | None) -> None:
        if fingerprint is not None and self.fingerprint and fingerprint != self.fingerprint:
            raise ConfigMismatchError(self.fingerprint, fingerprint)

    def covariance(self) -> np.ndarray | None:
        """Pooled within-subject covariance, or None when it is underdetermined."""
        n, k = self.total_count, len(self.clusters)
        if n < self.dimension or self.scatter is None:
            return None
        cov = 0.5 * (self.scatter + self.scatter.T)
        return cov / (n - k) if n > k else cov

    def inverse_covariance(self) -> np.ndarray:
        """Smoothed inverse of :meth:`covariance`, identity when underdetermined."""
        if "pooled" not in self._inverse_cache:
            cov = self.covariance()
            self._inverse_cache["pooled"] = (
                np.eye(self.dimension) if cov is None else invert_matrix(cov, smooth=True)
            )
        return self._inverse_cache["pooled"]


def _values(v) -> np.ndarray:
    values = getattr(v, "values", v)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise DimensionError("feature vector must be a non-empty 1D array")
    if not np.all(np.isfinite(values)):
        raise InvalidArgumentError("feature vector must be finite")
    return values


def _lower_median(history: list[np.ndarray]) -> np.ndarray:
    stacked = np.sort(np.vstack(history), axis=0)
    return stacked[(len(history) - 1) // 2].copy()


def train(ts: TrainingSet, subject, v, fingerprint: str | None = None) -> TrainingSet:
    """Fold one feature vector into ``subject``'s cluster. Mutates and returns ``ts``."""
    subject = check_subject_id(subject)
    values = _values(v)
    ts.check_fingerprint(fingerprint)
    if ts.dimension and values.size != ts.dimension:
        raise DimensionError(f"feature dimension {values.size} does not match training set {ts.dimension}")
    if not ts.fingerprint and fingerprint:
        ts.fingerprint = fingerprint
    if not ts.dimension:
        ts.dimension = values.size
    if ts.scatter is None:
        ts.scatter = np.zeros((ts.dimension, ts.dimension))

    record = ts.clusters.get(subject)
    if record is None:
        ts.clusters[subject] = ClusterRecord(
            subject,
            ts.mode,
            values.copy(),
            1,
            [values.copy()] if ts.mode is ClusterMode.MEDIAN else [],
        )
    else:
        n = record.count
        if record.mode is ClusterMode.MEAN:
            old_mean = record.centroid
            record.centroid = (record.centroid * n + values) / (n + 1)
            new_mean = record.centroid
        else:
            old_mean = np.mean(record.history, axis=0)
            record.history.append(values.copy())
            new_mean = np.mean(record.history, axis=0)
            record.centroid = _lower_median(record.history)
        record.count = n + 1
        # Welford update of the within-subject scatter
        ts.scatter += np.outer(values - old_mean, values - new_mean)
    ts._inverse_cache.clear()
    return ts


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class ResultSet:
    entries: tuple[tuple[int, float], ...]
    polarity: Polarity

    @property
    def best(self) -> int:
        return self.entries[0][0]

    def rank_of(self, subject: int) -> int:
        """1-based rank of ``subject``."""
        for i, (s, _) in enumerate(self.entries, 1):
            if s == subject:
                return i
        raise KeyError(subject)


def score(spec: ClassifierSpec, a, b, covariance_inverse=None) -> float:
    m = spec.measure
    if m is Measure.CHEBYSHEV:
        return chebyshev(a, b)
    if m is Measure.EUCLIDEAN:
        return euclidean(a, b)
    if m is Measure.MINKOWSKI:
        return minkowski(a, b, spec.minkowski_p)
    if m is Measure.MAHALANOBIS:
        if covariance_inverse is None:
            covariance_inverse = np.eye(np.asarray(a).shape[0])
        return mahalanobis(a, b, covariance_inverse)
    if m is Measure.HAMMING:
        return float(hamming(a, b, spec.hamming_tolerance))
    if m is Measure.DIFF:
        return diff_distance(a, b, spec.diff_tolerance)
    return cosine_similarity(a, b)


def classify(ts: TrainingSet, v, spec: ClassifierSpec = ClassifierSpec(), fingerprint: str | None = None) -> ResultSet:
    """Score ``v`` against every cluster and rank best-first (ties by ascending id)."""
    if not ts.clusters:
        raise NotTrainedError("training set has no subjects")
    ts.check_fingerprint(fingerprint)
    values = _values(v)
    if values.size != ts.dimension:
        raise DimensionError(f"feature dimension {values.size} does not match training set {ts.dimension}")
    ci = None
    if spec.measure is Measure.MAHALANOBIS:
        ci = ts.inverse_covariance() if spec.covariance is CovarianceSource.POOLED else np.eye(ts.dimension)
    scored = [(sid, score(spec, values, rec.centroid, ci)) for sid, rec in ts.clusters.items()]
    sign = -1.0 if spec.polarity is Polarity.LARGER_BETTER else 1.0
    scored.sort(key=lambda e: (sign * e[1], e[0]))
    return ResultSet(tuple(scored), spec.polarity)
