"""Corpus manifests, option-to-config mapping and the permutation sweep behind ``stats``."""

from __future__ import annotations

import csv
import io
import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .classify import ClassifierSpec, ClusterMode, Measure
from .errors import ConfigValidationError, WriterIdentError
from .loaders import LoaderKind
from .pipeline import (
    FftFeature,
    Filter1D,
    Filter2D,
    Flatten,
    LpcFeature,
    MinMaxFeature,
    NoiseSubtraction,
    Normalize,
    Pipeline,
    PipelineConfig,
    Silence,
    fingerprint,
)
from .preprocessing import DEFAULT_SILENCE_THRESHOLD, FilterKind, FilterResponse, FlattenOrder

STATS_HEADER = ["fingerprint", "status", "top1", "top2", "train_s", "test_s_per_sample", "samples"]


class ManifestError(WriterIdentError, ValueError):
    pass


class SweepSpecError(WriterIdentError, ValueError):
    pass


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    subject: int
    split: str  # TRAIN or TEST


def read_manifest(path) -> list[ManifestEntry]:
    """Read ``path,subject,split`` rows; relative paths resolve against the manifest's folder."""
    base = Path(path).parent
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip().lower() for c in rows[0]] != ["path", "subject", "split"]:
        raise ManifestError(f"{path}: header must be 'path,subject,split'")
    entries = []
    for lineno, row in enumerate(rows[1:], 2):
        if not row or not "".join(row).strip():
            continue
        if len(row) != 3:
            raise ManifestError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
        p, subject, split = (c.strip() for c in row)
        split = split.upper()
        if split not in ("TRAIN", "TEST"):
            raise ManifestError(f"{path}:{lineno}: split must be TRAIN or TEST, got {split!r}")
        try:
            sid = int(subject)
        except ValueError:
            raise ManifestError(f"{path}:{lineno}: subject {subject!r} is not an integer") from None
        entries.append(ManifestEntry(str(base / p), sid, split))
    seen = set()
    for e in entries:
        if e.path in seen:
            raise ManifestError(f"{path}: duplicate path {e.path}")
        seen.add(e.path)
    trained = {e.subject for e in entries if e.split == "TRAIN"}
    missing = sorted({e.subject for e in entries if e.split == "TEST"} - trained)
    if missing:
        raise ManifestError(f"{path}: TEST subjects without TRAIN pages: {missing}")
    return entries


# ---------------------------------------------------------------------------
# flags -> config


@dataclass(frozen=True)
class Options:
    """Flat pipeline options, as the CLI and the sweep axes see them."""

    loader: str = "image"
    noise_sample: str | None = None
    noise: bool | None = None  # sweep toggle; None means "use the explicit flags"
    noise_1d: bool = False
    filter: str | None = None
    low_cut: float | None = None
    high_cut: float | None = None
    flatten: str | None = None
    silence: float | None = None
    normalize: bool = False
    feature: str = "fft"
    fft_chunk: int = 1024
    lpc_order: int = 20
    lpc_window: int = 128
    minmax_k: int = 50
    classifier: str = "cos"
    minkowski_p: float = 3.0
    hamming_tol: float = 0.0
    diff_tol: float = 1e-4
    mah_cov: str = "pooled"
    cluster: str = "mean"


def _response(kind: str, low: float | None, high: float | None) -> FilterResponse:
    default = FilterResponse.default(kind)
    return FilterResponse(
        default.kind,
        default.low_cutoff if low is None else low,
        default.high_cutoff if high is None else high,
    )


def build_config(o: Options) -> PipelineConfig:
    """Map options to a config. Illegal combinations survive here and fail validation."""
    loader = LoaderKind(o.loader)
    is_image = loader is LoaderKind.IMAGE
    stages = []
    if o.noise is None:
        noise_sub, noise_1d = o.noise_sample is not None, o.noise_1d
    elif is_image:
        noise_sub, noise_1d = o.noise, False
    else:
        noise_sub, noise_1d = False, o.noise
    if noise_sub:
        if o.noise_sample is None:
            raise ConfigValidationError(["noise subtraction requested without --noise-sample"])
        stages.append(NoiseSubtraction(o.noise_sample))
    if noise_1d:
        stages.append(Filter1D(FilterResponse.default(FilterKind.LOW_PASS)))
    if o.filter is not None:
        r = _response(o.filter, o.low_cut, o.high_cut)
        stages.append(Filter2D(r) if is_image else Filter1D(r))
    if o.flatten is not None or is_image:
        stages.append(Flatten(FlattenOrder(o.flatten or "row")))
    if o.silence is not None:
        stages.append(Silence(o.silence))
    if o.normalize:
        stages.append(Normalize())

    if o.feature == "fft":
        feature = FftFeature(o.fft_chunk)
    elif o.feature == "lpc":
        feature = LpcFeature(o.lpc_order, o.lpc_window)
    elif o.feature == "minmax":
        feature = MinMaxFeature(o.minmax_k)
    else:
        raise ConfigValidationError([f"unknown feature extractor {o.feature!r}"])

    spec = ClassifierSpec(
        Measure(o.classifier),
        minkowski_p=o.minkowski_p,
        hamming_tolerance=o.hamming_tol,
        diff_tolerance=o.diff_tol,
        covariance=o.mah_cov,
    )
    return PipelineConfig(loader, tuple(stages), feature, spec, ClusterMode(o.cluster))


# ---------------------------------------------------------------------------
# permutation sweeps

_ON_OFF = {"on": True, "off": False}


def _silence_value(v: str):
    if v in ("on", "off"):
        return DEFAULT_SILENCE_THRESHOLD if v == "on" else None
    return float(v)


SWEEP_AXES = {
    "loader": ("loader", lambda v: LoaderKind(v).value),
    "noise": ("noise", lambda v: _ON_OFF[v]),
    "filter": ("filter", lambda v: None if v == "none" else FilterKind(v).value),
    "flatten": ("flatten", lambda v: FlattenOrder(v).value),
    "silence": ("silence", _silence_value),
    "normalize": ("normalize", lambda v: _ON_OFF[v]),
    "feature": ("feature", lambda v: {"fft": "fft", "lpc": "lpc", "minmax": "minmax"}[v]),
    "classifier": ("classifier", lambda v: Measure(v).value),
    "cluster": ("cluster", lambda v: ClusterMode(v).value),
}


def parse_sweep(text: str) -> list[tuple[str, list]]:
    """Parse ``axis=v1,v2;axis=v3`` into ``[(option_name, values), ...]``."""
    axes: list[tuple[str, list]] = []
    seen = set()
    for part in filter(None, (p.strip() for p in text.split(";"))):
        key, sep, raw = part.partition("=")
        key = key.strip().lower()
        if not sep or key not in SWEEP_AXES:
            raise SweepSpecError(f"unknown sweep axis in {part!r}; axes: {', '.join(SWEEP_AXES)}")
        if key in seen:
            raise SweepSpecError(f"sweep axis {key!r} given twice")
        seen.add(key)
        option, convert = SWEEP_AXES[key]
        values = []
        for v in (x.strip().lower() for x in raw.split(",")):
            try:
                values.append(convert(v))
            except (KeyError, ValueError):
                raise SweepSpecError(f"bad value {v!r} for sweep axis {key!r}") from None
        if not values:
            raise SweepSpecError(f"sweep axis {key!r} has no values")
        axes.append((option, values))
    return axes


def expand_sweep(base: Options, axes: list[tuple[str, list]]) -> list[Options]:
    names = [a for a, _ in axes]
    return [replace(base, **dict(zip(names, combo))) for combo in itertools.product(*(v for _, v in axes))]


@dataclass(frozen=True)
class StatsRow:
    fingerprint: str
    status: str
    top1: float | None = None
    top2: float | None = None
    train_seconds: float | None = None
    test_seconds_per_sample: float | None = None
    sample_count: int = 0

    @property
    def ok(self) -> bool:
        return self.status == "OK"


def evaluate(options: Options, entries: list[ManifestEntry]) -> StatsRow:
    """Train on the TRAIN split, identify every TEST page, report accuracy and timing."""
    tests = [e for e in entries if e.split == "TEST"]
    try:
        config = build_config(options)
        fp = fingerprint(config)
    except (WriterIdentError, ValueError) as exc:
        return StatsRow(_describe_options(options), f"ERROR: {exc}", sample_count=len(tests))
    try:
        pipe = Pipeline(config)
        ts = pipe.new_training_set()
        start = time.perf_counter()
        for e in entries:
            if e.split == "TRAIN":
                pipe.train(ts, e.subject, e.path)
        train_s = time.perf_counter() - start
        hits1 = hits2 = 0
        start = time.perf_counter()
        for e in tests:
            rank = pipe.identify(ts, e.path).rank_of(e.subject)
            hits1 += rank == 1
            hits2 += rank <= 2
        test_s = (time.perf_counter() - start) / max(len(tests), 1)
    except (WriterIdentError, OSError, ValueError, ArithmeticError) as exc:
        return StatsRow(fp, f"ERROR: {exc}", sample_count=len(tests))
    n = max(len(tests), 1)
    return StatsRow(fp, "OK", 100.0 * hits1 / n, 100.0 * hits2 / n, train_s, test_s, len(tests))


def _describe_options(o: Options) -> str:
    return "invalid:" + ",".join(f"{k}={v}" for k, v in o.__dict__.items() if v is not None)


def _evaluate_job(args):
    return evaluate(*args)


def run_sweep(configs: list[Options], entries: list[ManifestEntry], jobs: int = 1) -> list[StatsRow]:
    """Evaluate every config, then sort by top-1 descending, fingerprint ascending."""
    work = [(o, entries) for o in configs]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_evaluate_job, work))
    else:
        rows = [evaluate(*w) for w in work]
    return sort_rows(rows)


def sort_rows(rows: list[StatsRow]) -> list[StatsRow]:
    return sorted(rows, key=lambda r: (not r.ok, -(r.top1 or 0.0), r.fingerprint))


def _pct(x) -> str:
    if x is None:
        return ""
    return f"{x:.4f}".rstrip("0").rstrip(".")


def _secs(x) -> str:
    return "" if x is None else f"{x:.6f}"


def rows_to_csv(rows: list[StatsRow]) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(STATS_HEADER)
    for r in rows:
        out.writerow(
            [
                r.fingerprint,
                r.status,
                _pct(r.top1),
                _pct(r.top2),
                _secs(r.train_seconds),
                _secs(r.test_seconds_per_sample),
                r.sample_count,
            ]
        )
    return buf.getvalue()
