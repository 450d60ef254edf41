"""Bind a loader, a preprocessing chain, an extractor and a classifier into one runnable config.

Preprocessing stages must appear in this order::

    image pages:  noise-sub? -> filter2d? -> flatten -> silence? -> normalize?
    1D readings:  filter1d*  -> silence? -> normalize?

A config renders to a canonical fingerprint string. Training sets store the
fingerprint of everything except the classifier, so one trained set can be
queried with any measure.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from urllib.parse import quote

from .classify import (
    ClassifierSpec,
    ClusterMode,
    CovarianceSource,
    Measure,
    ResultSet,
    TrainingSet,
    check_subject_id,
    classify,
    train,
)
from .errors import ConfigValidationError, NotTrainedError, StageError
from .features import (
    DEFAULT_FFT_CHUNK,
    DEFAULT_LPC_ORDER,
    DEFAULT_LPC_WINDOW,
    DEFAULT_MINMAX_K,
    FeatureKind,
    FeatureVector,
    extract_fft_features,
    extract_lpc_features,
    extract_minmax,
)
from .loaders import (
    LoaderKind,
    Sample,
    Sample2D,
    load_as_pcm,
    load_image,
    load_raw_bytes,
    load_text_ngrams,
)
from .preprocessing import (
    DEFAULT_SILENCE_THRESHOLD,
    FilterResponse,
    FlattenOrder,
    fft_filter_1d,
    fft_filter_2d,
    flatten,
    normalize,
    remove_silence,
    subtract_noise_spectrum,
)


def _num(x) -> str:
    """Shortest round-trip rendering of a real parameter; 3 and 3.0 both give "3.0"."""
    return repr(float(x))


# ---------------------------------------------------------------------------
# preprocessing stages


@dataclass(frozen=True)
class NoiseSubtraction:
    noise_path: str
    name = "noise-sub"

    def token(self) -> str:
        return f"noisesub(path={quote(str(self.noise_path), safe='/')})"


@dataclass(frozen=True)
class Filter2D:
    response: FilterResponse
    name = "filter2d"

    def token(self) -> str:
        r = self.response
        return f"filter2d(kind={r.kind.value},low={_num(r.low_cutoff)},high={_num(r.high_cutoff)})"


@dataclass(frozen=True)
class Flatten:
    order: FlattenOrder = FlattenOrder.ROW_MAJOR
    name = "flatten"

    def __post_init__(self):
        object.__setattr__(self, "order", FlattenOrder(self.order))

    def token(self) -> str:
        return f"flatten(order={self.order.value})"


@dataclass(frozen=True)
class Filter1D:
    response: FilterResponse
    name = "filter1d"

    def token(self) -> str:
        r = self.response
        return f"filter1d(kind={r.kind.value},low={_num(r.low_cutoff)},high={_num(r.high_cutoff)})"


@dataclass(frozen=True)
class Silence:
    threshold: float = DEFAULT_SILENCE_THRESHOLD
    name = "silence"

    def token(self) -> str:
        return f"silence(threshold={_num(self.threshold)})"


@dataclass(frozen=True)
class Normalize:
    name = "normalize"

    def token(self) -> str:
        return "normalize"


Stage = NoiseSubtraction | Filter2D | Flatten | Filter1D | Silence | Normalize

_IMAGE_ORDER = {NoiseSubtraction: 0, Filter2D: 1, Flatten: 2, Silence: 3, Normalize: 4}
_SIGNAL_ORDER = {Filter1D: 0, Silence: 1, Normalize: 2}
_REPEATABLE = (Filter1D,)


# ---------------------------------------------------------------------------
# feature extractors


@dataclass(frozen=True)
class FftFeature:
    chunk: int = DEFAULT_FFT_CHUNK
    kind = FeatureKind.FFT

    def token(self) -> str:
        return f"fft(chunk={self.chunk})"

    def extract(self, s: Sample) -> FeatureVector:
        return extract_fft_features(s, self.chunk)


@dataclass(frozen=True)
class LpcFeature:
    order: int = DEFAULT_LPC_ORDER
    window: int = DEFAULT_LPC_WINDOW
    kind = FeatureKind.LPC

    def token(self) -> str:
        return f"lpc(order={self.order},window={self.window})"

    def extract(self, s: Sample) -> FeatureVector:
        return extract_lpc_features(s, self.order, self.window)


@dataclass(frozen=True)
class MinMaxFeature:
    k: int = DEFAULT_MINMAX_K
    kind = FeatureKind.MINMAX

    def token(self) -> str:
        return f"minmax(k={self.k})"

    def extract(self, s: Sample) -> FeatureVector:
        return extract_minmax(s, self.k)


Feature = FftFeature | LpcFeature | MinMaxFeature


def canonical_classifier(spec: ClassifierSpec) -> ClassifierSpec:
    """Reset parameters the chosen measure ignores, so equal behaviour means equal config."""
    base = ClassifierSpec(spec.measure)
    m = spec.measure
    if m is Measure.MINKOWSKI:
        return replace(base, minkowski_p=spec.minkowski_p)
    if m is Measure.HAMMING:
        return replace(base, hamming_tolerance=spec.hamming_tolerance)
    if m is Measure.DIFF:
        return replace(base, diff_tolerance=spec.diff_tolerance)
    if m is Measure.MAHALANOBIS:
        return replace(base, covariance=spec.covariance)
    return base


def classifier_token(spec: ClassifierSpec) -> str:
    m = spec.measure
    if m is Measure.MINKOWSKI:
        return f"mink(p={_num(spec.minkowski_p)})"
    if m is Measure.HAMMING:
        return f"hamming(tol={_num(spec.hamming_tolerance)})"
    if m is Measure.DIFF:
        return f"diff(tol={_num(spec.diff_tolerance)})"
    if m is Measure.MAHALANOBIS:
        return f"mah(cov={CovarianceSource(spec.covariance).value})"
    return m.value


@dataclass(frozen=True)
class PipelineConfig:
    loader: LoaderKind
    preprocessing: tuple = ()
    feature: Feature = field(default_factory=FftFeature)
    classifier: ClassifierSpec = field(default_factory=ClassifierSpec)
    cluster_mode: ClusterMode = ClusterMode.MEAN

    def __post_init__(self):
        object.__setattr__(self, "loader", LoaderKind(self.loader))
        object.__setattr__(self, "preprocessing", tuple(self.preprocessing))
        object.__setattr__(self, "classifier", canonical_classifier(self.classifier))
        object.__setattr__(self, "cluster_mode", ClusterMode(self.cluster_mode))

    def violations(self) -> list[str]:
        problems = []
        is_image = self.loader is LoaderKind.IMAGE
        legal = _IMAGE_ORDER if is_image else _SIGNAL_ORDER
        last_rank = -1
        seen: set[type] = set()
        for stage in self.preprocessing:
            kind = type(stage)
            if kind not in legal:
                if kind in _IMAGE_ORDER:
                    problems.append(f"stage {stage.name} needs the image loader")
                else:
                    problems.append(f"stage {stage.name} is not allowed with the image loader")
                continue
            if kind in seen and kind not in _REPEATABLE:
                problems.append(f"stage {stage.name} appears more than once")
            rank = legal[kind]
            if rank < last_rank:
                problems.append(f"stage {stage.name} is out of order")
            last_rank = max(last_rank, rank)
            seen.add(kind)
        if is_image and Flatten not in seen:
            problems.append("image loader requires a flatten stage")
        if isinstance(self.feature, FftFeature) and (self.feature.chunk < 2 or self.feature.chunk & (self.feature.chunk - 1)):
            problems.append(f"fft chunk {self.feature.chunk} is not a power of two >= 2")
        if isinstance(self.feature, LpcFeature) and not 1 <= self.feature.order < self.feature.window:
            problems.append(f"lpc needs 1 <= order < window, got order={self.feature.order} window={self.feature.window}")
        if isinstance(self.feature, MinMaxFeature) and self.feature.k < 1:
            problems.append(f"minmax k must be >= 1, got {self.feature.k}")
        return problems

    def validate(self) -> "PipelineConfig":
        problems = self.violations()
        if problems:
            raise ConfigValidationError(problems)
        return self

    def training_fingerprint(self) -> str:
        self.validate()
        pre = ">".join(s.token() for s in self.preprocessing) or "none"
        return (
            f"loader={self.loader.value};pre={pre};feature={self.feature.token()};"
            f"cluster={self.cluster_mode.value}"
        )


def fingerprint(c: PipelineConfig) -> str:
    """Canonical, injective text form of the whole config."""
    return f"{c.training_fingerprint()};classifier={classifier_token(c.classifier)}"


# ---------------------------------------------------------------------------
# execution


_LOADERS = {
    LoaderKind.RAW1: lambda p: load_raw_bytes(p, 1),
    LoaderKind.RAW2: lambda p: load_raw_bytes(p, 2),
    LoaderKind.RAW4: lambda p: load_raw_bytes(p, 4),
    LoaderKind.TEXT1: lambda p: load_text_ngrams(p, 1),
    LoaderKind.TEXT2: lambda p: load_text_ngrams(p, 2),
    LoaderKind.TEXT3: lambda p: load_text_ngrams(p, 3),
    LoaderKind.PCM: load_as_pcm,
    LoaderKind.IMAGE: load_image,
}


def _stage(name, fn, *args):
    try:
        return fn(*args)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


class Pipeline:
    """A validated config plus its loaded blank-sheet page, ready to run."""

    def __init__(self, config: PipelineConfig):
        self.config = config.validate()
        self.training_fingerprint = config.training_fingerprint()
        self.fingerprint = fingerprint(config)
        self._noise: dict[str, Sample2D] = {}

    def new_training_set(self) -> TrainingSet:
        return TrainingSet(fingerprint=self.training_fingerprint, mode=self.config.cluster_mode)

    def _noise_page(self, path: str) -> Sample2D:
        if path not in self._noise:
            self._noise[path] = _stage("noise-sample", load_image, path)
        return self._noise[path]

    def _apply(self, stage, data):
        if isinstance(stage, NoiseSubtraction):
            return subtract_noise_spectrum(data, self._noise_page(stage.noise_path))
        if isinstance(stage, Filter2D):
            return fft_filter_2d(data, stage.response)
        if isinstance(stage, Flatten):
            return flatten(data, stage.order)
        if isinstance(stage, Filter1D):
            return fft_filter_1d(data, stage.response)
        if isinstance(stage, Silence):
            return remove_silence(data, stage.threshold)
        return normalize(data)

    def features(self, path) -> FeatureVector:
        """load -> preprocess -> extract, with failures tagged by stage."""
        data = _stage("load", _LOADERS[self.config.loader], path)
        for stage in self.config.preprocessing:
            data = _stage(stage.name, self._apply, stage, data)
        return _stage("features", self.config.feature.extract, data)

    def train(self, ts: TrainingSet, subject, path) -> TrainingSet:
        ts.check_fingerprint(self.training_fingerprint)
        if not ts.clusters:
            ts.mode = self.config.cluster_mode
        subject = check_subject_id(subject)
        v = self.features(path)
        return _stage("train", train, ts, subject, v, self.training_fingerprint)

    def identify(self, ts: TrainingSet, path) -> ResultSet:
        if not ts.clusters:
            raise NotTrainedError("training set has no subjects")
        ts.check_fingerprint(self.training_fingerprint)
        v = self.features(path)
        return _stage("classify", classify, ts, v, self.config.classifier, self.training_fingerprint)


def run_train(c: PipelineConfig, ts: TrainingSet, subject, path) -> TrainingSet:
    return Pipeline(c).train(ts, subject, path)


def run_identify(c: PipelineConfig, ts: TrainingSet, path) -> ResultSet:
    return Pipeline(c).identify(ts, path)
