"""``writerident`` command line: train, identify, stats, inspect, synth.

Exit codes: 0 ok, 1 usage or invalid config, 2 I/O, 3 pipeline stage failure,
4 fingerprint mismatch.
"""

from __future__ import annotations

import argparse
import sys

from . import app, storage
from .classify import ClusterMode, Measure, Polarity, TrainingSet
from .errors import (
    ConfigMismatchError,
    ConfigValidationError,
    CorruptFileError,
    NotTrainedError,
    StageError,
    VersionError,
)
from .loaders import LoaderKind
from .pipeline import Pipeline
from .preprocessing import DEFAULT_SILENCE_THRESHOLD, FilterKind, FlattenOrder

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_STAGE, EXIT_MISMATCH = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; here 2 means I/O."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _pipeline_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("pipeline")
    g.add_argument("--loader", choices=[k.value for k in LoaderKind], default="image")
    g.add_argument("--noise-sample", metavar="PATH", help="blank sheet for spectral noise subtraction (image)")
    g.add_argument("--noise-1d", action="store_true", help="low-pass noise removal on 1D readings")
    g.add_argument("--silence", nargs="?", type=float, const=DEFAULT_SILENCE_THRESHOLD, metavar="THRESHOLD")
    g.add_argument("--normalize", action="store_true")
    g.add_argument("--filter", choices=[k.value for k in FilterKind])
    g.add_argument("--low-cut", type=float)
    g.add_argument("--high-cut", type=float)
    g.add_argument("--flatten", choices=[o.value for o in FlattenOrder])
    g.add_argument("--feature", choices=["fft", "lpc", "minmax"], default="fft")
    g.add_argument("--fft-chunk", type=int, default=1024)
    g.add_argument("--lpc-order", type=int, default=20)
    g.add_argument("--lpc-window", type=int, default=128)
    g.add_argument("--minmax-k", type=int, default=50)
    g.add_argument("--classifier", choices=[m.value for m in Measure], default="cos")
    g.add_argument("--minkowski-p", type=float, default=3.0)
    g.add_argument("--hamming-tol", type=float, default=0.0)
    g.add_argument("--diff-tol", type=float, default=1e-4)
    g.add_argument("--mah-cov", choices=["pooled", "identity"], default="pooled")
    g.add_argument("--cluster", choices=[c.value for c in ClusterMode], default="mean")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="writerident", description="Writer identification from scanned handwriting.")
    verbs = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = verbs.add_parser("train", help="train a training set from samples")
    _pipeline_flags(p)
    p.add_argument("--training-set", required=True, metavar="PATH")
    p.add_argument("--manifest", metavar="PATH", help="train every TRAIN entry of this manifest")
    p.add_argument("--subject", type=int, help="subject id for the positional files")
    p.add_argument("files", nargs="*")

    p = verbs.add_parser("identify", help="rank trained subjects for one sample")
    _pipeline_flags(p)
    p.add_argument("--training-set", required=True, metavar="PATH")
    p.add_argument("--format", choices=["text", "csv"], default="text")
    p.add_argument("file")

    p = verbs.add_parser("stats", help="permutation sweep with accuracy and timing")
    _pipeline_flags(p)
    p.add_argument("--manifest", required=True, metavar="PATH")
    p.add_argument("--sweep", default="", metavar="SPEC", help="e.g. 'noise=on,off;feature=fft,lpc;classifier=cos,eucl'")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--output", metavar="PATH", help="write CSV here instead of stdout")

    p = verbs.add_parser("inspect", help="summarize a training set file")
    p.add_argument("--training-set", required=True, metavar="PATH")

    p = verbs.add_parser("synth", help="write the synthetic demo corpus")
    p.add_argument("directory")
    p.add_argument("--writers", type=int, default=10)
    p.add_argument("--train-pages", type=int, default=2)
    p.add_argument("--test-pages", type=int, default=1)
    p.add_argument("--seed", type=int, default=2008)
    return parser


def _options(args) -> app.Options:
    return app.Options(
        loader=args.loader,
        noise_sample=args.noise_sample,
        noise_1d=args.noise_1d,
        filter=args.filter,
        low_cut=args.low_cut,
        high_cut=args.high_cut,
        flatten=args.flatten,
        silence=args.silence,
        normalize=args.normalize,
        feature=args.feature,
        fft_chunk=args.fft_chunk,
        lpc_order=args.lpc_order,
        lpc_window=args.lpc_window,
        minmax_k=args.minmax_k,
        classifier=args.classifier,
        minkowski_p=args.minkowski_p,
        hamming_tol=args.hamming_tol,
        diff_tol=args.diff_tol,
        mah_cov=args.mah_cov,
        cluster=args.cluster,
    )


def _err(msg: str) -> None:
    print(f"writerident: {msg}", file=sys.stderr)


def _stage_exit(exc: StageError) -> int:
    if isinstance(exc.cause, OSError):
        path = exc.cause.filename or ""
        _err(f"cannot read {path}: {exc.cause.strerror or exc.cause}")
        return EXIT_IO
    _err(f"pipeline failed in stage '{exc.stage}': {type(exc.cause).__name__}: {exc.cause}")
    return EXIT_STAGE


def _load_ts(path) -> TrainingSet:
    return storage.load_training_set(path)


def cmd_train(args) -> int:
    pipe = Pipeline(app.build_config(_options(args)))
    if args.manifest:
        jobs = [(e.subject, e.path) for e in app.read_manifest(args.manifest) if e.split == "TRAIN"]
    else:
        jobs = []
    if args.files:
        if args.subject is None:
            raise ValueError("positional files need --subject")
        jobs += [(args.subject, f) for f in args.files]
    if not jobs:
        raise ValueError("nothing to train: give --manifest or --subject with files")
    ts = pipe.new_training_set()
    for i, (subject, path) in enumerate(jobs, 1):
        pipe.train(ts, subject, path)
        print(f"[{i}/{len(jobs)}] subject {subject}: {path}")
    storage.save_training_set(ts, args.training_set)
    n_subj = len(ts.clusters)
    print(f"{ts.total_count} sample{'s' * (ts.total_count != 1)}, {n_subj} subject{'s' * (n_subj != 1)}")
    return EXIT_OK


def cmd_identify(args) -> int:
    pipe = Pipeline(app.build_config(_options(args)))
    ts = _load_ts(args.training_set)
    result = pipe.identify(ts, args.file)
    if args.format == "csv":
        print("rank,subject,score")
        for rank, (subject, s) in enumerate(result.entries, 1):
            print(f"{rank},{subject},{s!r}")
        return EXIT_OK
    word = "higher is better" if result.polarity is Polarity.LARGER_BETTER else "lower is better"
    print(f"{args.file}  [{pipe.config.classifier.measure.value}: {word}]")
    for rank, (subject, s) in enumerate(result.entries, 1):
        print(f"{rank:>4}  subject {subject:<8} {s:.6g}")
    return EXIT_OK


def cmd_stats(args) -> int:
    axes = app.parse_sweep(args.sweep)
    entries = app.read_manifest(args.manifest)
    configs = app.expand_sweep(_options(args), axes)
    rows = app.run_sweep(configs, entries, jobs=max(1, args.jobs))
    text = app.rows_to_csv(rows)
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_inspect(args) -> int:
    ts = _load_ts(args.training_set)
    print(f"fingerprint: {ts.fingerprint}")
    print(f"dimension:   {ts.dimension}")
    print(f"cluster:     {ts.mode.value}")
    print(f"samples:     {ts.total_count}")
    print(f"subjects:    {len(ts.clusters)}")
    for sid in sorted(ts.clusters):
        rec = ts.clusters[sid]
        print(f"  subject {sid}: {rec.count} sample(s)")
    return EXIT_OK


def cmd_synth(args) -> int:
    from .synthetic import make_corpus

    manifest = make_corpus(args.directory, args.writers, args.train_pages, args.test_pages, args.seed)
    print(manifest)
    return EXIT_OK


_COMMANDS = {
    "train": cmd_train,
    "identify": cmd_identify,
    "stats": cmd_stats,
    "inspect": cmd_inspect,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.verb](args)
    except ConfigMismatchError as exc:
        _err("training set was built with a different configuration")
        print(f"  stored:    {exc.expected}", file=sys.stderr)
        print(f"  requested: {exc.actual}", file=sys.stderr)
        return EXIT_MISMATCH
    except StageError as exc:
        return _stage_exit(exc)
    except (ConfigValidationError, app.SweepSpecError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    except (app.ManifestError, CorruptFileError, VersionError) as exc:
        _err(str(exc))
        return EXIT_IO
    except NotTrainedError as exc:
        _err(str(exc))
        return EXIT_STAGE
    except OSError as exc:
        _err(f"cannot access {exc.filename or ''}: {exc.strerror or exc}")
        return EXIT_IO
    except ValueError as exc:
        _err(str(exc))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
