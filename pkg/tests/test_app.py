import csv
import io

import pytest

from writerident import app
from writerident.app import ManifestEntry, Options, StatsRow
from writerident.errors import ConfigValidationError
from writerident.pipeline import Filter1D, Filter2D, Flatten, NoiseSubtraction, Normalize, Silence, fingerprint


def write_manifest(root, rows):
    path = root / "manifest.csv"
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["path", "subject", "split"])
        out.writerows(rows)
    return path


def const_file(root, name, byte, n=8):
    (root / name).write_bytes(bytes([byte]) * n)
    return name


@pytest.fixture
def confusion_corpus(tmp_path):
    """Three subjects at raw bytes 140/180/220; four queries with hand-worked ranks.

    With min/max (k=1) features the vector is (c, c), so euclidean ranking is
    just |query - centre| in byte units:

        query 145, true 1: d = 5, 35, 75    -> rank 1
        query 195, true 3: d = 55, 15, 25   -> rank 2
        query 150, true 3: d = 10, 30, 70   -> rank 3
        query 210, true 2: d = 70, 30, 10   -> rank 2

    top1 = 1/4 = 25%, top2 = 3/4 = 75%.
    """
    rows = []
    for sid, byte in ((1, 140), (2, 180), (3, 220)):
        rows.append((const_file(tmp_path, f"s{sid}.bin", byte), sid, "TRAIN"))
    for i, (byte, sid) in enumerate(((145, 1), (195, 3), (150, 3), (210, 2))):
        rows.append((const_file(tmp_path, f"q{i}.bin", byte), sid, "TEST"))
    return write_manifest(tmp_path, rows)


class TestManifest:
    def test_relative_paths_resolve_against_manifest(self, tmp_path):
        m = write_manifest(tmp_path, [("a.pgm", 1, "TRAIN"), ("b.pgm", 1, "test")])
        entries = app.read_manifest(m)
        assert entries == [
            ManifestEntry(str(tmp_path / "a.pgm"), 1, "TRAIN"),
            ManifestEntry(str(tmp_path / "b.pgm"), 1, "TEST"),
        ]

    def test_duplicate_paths(self, tmp_path):
        m = write_manifest(tmp_path, [("a.pgm", 1, "TRAIN"), ("a.pgm", 2, "TRAIN")])
        with pytest.raises(app.ManifestError, match="duplicate"):
            app.read_manifest(m)

    def test_test_subject_must_be_trained(self, tmp_path):
        m = write_manifest(tmp_path, [("a.pgm", 1, "TRAIN"), ("b.pgm", 2, "TEST")])
        with pytest.raises(app.ManifestError, match=r"\[2\]"):
            app.read_manifest(m)

    @pytest.mark.parametrize(
        "text",
        ["", "file,who,split\n", "path,subject,split\na.pgm,x,TRAIN\n", "path,subject,split\na.pgm,1,VALIDATE\n", "path,subject,split\na,1\n"],
    )
    def test_malformed(self, tmp_path, text):
        (tmp_path / "m.csv").write_text(text)
        with pytest.raises(app.ManifestError):
            app.read_manifest(tmp_path / "m.csv")


class TestBuildConfig:
    def test_image_defaults(self):
        c = app.build_config(Options())
        assert c.preprocessing == (Flatten(),)

    def test_full_image_chain(self):
        c = app.build_config(Options(noise_sample="blank.pgm", filter="band", silence=0.01, normalize=True, flatten="col"))
        kinds = [type(s) for s in c.preprocessing]
        assert kinds == [NoiseSubtraction, Filter2D, Flatten, Silence, Normalize]
        assert c.preprocessing[1].response.low_cutoff == 0.125

    def test_cutoff_override(self):
        c = app.build_config(Options(loader="pcm", filter="low", high_cut=0.2))
        assert c.preprocessing == (Filter1D(app.FilterResponse("low", 0.0, 0.2)),)

    def test_noise_1d_then_filter(self):
        c = app.build_config(Options(loader="pcm", noise_1d=True, filter="high"))
        assert [s.response.kind.value for s in c.preprocessing] == ["low", "high"]

    def test_noise_toggle_follows_loader(self):
        img = app.build_config(Options(noise=True, noise_sample="b.pgm"))
        assert isinstance(img.preprocessing[0], NoiseSubtraction)
        pcm = app.build_config(Options(loader="pcm", noise=True, noise_sample="b.pgm"))
        assert isinstance(pcm.preprocessing[0], Filter1D)
        assert app.build_config(Options(noise=False, noise_sample="b.pgm")).preprocessing == (Flatten(),)

    def test_noise_on_needs_sample(self):
        with pytest.raises(ConfigValidationError):
            app.build_config(Options(noise=True))

    def test_illegal_combination_fails_validation(self):
        c = app.build_config(Options(loader="pcm", flatten="row"))
        assert c.violations()


class TestSweepSpec:
    def test_parse(self):
        axes = app.parse_sweep("loader=image,pcm; classifier=cos,eucl ;noise=on,off;filter=none,low")
        assert axes == [
            ("loader", ["image", "pcm"]),
            ("classifier", ["cos", "eucl"]),
            ("noise", [True, False]),
            ("filter", [None, "low"]),
        ]

    def test_empty_spec_is_single_config(self):
        assert app.expand_sweep(Options(), app.parse_sweep("")) == [Options()]

    def test_cross_product_size(self):
        axes = app.parse_sweep("noise=on,off;feature=fft,lpc;classifier=cos,eucl,cheb")
        assert len(app.expand_sweep(Options(noise_sample="b"), axes)) == 12

    @pytest.mark.parametrize("spec", ["colour=red", "loader=vinyl", "noise=maybe", "classifier", "loader=image;loader=pcm", "silence=loud"])
    def test_bad_spec(self, spec):
        with pytest.raises(app.SweepSpecError):
            app.parse_sweep(spec)


class TestEvaluate:
    def test_hand_computed_confusion(self, confusion_corpus):
        row = app.evaluate(Options(loader="raw1", feature="minmax", minmax_k=1, classifier="eucl"), app.read_manifest(confusion_corpus))
        assert row.status == "OK"
        assert (row.top1, row.top2, row.sample_count) == (25.0, 75.0, 4)
        assert 0 <= row.top1 <= row.top2 <= 100

    def test_two_loaders_two_classifiers_four_rows(self, confusion_corpus):
        axes = app.parse_sweep("loader=raw1,raw2;classifier=eucl,cheb")
        base = Options(feature="minmax", minmax_k=1)
        rows = app.run_sweep(app.expand_sweep(base, axes), app.read_manifest(confusion_corpus))
        assert len(rows) == 4
        assert len(app.rows_to_csv(rows).splitlines()) == 5

    def test_perfect_config_shows_100(self, tmp_path):
        rows = []
        for sid, byte in ((1, 10), (2, 240)):
            rows.append((const_file(tmp_path, f"s{sid}.bin", byte), sid, "TRAIN"))
            rows.append((const_file(tmp_path, f"t{sid}.bin", byte + 3), sid, "TEST"))
        m = write_manifest(tmp_path, rows)
        [row] = app.run_sweep([Options(loader="raw1", feature="minmax", minmax_k=1, classifier="eucl")], app.read_manifest(m))
        assert row.top1 == 100.0
        assert app.rows_to_csv([row]).splitlines()[1].split(",")[2] == "100"

    def test_failed_config_is_a_row(self, confusion_corpus):
        entries = app.read_manifest(confusion_corpus)
        configs = [
            Options(loader="raw1", feature="minmax", minmax_k=1, classifier="eucl"),
            Options(loader="raw1", feature="minmax", minmax_k=50, classifier="eucl"),  # files are too short
            Options(loader="raw1", flatten="row"),  # invalid combination
        ]
        rows = app.run_sweep(configs, entries)
        assert [r.ok for r in rows] == [True, False, False]
        assert all(r.status.startswith("ERROR: ") for r in rows[1:])
        short, invalid = sorted(rows[1:], key=lambda r: r.fingerprint.startswith("invalid"))
        assert "minmax(k=50)" in short.fingerprint and "k=50" in short.status
        assert "flatten" in invalid.status

    def test_jobs_do_not_change_output(self, confusion_corpus):
        entries = app.read_manifest(confusion_corpus)
        configs = app.expand_sweep(
            Options(loader="raw1", feature="minmax", minmax_k=1),
            app.parse_sweep("classifier=eucl,cheb,cos,mink,hamming,diff,mah;cluster=mean,median"),
        )
        strip = lambda rows: [(r.fingerprint, r.status, r.top1, r.top2, r.sample_count) for r in rows]
        assert strip(app.run_sweep(configs, entries, jobs=1)) == strip(app.run_sweep(configs, entries, jobs=3))


def test_sort_order():
    rows = [
        StatsRow("b", "OK", 50.0, 60.0),
        StatsRow("z", "ERROR: boom"),
        StatsRow("c", "OK", 90.0, 90.0),
        StatsRow("a", "OK", 50.0, 70.0),
    ]
    assert [r.fingerprint for r in app.sort_rows(rows)] == ["c", "a", "b", "z"]


def test_csv_format():
    rows = [StatsRow("loader=x;classifier=mink(p=3.0)", "OK", 100.0, 100.0, 0.5, 0.01, 3), StatsRow("y", "ERROR: bad, very", sample_count=3)]
    parsed = list(csv.reader(io.StringIO(app.rows_to_csv(rows))))
    assert parsed[0] == app.STATS_HEADER
    assert parsed[1][:4] == ["loader=x;classifier=mink(p=3.0)", "OK", "100", "100"]
    assert parsed[2] == ["y", "ERROR: bad, very", "", "", "", "", "3"]
    assert app._pct(100 / 3) == "33.3333"


def test_fingerprint_in_rows_matches_pipeline(confusion_corpus):
    o = Options(loader="raw1", feature="minmax", minmax_k=1, classifier="mink")
    row = app.evaluate(o, app.read_manifest(confusion_corpus))
    assert row.fingerprint == fingerprint(app.build_config(o))
