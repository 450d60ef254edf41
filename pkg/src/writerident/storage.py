"""Line-oriented, checksummed text format for training sets.

::

    WIDTS 1
    fingerprint <canonical config>
    dimension <d>
    subject <id> <MEAN|MEDIAN> <count>
    <d values>
    history <k>            # MEDIAN subjects only
    <k lines of d values>
    ...
    mode <mean|median>
    scatter <d>
    <d lines of d values>
    crc32 <8 hex digits over every preceding byte>

Floats use the shortest repr that round-trips, so save/load is bit-exact.
"""

from __future__ import annotations

import os
import zlib

import numpy as np

from .classify import ClusterMode, ClusterRecord, TrainingSet
from .errors import CorruptFileError, VersionError

MAGIC = "WIDTS"
VERSION = 1


def _row(values) -> str:
    return " ".join(repr(float(x)) for x in values)


def dumps(ts: TrainingSet) -> str:
    lines = [f"{MAGIC} {VERSION}", f"fingerprint {ts.fingerprint}", f"dimension {ts.dimension}"]
    for sid in sorted(ts.clusters):
        rec = ts.clusters[sid]
        lines.append(f"subject {sid} {rec.mode.name} {rec.count}")
        lines.append(_row(rec.centroid))
        if rec.mode is ClusterMode.MEDIAN:
            lines.append(f"history {len(rec.history)}")
            lines.extend(_row(h) for h in rec.history)
    lines.append(f"mode {ts.mode.value}")
    scatter = ts.scatter if ts.scatter is not None else np.zeros((0, 0))
    lines.append(f"scatter {scatter.shape[0]}")
    lines.extend(_row(r) for r in scatter)
    body = "\n".join(lines) + "\n"
    crc = zlib.crc32(body.encode("utf-8"))
    return body + f"crc32 {crc:08x}\n"


def save_training_set(ts: TrainingSet, path) -> None:
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(ts))
    os.replace(tmp, path)


class _Lines:
    def __init__(self, lines):
        self.lines = lines
        self.pos = 0

    def next(self, keyword: str | None = None) -> list[str]:
        if self.pos >= len(self.lines):
            raise CorruptFileError("training set file ends early")
        line = self.lines[self.pos]
        self.pos += 1
        parts = line.split(" ")
        if keyword is not None and parts[0] != keyword:
            raise CorruptFileError(f"line {self.pos}: expected '{keyword}', got {line[:40]!r}")
        return parts

    def vector(self, d: int) -> np.ndarray:
        if self.pos >= len(self.lines):
            raise CorruptFileError("training set file ends early")
        line = self.lines[self.pos]
        self.pos += 1
        values = np.array([float(x) for x in line.split(" ")] if line else [], dtype=np.float64)
        if values.shape[0] != d:
            raise CorruptFileError(f"line {self.pos}: expected {d} values, got {values.shape[0]}")
        return values


def loads(text: str) -> TrainingSet:
    first = text.split("\n", 1)[0].split(" ")
    if len(first) != 2 or first[0] != MAGIC:
        raise CorruptFileError("not a training set file (bad magic line)")
    if first[1] != str(VERSION):
        raise VersionError(f"training set format version {first[1]} is not supported (expected {VERSION})")

    body, sep, trailer = text.rpartition("crc32 ")
    if not sep or "\n" in trailer.rstrip("\n") or not body.endswith("\n"):
        raise CorruptFileError("training set file has no checksum line")
    try:
        stored = int(trailer.strip(), 16)
    except ValueError:
        raise CorruptFileError("checksum is not hexadecimal") from None
    if zlib.crc32(body.encode("utf-8")) != stored:
        raise CorruptFileError("checksum mismatch: training set file is corrupt")

    try:
        return _parse(_Lines(body[:-1].split("\n")))
    except (ValueError, KeyError, IndexError) as exc:
        raise CorruptFileError(f"malformed training set file: {exc}") from exc


def _parse(src: _Lines) -> TrainingSet:
    src.next(MAGIC)
    fp_line = src.lines[src.pos]
    src.next("fingerprint")
    fp = fp_line[len("fingerprint ") :]
    d = int(src.next("dimension")[1])
    clusters = {}
    while src.lines[src.pos].startswith("subject "):
        _, sid, mode, count = src.next("subject")
        rec = ClusterRecord(int(sid), ClusterMode[mode], src.vector(d), int(count), [])
        if rec.mode is ClusterMode.MEDIAN:
            k = int(src.next("history")[1])
            rec.history = [src.vector(d) for _ in range(k)]
        clusters[rec.subject] = rec
    mode = ClusterMode(src.next("mode")[1])
    n = int(src.next("scatter")[1])
    scatter = np.vstack([src.vector(n) for _ in range(n)]) if n else None
    if src.pos != len(src.lines):
        raise CorruptFileError("trailing data before checksum")
    return TrainingSet(fingerprint=fp, mode=mode, dimension=d, clusters=clusters, scatter=scatter)


def load_training_set(path) -> TrainingSet:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return loads(fh.read())
