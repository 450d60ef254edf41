"""Turn a scanned page file into a 1D Sample or a 2D grayscale page.

Four readings of the same bytes are supported: raw unsigned integers, text
n-grams, little-endian 16-bit PCM, and an actual image decode (binary PGM or
baseline uncompressed TIFF).
"""

from __future__ import annotations

import enum
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import CorruptFileError, EmptySampleError, FormatError, InvalidArgumentError

PCM_SAMPLE_RATE = 8000


class LoaderKind(str, enum.Enum):
    RAW1 = "raw1"
    RAW2 = "raw2"
    RAW4 = "raw4"
    TEXT1 = "text1"
    TEXT2 = "text2"
    TEXT3 = "text3"
    PCM = "pcm"
    IMAGE = "image"


@dataclass
class Sample:
    amplitudes: np.ndarray
    source_path: str = ""
    loader_kind: LoaderKind | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=np.float64)
        if self.amplitudes.ndim != 1:
            raise InvalidArgumentError("sample amplitudes must be one-dimensional")
        if not np.all(np.isfinite(self.amplitudes)):
            raise InvalidArgumentError("sample amplitudes must be finite")

    @property
    def point_count(self) -> int:
        return self.amplitudes.shape[0]

    def with_amplitudes(self, amplitudes) -> "Sample":
        return Sample(amplitudes, self.source_path, self.loader_kind, dict(self.metadata))


@dataclass
class Sample2D:
    """Row-major grayscale page, row 0 is the top scanline, values in [0, 1]."""

    pixels: np.ndarray
    source_path: str = ""

    def __post_init__(self):
        self.pixels = np.ascontiguousarray(self.pixels, dtype=np.float64)
        if self.pixels.ndim != 2:
            raise InvalidArgumentError("image pixels must be a 2D array")
        if not np.all(np.isfinite(self.pixels)):
            raise InvalidArgumentError("image pixels must be finite")
        if self.pixels.size and (self.pixels.min() < 0.0 or self.pixels.max() > 1.0):
            raise InvalidArgumentError("image pixels must lie in [0, 1]")

    @property
    def rows(self) -> int:
        return self.pixels.shape[0]

    @property
    def cols(self) -> int:
        return self.pixels.shape[1]


def _read_bytes(path) -> bytes:
    with open(path, "rb") as fh:
        data = fh.read()
    if not data:
        raise EmptySampleError(f"{path}: file is empty")
    return data


def load_raw_bytes(path, bytes_per_point: int) -> Sample:
    """Big-endian unsigned words mapped to ``(u - 2**(w-1)) / 2**(w-1)``."""
    dtypes = {1: ">u1", 2: ">u2", 4: ">u4"}
    if bytes_per_point not in dtypes:
        raise InvalidArgumentError(f"bytes_per_point must be 1, 2 or 4, got {bytes_per_point}")
    data = _read_bytes(path)
    tail = -len(data) % bytes_per_point
    if tail:
        data += b"\x00" * tail
    words = np.frombuffer(data, dtype=dtypes[bytes_per_point]).astype(np.float64)
    half = float(2 ** (8 * bytes_per_point - 1))
    kind = {1: LoaderKind.RAW1, 2: LoaderKind.RAW2, 4: LoaderKind.RAW4}[bytes_per_point]
    return Sample((words - half) / half, os.fspath(path), kind)


def load_text_ngrams(path, n: int) -> Sample:
    """Group decoded characters n at a time into one amplitude in [0, 1].

    Each code point is truncated to 16 bits and the group is read as a base
    65536 number, then divided by ``65536**n - 1``. Undecodable bytes become
    U+FFFD and a short final group is padded with code point 0.
    """
    if n not in (1, 2, 3):
        raise InvalidArgumentError(f"n-gram size must be 1, 2 or 3, got {n}")
    text = _read_bytes(path).decode("utf-8", errors="replace")
    cps = np.frombuffer(text.encode("utf-32-le"), dtype="<u4") & 0xFFFF
    pad = -len(cps) % n
    if pad:
        cps = np.concatenate([cps, np.zeros(pad, dtype=cps.dtype)])
    groups = cps.reshape(-1, n).astype(np.float64)
    composite = np.zeros(groups.shape[0])
    for j in range(n):
        # exact: composite < 2**48 fits a float64 mantissa
        composite = composite * 65536.0 + groups[:, j]
    kind = {1: LoaderKind.TEXT1, 2: LoaderKind.TEXT2, 3: LoaderKind.TEXT3}[n]
    return Sample(composite / (65536.0**n - 1.0), os.fspath(path), kind)


def load_as_pcm(path) -> Sample:
    """Reinterpret the whole file, header included, as 16-bit LE signed PCM."""
    data = _read_bytes(path)
    if len(data) % 2:
        data += b"\x00"
    s = np.frombuffer(data, dtype="<i2").astype(np.float64)
    return Sample(s / 32768.0, os.fspath(path), LoaderKind.PCM, {"sample_rate": PCM_SAMPLE_RATE})


# ---------------------------------------------------------------------------
# image containers


def load_image(path) -> Sample2D:
    """Decode an 8-bit grayscale PGM (P5) or uncompressed single-strip TIFF."""
    data = _read_bytes(path)
    if data[:2] == b"P5":
        pixels = _decode_pgm(data)
    elif data[:4] in (b"II*\x00", b"MM\x00*"):
        pixels = _decode_tiff(data)
    else:
        raise FormatError(f"{path}: unrecognised image container", tag="magic")
    return Sample2D(pixels.astype(np.float64) / 255.0, os.fspath(path))


def _decode_pgm(data: bytes) -> np.ndarray:
    fields: list[bytes] = []
    pos = 2
    while len(fields) < 3:
        if pos >= len(data):
            raise CorruptFileError("PGM header is truncated")
        c = data[pos : pos + 1]
        if c == b"#":
            end = data.find(b"\n", pos)
            pos = len(data) if end < 0 else end + 1
        elif c.isspace():
            pos += 1
        else:
            start = pos
            while pos < len(data) and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
                pos += 1
            fields.append(data[start:pos])
    try:
        width, height, maxval = (int(f) for f in fields)
    except ValueError:
        raise CorruptFileError(f"PGM header is malformed: {fields!r}") from None
    if maxval != 255:
        raise FormatError(f"PGM maxval {maxval} unsupported, only 255", tag="maxval")
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise CorruptFileError("PGM header is truncated")
    pos += 1
    need = width * height
    if width <= 0 or height <= 0:
        raise CorruptFileError(f"PGM has non-positive size {width}x{height}")
    if len(data) - pos < need:
        raise CorruptFileError(f"PGM pixel data truncated: need {need} bytes, have {len(data) - pos}")
    return np.frombuffer(data, dtype=np.uint8, count=need, offset=pos).reshape(height, width)


TIFF_TAGS = {
    256: "ImageWidth",
    257: "ImageLength",
    258: "BitsPerSample",
    259: "Compression",
    262: "PhotometricInterpretation",
    273: "StripOffsets",
    277: "SamplesPerPixel",
    278: "RowsPerStrip",
    279: "StripByteCounts",
    284: "PlanarConfiguration",
    322: "TileWidth",
    323: "TileLength",
}
_TIFF_TYPE_SIZES = {1: 1, 2: 1, 3: 2, 4: 4, 5: 8, 6: 1, 7: 1, 8: 2, 9: 4, 10: 8, 11: 4, 12: 8}
_TIFF_INT_FORMATS = {1: "B", 3: "H", 4: "I", 6: "b", 8: "h", 9: "i"}


def _decode_tiff(data: bytes) -> np.ndarray:
    bo = "<" if data[:2] == b"II" else ">"
    try:
        (ifd,) = struct.unpack_from(bo + "I", data, 4)
        (count,) = struct.unpack_from(bo + "H", data, ifd)
        tags: dict[int, list[int]] = {}
        for i in range(count):
            tag, typ, n, raw = struct.unpack_from(bo + "HHI4s", data, ifd + 2 + 12 * i)
            if typ not in _TIFF_INT_FORMATS:
                continue
            size = _TIFF_TYPE_SIZES[typ] * n
            if size <= 4:
                buf, off = raw, 0
            else:
                buf, (off,) = data, struct.unpack(bo + "I", raw)
            tags[tag] = list(struct.unpack_from(bo + _TIFF_INT_FORMATS[typ] * n, buf, off))
    except struct.error:
        raise CorruptFileError("TIFF directory is truncated") from None

    def one(tag, default=None):
        if tag not in tags:
            if default is None:
                raise FormatError(f"TIFF is missing required tag {TIFF_TAGS[tag]}", tag=TIFF_TAGS[tag])
            return default
        return tags[tag][0]

    if 322 in tags or 323 in tags:
        raise FormatError("tiled TIFF is unsupported", tag="TileWidth")
    if one(259, 1) != 1:
        raise FormatError(f"TIFF compression {one(259)} unsupported", tag="Compression")
    if one(277, 1) != 1:
        raise FormatError(f"TIFF SamplesPerPixel {one(277)} unsupported", tag="SamplesPerPixel")
    if one(258, 1) != 8:
        raise FormatError(f"TIFF BitsPerSample {one(258, 1)} unsupported", tag="BitsPerSample")
    photometric = one(262)
    if photometric not in (0, 1):
        raise FormatError(f"TIFF photometric {photometric} is not grayscale", tag="PhotometricInterpretation")
    width, height = one(256), one(257)
    offsets = tags.get(273)
    if not offsets:
        raise FormatError("TIFF is missing required tag StripOffsets", tag="StripOffsets")
    if len(offsets) != 1 or one(278, height) < height:
        raise FormatError("multi-strip TIFF is unsupported", tag="StripOffsets")
    need = width * height
    if offsets[0] + need > len(data):
        raise CorruptFileError(f"TIFF pixel data truncated: need {need} bytes at offset {offsets[0]}")
    pixels = np.frombuffer(data, dtype=np.uint8, count=need, offset=offsets[0]).reshape(height, width)
    if photometric == 0:
        pixels = 255 - pixels
    return pixels


def write_pgm(path, pixels) -> None:
    """Write an 8-bit array (or [0, 1] floats) as binary PGM."""
    arr = np.asarray(pixels)
    if arr.dtype != np.uint8:
        arr = np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write(arr.tobytes())
