"""Synthetic handwriting corpus for end-to-end checks.

Every writer is a fixed generator. A mixture of sinusoids modulates stroke
intensity along the line, and stroke density, length, slant and weight are
also fixed per writer. Each page draws fresh stroke positions from that
generator and adds them to a shared blank exam form with its own scanner
noise. Pages are dark-field: ink is bright and the form is additive, so
spectral subtraction of the blank sheet applies directly.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .loaders import write_pgm

PAGE_ROWS = 128
PAGE_COLS = 256
LINE_PITCH = 16
SCANNER_NOISE = 0.01


@dataclass(frozen=True)
class WriterStyle:
    frequencies: tuple[float, ...]  # cycles per pixel along a scanline
    amplitudes: tuple[float, ...]
    phases: tuple[float, ...]
    strokes_per_line: int
    stroke_length: float
    slant: float  # columns moved per row
    thickness: int
    ink: float

    @classmethod
    def random(cls, rng: np.random.Generator) -> "WriterStyle":
        n = int(rng.integers(2, 4))
        return cls(
            frequencies=tuple(float(f) for f in rng.uniform(0.02, 0.45, n)),
            amplitudes=tuple(float(a) for a in rng.uniform(0.2, 0.5, n)),
            phases=tuple(float(p) for p in rng.uniform(0, 2 * np.pi, n)),
            strokes_per_line=int(rng.integers(8, 40)),
            stroke_length=float(rng.uniform(3, 14)),
            slant=float(rng.uniform(-0.8, 0.8)),
            thickness=int(rng.integers(1, 3)),
            ink=float(rng.uniform(0.35, 0.6)),
        )

    def modulation(self, cols: int) -> np.ndarray:
        x = np.arange(cols)
        m = np.ones(cols)
        for f, a, p in zip(self.frequencies, self.amplitudes, self.phases):
            m += a * np.sin(2 * np.pi * f * x + p)
        return np.clip(m, 0.0, None)


def blank_form(rows: int = PAGE_ROWS, cols: int = PAGE_COLS) -> np.ndarray:
    """The printed exam sheet every page shares: paper tone, ruled lines, margin."""
    form = np.full((rows, cols), 0.08)
    form[LINE_PITCH - 2 :: LINE_PITCH, :] += 0.25
    form[:, 20:22] += 0.2
    form[:, ::32] += 0.05
    return form


def render_ink(style: WriterStyle, rng: np.random.Generator, rows: int = PAGE_ROWS, cols: int = PAGE_COLS) -> np.ndarray:
    ink = np.zeros((rows, cols))
    mod = style.modulation(cols)
    for top in range(2, rows - LINE_PITCH + 1, LINE_PITCH):
        for _ in range(style.strokes_per_line):
            length = max(2, int(round(rng.normal(style.stroke_length, 2.0))))
            r0 = top + int(rng.integers(0, LINE_PITCH - 6))
            c0 = int(rng.integers(24, cols - 16))
            horizontal = rng.random() < 0.5
            for t in range(length):
                if horizontal:
                    r, c = r0, c0 + t
                else:
                    r, c = r0 + t // 2, int(round(c0 + style.slant * t / 2))
                if 0 <= r < rows and 0 <= c < cols:
                    for w in range(style.thickness):
                        cc = min(c + w, cols - 1)
                        ink[r, cc] = max(ink[r, cc], style.ink * mod[cc] / mod.max())
    return ink


def render_page(style: WriterStyle, rng: np.random.Generator, form: np.ndarray) -> np.ndarray:
    page = form + render_ink(style, rng, *form.shape)
    page += rng.normal(0.0, SCANNER_NOISE, form.shape)
    return np.clip(page, 0.0, 1.0)


def make_corpus(
    root,
    writers: int = 10,
    train_pages: int = 2,
    test_pages: int = 1,
    seed: int = 2008,
    rows: int = PAGE_ROWS,
    cols: int = PAGE_COLS,
) -> Path:
    """Write PGM pages, a blank sheet and ``manifest.csv`` under ``root``.

    Returns the manifest path. Subject ids are 1..writers.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    form = blank_form(rows, cols)
    write_pgm(root / "blank.pgm", np.clip(form + rng.normal(0, SCANNER_NOISE, form.shape), 0, 1))
    entries = []
    for w in range(1, writers + 1):
        style = WriterStyle.random(rng)
        for i in range(train_pages + test_pages):
            split = "TRAIN" if i < train_pages else "TEST"
            name = f"w{w:02d}_p{i}.pgm"
            write_pgm(root / name, render_page(style, rng, form))
            entries.append((name, w, split))
    manifest = root / "manifest.csv"
    with open(manifest, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["path", "subject", "split"])
        out.writerows(entries)
    return manifest


def make_large_page(path, size_bytes: int = 1 << 20, seed: int = 0) -> None:
    """One ~size_bytes square PGM page, used for throughput checks."""
    side = int(np.sqrt(size_bytes))
    rng = np.random.default_rng(seed)
    page = render_page(WriterStyle.random(rng), rng, blank_form(side, side))
    write_pgm(os.fspath(path), page)
