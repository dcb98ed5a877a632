"""Sampled measurement records and their CSV form.

CSV files have exactly one header line with unit-suffixed column names.
Floats are written with ``repr`` so a write/read round trip is lossless.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class Sweep2D:
    """Named, equal-length columns plus free-form metadata.

    Used both for 1-D traces (one axis column, one or more value columns)
    and long-format 2-D sweeps.
    """

    def __init__(self, columns: dict, meta: dict | None = None):
        cols = {k: np.asarray(v) for k, v in columns.items()}
        lengths = {len(v) for v in cols.values()}
        if len(lengths) > 1:
            raise ValueError(f"column lengths differ: { {k: len(v) for k, v in cols.items()} }")
        self.columns = cols
        self.meta = dict(meta or {})

    def __getitem__(self, name):
        return self.columns[name]

    def __contains__(self, name):
        return name in self.columns

    def __len__(self):
        return len(next(iter(self.columns.values()))) if self.columns else 0

    @property
    def names(self):
        return list(self.columns)

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.names)
        for row in zip(*self.columns.values()):
            w.writerow([_fmt(x) for x in row])
        return buf.getvalue()

    def to_csv(self, path):
        Path(path).write_text(self.to_csv_text())

    @classmethod
    def from_csv(cls, path) -> "Sweep2D":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise ValueError(f"{path}: empty CSV")
        header, body = rows[0], rows[1:]
        try:
            data = np.array([[float(x) for x in r] for r in body if r], dtype=float)
        except ValueError as exc:
            raise ValueError(f"{path}: non-numeric CSV content ({exc})") from None
        if data.size == 0:
            data = np.empty((0, len(header)))
        return cls({name: data[:, i] for i, name in enumerate(header)})


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


# a 1-D record is just a two-column Sweep2D
Trace = Sweep2D


@dataclass
class ComplexTrace:
    """Complex S21 vs frequency (GHz)."""

    f: np.ndarray
    s21: np.ndarray
    variance: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=float)
        self.s21 = np.asarray(self.s21, dtype=complex)
        if self.f.shape != self.s21.shape:
            raise ValueError("frequency and S21 arrays differ in length")
        if self.f.size > 1 and np.any(np.diff(self.f) <= 0):
            raise ValueError("frequency axis must be strictly increasing")

    def to_sweep(self) -> Sweep2D:
        return Sweep2D({"f_GHz": self.f, "re": self.s21.real, "im": self.s21.imag}, self.meta)

    def to_csv(self, path):
        self.to_sweep().to_csv(path)

    @classmethod
    def from_csv(cls, path) -> "ComplexTrace":
        sw = Sweep2D.from_csv(path)
        return cls(sw["f_GHz"], sw["re"] + 1j * sw["im"])
