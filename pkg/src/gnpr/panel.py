"""Rectangular panels of observations and their CSV formats.

A panel holds N series of T observations each, one row per series.  On
disk a panel is a CSV with a header row of series ids and one row per
time step (columns are series, rows are time), so the file is the
transpose of the in-memory layout.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Panel:
    """N x T matrix of finite reals plus one id string per series."""

    values: np.ndarray
    series_ids: tuple[str, ...] = field(default=())

    def __post_init__(self):
        values = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        if values.ndim != 2:
            raise ValueError(f"panel values must be 2-dimensional, got shape {values.shape}")
        n, t = values.shape
        if n < 1:
            raise ValueError("panel needs at least one series")
        if t < 2:
            raise ValueError(f"panel needs at least 2 observations per series, got {t}")
        if not np.isfinite(values).all():
            bad = np.argwhere(~np.isfinite(values))[0]
            raise ValueError(f"non-finite value at series {bad[0]}, time {bad[1]}")
        ids = tuple(self.series_ids) if self.series_ids else default_ids(n)
        if len(ids) != n:
            raise ValueError(f"got {len(ids)} series ids for {n} series")
        if len(set(ids)) != n:
            raise ValueError("series ids must be unique")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "series_ids", ids)

    @property
    def n_series(self) -> int:
        return self.values.shape[0]

    @property
    def length(self) -> int:
        return self.values.shape[1]


def default_ids(n: int) -> tuple[str, ...]:
    width = max(3, len(str(n - 1)))
    return tuple(f"s{i:0{width}d}" for i in range(n))


def _fmt(x: float) -> str:
    # repr of a Python float is the shortest string that round-trips
    return repr(float(x))


def write_panel_csv(panel: Panel, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(panel.series_ids)
        for t in range(panel.length):
            writer.writerow([_fmt(v) for v in panel.values[:, t]])


def read_panel_csv(path) -> Panel:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty panel file") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric cell") from None
    if not rows:
        raise ValueError(f"{path}: panel has no data rows")
    values = np.array(rows, dtype=np.float64).T
    return Panel(values, tuple(header))


def write_labels_csv(series_ids, labels, path) -> None:
    labels = np.asarray(labels)
    if len(series_ids) != len(labels):
        raise ValueError("series_ids and labels length mismatch")
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["series_id", "label"])
        for sid, lab in zip(series_ids, labels):
            writer.writerow([sid, int(lab)])


def read_labels_csv(path) -> tuple[tuple[str, ...], np.ndarray]:
    ids, labels = [], []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["series_id", "label"]:
            raise ValueError(f"{path}: expected header 'series_id,label'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                ids.append(row[0])
                labels.append(int(row[1]))
            except (IndexError, ValueError):
                raise ValueError(f"{path}:{lineno}: malformed label row") from None
    return tuple(ids), np.array(labels, dtype=np.int64)
