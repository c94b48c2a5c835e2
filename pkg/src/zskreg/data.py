"""Dataset containers, target bookkeeping, and CSV ingestion.

A zero-shot regression dataset couples per-instance features and labels with
a per-target side-information table.  Every row carries a target id (an
opaque string); the side-information table maps each id to a fixed-width
real vector.  Row order is preserved and significant: deterministic fold
construction depends on it.

All numeric payloads are float64 and are frozen (read-only) after
construction, so datasets can be shared freely across threads.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "DataError",
    "SideInfoTable",
    "ZeroShotDataset",
    "TargetSlice",
    "slice_by_target",
    "load_dataset",
    "save_dataset",
]

# Exact float64 round-trip; comfortably above the 12 significant digits the
# CSV contract promises.
_FLOAT_FMT = "%.17g"


class DataError(ValueError):
    """Malformed dataset, schema mismatch, or dimension mismatch."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


class SideInfoTable:
    """Per-target side-information vectors keyed by target id.

    Insertion order is preserved; it fixes the target order used by the
    splitters and the per-target learners.
    """

    def __init__(self, entries: Mapping[str, Sequence[float]] | Iterable[tuple[str, Sequence[float]]]):
        items = list(entries.items()) if isinstance(entries, Mapping) else list(entries)
        if not items:
            raise DataError("side-information table is empty")
        ids = [str(t) for t, _ in items]
        if len(set(ids)) != len(ids):
            raise DataError("duplicate target id in side-information table")
        rows = []
        width = None
        for t, vec in items:
            v = np.asarray(vec, dtype=np.float64).ravel()
            if v.size < 1:
                raise DataError(f"empty side-information vector for target {t!r}")
            if width is None:
                width = v.size
            elif v.size != width:
                raise DataError(
                    f"side-information width mismatch for target {t!r}: "
                    f"expected {width}, got {v.size}"
                )
            rows.append(v)
        matrix = np.vstack(rows)
        if not np.all(np.isfinite(matrix)):
            raise DataError("non-finite value in side-information table")
        self._ids: tuple[str, ...] = tuple(ids)
        self._matrix = _freeze(matrix)
        self._index = {t: i for i, t in enumerate(ids)}

    @property
    def target_ids(self) -> tuple[str, ...]:
        return self._ids

    @property
    def matrix(self) -> np.ndarray:
        """(m_targets, a_s) matrix in insertion order."""
        return self._matrix

    @property
    def a_s(self) -> int:
        return self._matrix.shape[1]

    def vector(self, target_id: str) -> np.ndarray:
        try:
            return self._matrix[self._index[target_id]]
        except KeyError:
            raise DataError(f"unknown target id {target_id!r}") from None

    def restrict(self, target_ids: Sequence[str]) -> "SideInfoTable":
        """Sub-table holding only `target_ids`, in the given order."""
        return SideInfoTable([(t, self.vector(t)) for t in target_ids])

    def __contains__(self, target_id: str) -> bool:
        return target_id in self._index

    def __len__(self) -> int:
        return len(self._ids)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SideInfoTable):
            return NotImplemented
        return self._ids == other._ids and np.array_equal(self._matrix, other._matrix)

    def __repr__(self) -> str:
        return f"SideInfoTable({len(self)} targets, a_s={self.a_s})"


@dataclass(frozen=True)
class TargetSlice:
    """Row indices of the instances belonging to one target."""

    target_id: str
    rows: np.ndarray

    def __len__(self) -> int:
        return len(self.rows)


class ZeroShotDataset:
    """Instance features and labels plus the side-information table.

    Invariants enforced at construction: every row's target id appears in
    the side-information table, all values are finite, and shapes agree.
    """

    def __init__(
        self,
        features: np.ndarray,
        target_ids: Sequence[str],
        labels: np.ndarray,
        side_info: SideInfoTable,
        name: str = "dataset",
    ):
        X = np.asarray(features, dtype=np.float64)
        y = np.asarray(labels, dtype=np.float64).ravel()
        if X.ndim != 2:
            raise DataError(f"features must be a 2-D matrix, got ndim={X.ndim}")
        n, a_x = X.shape
        if n < 1 or a_x < 1:
            raise DataError(f"features matrix must be non-empty, got shape {X.shape}")
        if y.shape[0] != n:
            raise DataError(f"labels length {y.shape[0]} != number of rows {n}")
        ids = tuple(str(t) for t in target_ids)
        if len(ids) != n:
            raise DataError(f"target column length {len(ids)} != number of rows {n}")
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
            raise DataError("non-finite value in features or labels")
        for t in ids:
            if t not in side_info:
                raise DataError(f"unknown target id {t!r} (not in side-information table)")
        self.features = _freeze(X)
        self.labels = _freeze(y)
        self.target_ids = ids
        self.side_info = side_info
        self.name = name
        # row -> side-info row index, precomputed once
        pos = {t: i for i, t in enumerate(side_info.target_ids)}
        idx = np.array([pos[t] for t in ids], dtype=np.intp)
        idx.setflags(write=False)
        self._row_target_idx = idx

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def a_x(self) -> int:
        return self.features.shape[1]

    @property
    def a_s(self) -> int:
        return self.side_info.a_s

    def side_rows(self) -> np.ndarray:
        """(n_rows, a_s) matrix: each row's target side-information vector."""
        return self.side_info.matrix[self._row_target_idx]

    def take(self, rows: Sequence[int], side_info: SideInfoTable | None = None, name: str | None = None) -> "ZeroShotDataset":
        """Row subset as a new dataset, optionally with a restricted side table."""
        rows = np.asarray(rows, dtype=np.intp)
        ids = [self.target_ids[i] for i in rows]
        return ZeroShotDataset(
            self.features[rows],
            ids,
            self.labels[rows],
            side_info if side_info is not None else self.side_info,
            name=name if name is not None else self.name,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, ZeroShotDataset):
            return NotImplemented
        return (
            self.target_ids == other.target_ids
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
            and self.side_info == other.side_info
        )

    def __repr__(self) -> str:
        return (
            f"ZeroShotDataset({self.name!r}, n={self.n_rows}, a_x={self.a_x}, "
            f"targets={len(self.side_info)}, a_s={self.a_s})"
        )


def slice_by_target(ds: ZeroShotDataset) -> list[TargetSlice]:
    """Partition row indices by target, in first-appearance order."""
    order: list[str] = []
    groups: dict[str, list[int]] = {}
    for i, t in enumerate(ds.target_ids):
        if t not in groups:
            groups[t] = []
            order.append(t)
        groups[t].append(i)
    out = []
    for t in order:
        rows = np.array(groups[t], dtype=np.intp)
        rows.setflags(write=False)
        out.append(TargetSlice(t, rows))
    return out


def _parse_float(cell: str, row: int, column: str) -> float:
    try:
        return float(cell)
    except ValueError:
        raise DataError(
            f"non-numeric value {cell!r} at data row {row}, column {column!r}"
        ) from None


def _read_rows(path: Path) -> tuple[list[str], list[list[str]]]:
    if not path.exists():
        raise DataError(f"missing file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"empty CSV file: {path}") from None
        return [h.strip() for h in header], [row for row in reader if row]


def _check_header(header: list[str], prefix: str, path: Path, trailing: str | None) -> int:
    """Validate `target,<prefix>1..<prefix>k[,trailing]`; returns k."""
    expected_tail = 1 if trailing else 0
    k = len(header) - 1 - expected_tail
    want = ["target"] + [f"{prefix}{i}" for i in range(1, k + 1)]
    if trailing:
        want.append(trailing)
    if k < 1 or header != want:
        raise DataError(
            f"schema mismatch in {path}: expected header "
            f"'target,{prefix}1,...,{prefix}{{k}}{',' + trailing if trailing else ''}', got {','.join(header)!r}"
        )
    return k


def load_dataset(instances_path, sideinfo_path, name: str | None = None) -> ZeroShotDataset:
    """Load a dataset from the instance and side-information CSV pair.

    Instance CSV header: ``target,x1,...,x{a_x},y``;
    side-information CSV header: ``target,s1,...,s{a_s}``.
    Row order is preserved.
    """
    instances_path = Path(instances_path)
    sideinfo_path = Path(sideinfo_path)

    s_header, s_rows = _read_rows(sideinfo_path)
    a_s = _check_header(s_header, "s", sideinfo_path, trailing=None)
    entries = []
    for r, row in enumerate(s_rows, start=1):
        if len(row) != a_s + 1:
            raise DataError(f"schema mismatch in {sideinfo_path}: row {r} has {len(row)} cells, expected {a_s + 1}")
        entries.append(
            (row[0], [_parse_float(c, r, s_header[j + 1]) for j, c in enumerate(row[1:])])
        )
    side = SideInfoTable(entries)

    x_header, x_rows = _read_rows(instances_path)
    a_x = _check_header(x_header, "x", instances_path, trailing="y")
    feats = np.empty((len(x_rows), a_x), dtype=np.float64)
    labels = np.empty(len(x_rows), dtype=np.float64)
    ids = []
    if not x_rows:
        raise DataError(f"no data rows in {instances_path}")
    for r, row in enumerate(x_rows, start=1):
        if len(row) != a_x + 2:
            raise DataError(f"schema mismatch in {instances_path}: row {r} has {len(row)} cells, expected {a_x + 2}")
        ids.append(row[0])
        for j in range(a_x):
            feats[r - 1, j] = _parse_float(row[1 + j], r, x_header[1 + j])
        labels[r - 1] = _parse_float(row[-1], r, "y")

    if name is None:
        name = instances_path.parent.name or instances_path.stem
    return ZeroShotDataset(feats, ids, labels, side, name=name)


def save_dataset(ds: ZeroShotDataset, directory, meta: dict | None = None) -> Path:
    """Write ``instances.csv``, ``sideinfo.csv`` and optionally ``meta.json``.

    Values are serialized with 17 significant digits so that
    ``load_dataset(save_dataset(ds)) == ds`` exactly.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    inst = directory / "instances.csv"
    with open(inst, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["target"] + [f"x{i}" for i in range(1, ds.a_x + 1)] + ["y"])
        for i in range(ds.n_rows):
            writer.writerow(
                [ds.target_ids[i]]
                + [_FLOAT_FMT % v for v in ds.features[i]]
                + [_FLOAT_FMT % ds.labels[i]]
            )

    side = directory / "sideinfo.csv"
    with open(side, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["target"] + [f"s{i}" for i in range(1, ds.a_s + 1)])
        for t in ds.side_info.target_ids:
            writer.writerow([t] + [_FLOAT_FMT % v for v in ds.side_info.vector(t)])

    if meta is not None:
        with open(directory / "meta.json", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return directory
