"""Reading counts, model and event files.

All files are UTF-8, comma-separated, with a header row. Cell ids are opaque
strings (``"007"`` stays ``"007"``).
"""
from __future__ import annotations

import bisect
import csv
import datetime as dt
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import CellModel, CountVector, ValidationError, WeightVector


class IngestError(ValidationError):
    pass


@dataclass(frozen=True)
class Dataset:
    cell_ids: tuple[str, ...]
    model: CellModel
    counts: CountVector
    weights: Optional[WeightVector] = None
    label: str = "all"


@dataclass(frozen=True)
class PeriodRule:
    """Half-open periods ``[b_i, b_{i+1})`` between consecutive boundary dates."""

    boundaries: tuple[dt.date, ...]

    def __post_init__(self) -> None:
        b = tuple(self.boundaries)
        object.__setattr__(self, "boundaries", b)
        if len(b) < 2:
            raise IngestError("a period rule needs at least two boundary dates")
        if any(x >= y for x, y in zip(b, b[1:])):
            raise IngestError("period boundaries must be strictly increasing")

    @classmethod
    def parse(cls, values: Sequence[str]) -> "PeriodRule":
        try:
            return cls(tuple(dt.date.fromisoformat(v.strip()) for v in values))
        except ValueError as exc:
            raise IngestError(f"bad boundary date: {exc}") from None

    @property
    def count(self) -> int:
        return len(self.boundaries) - 1

    def labels(self) -> list[str]:
        b = self.boundaries
        return [f"{b[i].isoformat()}..{(b[i + 1] - dt.timedelta(days=1)).isoformat()}" for i in range(self.count)]

    def index(self, day: dt.date) -> int:
        i = bisect.bisect_right(self.boundaries, day) - 1
        if i < 0 or i >= self.count:
            raise IngestError(f"date {day.isoformat()} falls outside all periods")
        return i


def _rows(path: Path, required: Sequence[str]) -> tuple[list[str], list[tuple[int, dict]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise IngestError(f"{path}: file is empty")
        header = [h.strip() for h in reader.fieldnames]
        reader.fieldnames = header
        missing = [c for c in required if c not in header]
        if missing:
            raise IngestError(f"{path}: missing column(s) {', '.join(missing)}")
        rows = [(reader.line_num, row) for row in reader]
    if not rows:
        raise IngestError(f"{path}: no data rows")
    return header, rows


def _number(path: Path, line: int, name: str, text: Optional[str]) -> float:
    try:
        v = float(text)
    except (TypeError, ValueError):
        raise IngestError(f"{path}:{line}: {name} {text!r} is not a number") from None
    if not math.isfinite(v):
        raise IngestError(f"{path}:{line}: {name} must be finite")
    return v


def _count(path: Path, line: int, text: Optional[str]) -> int:
    v = _number(path, line, "count", text)
    if v != int(v):
        raise IngestError(f"{path}:{line}: count {text!r} is not an integer")
    if v < 0:
        raise IngestError(f"{path}:{line}: negative count {text!r}")
    return int(v)


def _unique(path: Path, line: int, cid: str, seen: dict) -> None:
    if cid in seen:
        raise IngestError(f"{path}:{line}: duplicate cell_id {cid!r} (first seen on line {seen[cid]})")
    seen[cid] = line


def read_model(path) -> tuple[tuple[str, ...], np.ndarray, Optional[np.ndarray]]:
    """Cell ids, probabilities and (if a ``weight`` column exists) weights."""
    path = Path(path)
    header, rows = _rows(path, ["cell_id", "p"])
    has_w = "weight" in header
    seen: dict[str, int] = {}
    ids, probs, weights = [], [], []
    for line, row in rows:
        cid = (row["cell_id"] or "").strip()
        _unique(path, line, cid, seen)
        ids.append(cid)
        probs.append(_number(path, line, "p", row["p"]))
        if has_w:
            weights.append(_number(path, line, "weight", row["weight"]))
    return tuple(ids), np.array(probs), (np.array(weights) if has_w else None)


def _model(ids, probs, weights, path) -> tuple[CellModel, Optional[WeightVector]]:
    try:
        model = CellModel(probs)
        w = WeightVector(weights) if weights is not None else None
    except ValidationError as exc:
        raise IngestError(f"{path}: {exc}") from None
    return model, w


def ingest_counts(path, model_path=None, *, equiprobable: bool = False) -> Dataset:
    """Read a counts file and pair it with a model.

    The model comes from ``model_path`` if given, else from ``p``/``weight``
    columns in the counts file itself, else (with ``equiprobable=True``) is
    uniform over the listed cells.
    """
    path = Path(path)
    header, rows = _rows(path, ["cell_id", "count"])
    seen: dict[str, int] = {}
    observed: dict[str, int] = {}
    for line, row in rows:
        cid = (row["cell_id"] or "").strip()
        _unique(path, line, cid, seen)
        observed[cid] = _count(path, line, row["count"])

    if model_path is not None:
        ids, probs, weights = read_model(model_path)
        unknown = [c for c in observed if c not in set(ids)]
        if unknown:
            raise IngestError(f"{path}: cell(s) not in the model: {', '.join(unknown[:5])}")
        src = model_path
    elif "p" in header:
        ids = tuple(observed)
        probs = np.array([_number(path, ln, "p", r["p"]) for ln, r in rows])
        weights = (
            np.array([_number(path, ln, "weight", r["weight"]) for ln, r in rows]) if "weight" in header else None
        )
        src = path
    elif equiprobable:
        ids = tuple(observed)
        probs = np.full(len(ids), 1.0 / len(ids))
        weights = None
        src = path
    else:
        raise IngestError(f"{path}: no model given (add a p column, a model file, or use equiprobable cells)")

    model, w = _model(ids, probs, weights, src)
    counts = CountVector([observed.get(c, 0) for c in ids])
    if counts.n == 0:
        raise IngestError(f"{path}: total count is zero")
    return Dataset(ids, model, counts, w)


def model_dataset(ids, probs, weights, source) -> Dataset:
    """A model (and weights) with an all-zero count vector, for event tallying and diagnostics."""
    model, w = _model(ids, probs, weights, source)
    return Dataset(tuple(ids), model, CountVector(np.zeros(len(ids), dtype=np.int64)), w)


def read_cell_list(path) -> list[str]:
    path = Path(path)
    _, rows = _rows(path, ["cell_id"])
    return [(row["cell_id"] or "").strip() for _, row in rows]


def read_mapping(path) -> dict[str, str]:
    path = Path(path)
    _, rows = _rows(path, ["label", "cell_id"])
    out: dict[str, str] = {}
    for line, row in rows:
        label = (row["label"] or "").strip()
        if label in out:
            raise IngestError(f"{path}:{line}: duplicate label {label!r}")
        out[label] = (row["cell_id"] or "").strip()
    return out


def ingest_events(
    path,
    cell_ids: Sequence[str],
    mapping: Optional[Mapping[str, str]] = None,
    periods: Optional[PeriodRule] = None,
) -> list[tuple[str, CountVector]]:
    """Tally categorical events into cells, one count vector per period.

    ``mapping`` sends raw labels to cell ids; without it labels are cell ids.
    """
    path = Path(path)
    required = ["label"] + (["date"] if periods is not None else [])
    _, rows = _rows(path, required)
    position = {c: i for i, c in enumerate(cell_ids)}
    n_periods = periods.count if periods is not None else 1
    tallies = np.zeros((n_periods, len(cell_ids)), dtype=np.int64)
    for line, row in rows:
        label = (row["label"] or "").strip()
        cid = mapping.get(label) if mapping is not None else label
        if cid is None or cid not in position:
            raise IngestError(f"{path}:{line}: label {label!r} does not map to a known cell")
        slot = 0
        if periods is not None:
            try:
                day = dt.date.fromisoformat((row["date"] or "").strip()[:10])
            except ValueError:
                raise IngestError(f"{path}:{line}: bad date {row['date']!r}") from None
            try:
                slot = periods.index(day)
            except IngestError as exc:
                raise IngestError(f"{path}:{line}: {exc}") from None
        tallies[slot, position[cid]] += 1
    names = periods.labels() if periods is not None else ["all"]
    return [(name, CountVector(t)) for name, t in zip(names, tallies)]


def digit_cells(width: int) -> tuple[str, ...]:
    """Zero-padded ids ``"0".."9"``, ``"00".."99"``, ... for digit-string outcomes."""
    if width < 1:
        raise IngestError("width must be >= 1")
    return tuple(str(i).zfill(width) for i in range(10**width))
