"""Historical-study datasets and their CSV/JSON forms.

Three endpoint families are supported, each with fixed columns:

* binomial: study, r, n        (responders out of subjects)
* normal:   study, y, se       (estimate and its standard error)
* poisson:  study, count, exposure
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

FAMILY_COLUMNS = {
    "binomial": ("r", "n"),
    "normal": ("y", "se"),
    "poisson": ("count", "exposure"),
}


@dataclass(frozen=True, eq=False)
class StudyDataset:
    """Immutable per-study endpoint data for one family."""

    family: str
    studies: tuple
    values: dict

    def __post_init__(self):
        if self.family not in FAMILY_COLUMNS:
            raise ValueError(f"unknown dataset family: {self.family!r}")
        cols = FAMILY_COLUMNS[self.family]
        if set(self.values) != set(cols):
            raise ValueError(f"{self.family} data needs columns {cols}")
        studies = tuple(str(s) for s in self.studies)
        n = len(studies)
        if n == 0:
            raise ValueError("dataset has no studies")
        if len(set(studies)) != n:
            raise ValueError("study labels must be unique")
        vals = {}
        for c in cols:
            arr = np.asarray(self.values[c], dtype=float)
            if arr.shape != (n,):
                raise ValueError(f"column {c!r} must have one value per study")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"column {c!r} contains non-finite values")
            arr.setflags(write=False)
            vals[c] = arr
        object.__setattr__(self, "studies", studies)
        object.__setattr__(self, "values", vals)
        self._validate()

    def _validate(self):
        v = self.values
        if self.family == "binomial":
            r, n = v["r"], v["n"]
            if np.any(n < 1) or np.any(n != np.round(n)):
                raise ValueError("n must be a positive integer")
            if np.any(r < 0) or np.any(r > n) or np.any(r != np.round(r)):
                raise ValueError("r must be an integer in [0, n]")
        elif self.family == "normal":
            if np.any(v["se"] <= 0):
                raise ValueError("se must be > 0")
        else:
            c, e = v["count"], v["exposure"]
            if np.any(c < 0) or np.any(c != np.round(c)):
                raise ValueError("count must be a non-negative integer")
            if np.any(e <= 0):
                raise ValueError("exposure must be > 0")

    def __len__(self) -> int:
        return len(self.studies)

    def column(self, name: str) -> np.ndarray:
        return self.values[name]

    def totals(self) -> dict:
        """Column sums, reported as-is (used to surface source discrepancies)."""
        out = {"studies": len(self)}
        for c in FAMILY_COLUMNS[self.family]:
            total = float(self.values[c].sum())
            out[f"sum_{c}"] = int(total) if total == int(total) else total
        return out

    def to_dict(self) -> dict:
        cols = FAMILY_COLUMNS[self.family]
        rows = [
            {"study": s, **{c: _plain(self.values[c][i]) for c in cols}}
            for i, s in enumerate(self.studies)
        ]
        return {"family": self.family, "rows": rows, "totals": self.totals()}


def _plain(x: float):
    return int(x) if float(x) == int(x) else float(x)


def dataset_from_dict(payload: dict) -> StudyDataset:
    if not isinstance(payload, dict):
        raise ValueError("dataset payload must be a JSON object")
    family = payload.get("family")
    rows = payload.get("rows")
    if family not in FAMILY_COLUMNS:
        raise ValueError(f"dataset payload needs a family in {sorted(FAMILY_COLUMNS)}")
    if not isinstance(rows, list) or not rows:
        raise ValueError("dataset payload needs a non-empty 'rows' list")
    cols = FAMILY_COLUMNS[family]
    studies, values = [], {c: [] for c in cols}
    for i, row in enumerate(rows, start=1):
        if not isinstance(row, dict) or "study" not in row:
            raise ValueError(f"row {i}: each row needs a 'study' label")
        missing = [c for c in cols if c not in row]
        if missing:
            raise ValueError(f"row {i}: missing columns {missing}")
        studies.append(row["study"])
        for c in cols:
            values[c].append(row[c])
    return StudyDataset(family, tuple(studies), values)


def read_csv(source, family: str) -> StudyDataset:
    """Read study data from a CSV path or file-like object.

    The header must contain exactly 'study' plus the family's columns.
    Errors carry 1-based data row numbers.
    """
    if family not in FAMILY_COLUMNS:
        raise ValueError(f"unknown dataset family: {family!r}")
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    reader = csv.DictReader(io.StringIO(text))
    cols = FAMILY_COLUMNS[family]
    expected = {"study", *cols}
    if reader.fieldnames is None:
        raise ValueError("CSV file is empty")
    header = {h.strip() for h in reader.fieldnames}
    if header != expected:
        raise ValueError(
            f"CSV header must be exactly {sorted(expected)} for {family} data, "
            f"got {sorted(header)}"
        )
    studies, values = [], {c: [] for c in cols}
    for i, row in enumerate(reader, start=1):
        label = (row.get("study") or "").strip()
        if not label:
            raise ValueError(f"row {i}: empty study label")
        studies.append(label)
        for c in cols:
            raw = (row.get(c) or "").strip()
            try:
                values[c].append(float(raw))
            except ValueError:
                raise ValueError(f"row {i}: column {c!r} has non-numeric value {raw!r}") from None
    try:
        return StudyDataset(family, tuple(studies), values)
    except ValueError as exc:
        raise ValueError(f"invalid {family} data: {exc}") from None


def write_csv(dataset: StudyDataset, path) -> None:
    cols = FAMILY_COLUMNS[dataset.family]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["study", *cols])
        for i, s in enumerate(dataset.studies):
            writer.writerow([s, *(_plain(dataset.values[c][i]) for c in cols)])
