"""CSV/JSON readers and writers, weight construction, report serialization."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import Dataset, Partition, Perturbation, WeightMatrix


class ParseError(ValueError):
    pass


def _read_matrix(path, header: bool = False, what: str = "file") -> np.ndarray:
    rows, width = [], None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if header and lineno == 1:
                continue
            if not row or all(not c.strip() for c in row):
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ParseError(f"{path}:{lineno}: expected {width} columns, found {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric cell in {row!r}") from None
    if not rows:
        raise ParseError(f"{path}: {what} is empty")
    arr = np.array(rows)
    if not np.all(np.isfinite(arr)):
        raise ParseError(f"{path}: non-finite value")
    return arr


def load_dataset(path, header: bool = False) -> Dataset:
    """One sample per CSV row, one feature per column; returned as d x n."""
    arr = _read_matrix(path, header, "dataset")
    if arr.shape[0] < 2:
        raise ParseError(f"{path}: need at least 2 samples, found {arr.shape[0]}")
    return Dataset(arr.T)


def load_perturbation(path, data: Dataset, header: bool = False) -> Perturbation:
    """Same layout as a dataset file; must match its shape."""
    arr = _read_matrix(path, header, "perturbation").T
    if arr.shape != data.shape:
        raise ParseError(f"{path}: perturbation has shape {arr.shape[::-1]} (rows x cols), data has {data.shape[::-1]}")
    return Perturbation(arr)


def save_matrix_csv(path, values: np.ndarray) -> None:
    """Write a d x n matrix in the one-sample-per-row layout."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for col in np.asarray(values).T:
            writer.writerow([format(float(v), ".17g") for v in col])


def load_weight_file(path, n: int) -> WeightMatrix:
    """Square CSV weight matrix. The diagonal is ignored (set to zero)."""
    arr = _read_matrix(path, False, "weight matrix")
    if arr.shape != (n, n):
        raise ParseError(f"{path}: weight matrix is {arr.shape}, expected ({n}, {n})")
    if not np.array_equal(arr, arr.T):
        raise ParseError(f"{path}: weight matrix is not symmetric")
    if np.any(arr < 0):
        raise ParseError(f"{path}: negative weight")
    np.fill_diagonal(arr, 0.0)
    return WeightMatrix(arr)


def gaussian_knn_weights(data: Dataset, k: int, phi: float) -> WeightMatrix:
    """w_ij = exp(-phi ||x_i - x_j||^2) when i is among j's k nearest neighbours or vice versa."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if phi < 0:
        raise ValueError("phi must be nonnegative")
    X = data.values
    n = data.n
    sq = np.sum((X[:, :, None] - X[:, None, :]) ** 2, axis=0)
    mask = np.zeros((n, n), dtype=bool)
    for i in range(n):
        order = [j for j in np.argsort(sq[i], kind="stable") if j != i][:k]
        mask[i, order] = True
    mask |= mask.T
    w = np.where(mask, np.exp(-phi * sq), 0.0)
    np.fill_diagonal(w, 0.0)
    return WeightMatrix(w)


@dataclass(frozen=True)
class WeightSpec:
    kind: str = "uniform"  # uniform | file | gaussian-knn
    path: str | None = None
    k: int = 5
    phi: float = 0.5

    @classmethod
    def parse(cls, text: str, k: int = 5, phi: float = 0.5) -> "WeightSpec":
        if text == "uniform":
            return cls("uniform")
        if text == "gaussian-knn":
            return cls("gaussian-knn", k=int(k), phi=float(phi))
        return cls("file", path=text)

    def as_dict(self) -> dict:
        if self.kind == "uniform":
            return {"kind": "uniform"}
        if self.kind == "file":
            return {"kind": "file", "path": self.path}
        return {"kind": "gaussian-knn", "k": self.k, "phi": self.phi}


def build_weights(spec: WeightSpec, data: Dataset) -> WeightMatrix:
    if spec.kind == "uniform":
        return WeightMatrix.uniform(data.n)
    if spec.kind == "file":
        return load_weight_file(spec.path, data.n)
    if spec.kind == "gaussian-knn":
        return gaussian_knn_weights(data, spec.k, spec.phi)
    raise ValueError(f"unknown weight spec {spec.kind!r}")


def partition_to_json(partition: Partition) -> dict:
    return {"n": partition.n, "blocks": partition.to_one_based()}


def partition_from_json(obj: dict) -> Partition:
    try:
        return Partition.from_one_based(obj["blocks"], obj["n"])
    except (KeyError, TypeError) as exc:
        raise ParseError(f"partition JSON needs 'n' and 'blocks': {exc}") from None


def load_partition(path) -> Partition:
    return partition_from_json(json.loads(Path(path).read_text()))


def dumps(obj, indent: int = 2) -> str:
    """JSON with every float written to 17 significant digits.

    Non-finite floats become the strings "inf", "-inf", "nan".
    """
    return _encode(obj, indent, 0)


def _encode(obj, indent, level) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return '"nan"'
        if math.isinf(x):
            return '"inf"' if x > 0 else '"-inf"'
        return format(x, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")
