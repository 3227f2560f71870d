"""Shared value types: datasets, weights, partitions, solver settings, perturbations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class DimensionError(ValueError):
    """Array shapes do not agree."""


class PartitionError(ValueError):
    """Blocks overlap, leave gaps, or contain an empty block."""


def _frozen_array(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be a 2-D matrix, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Dataset:
    """A d x n data matrix; column i is the sample x_i.

    A 1-D input is read as a single feature row, so ``Dataset([0, 2, 10, 14])``
    has d=1, n=4.
    """

    values: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.values, "dataset")
        if arr.shape[0] < 1 or arr.shape[1] < 2:
            raise DimensionError(f"dataset needs d >= 1 and n >= 2, got shape {arr.shape}")
        object.__setattr__(self, "values", arr)

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def __eq__(self, other):
        return isinstance(other, Dataset) and np.array_equal(self.values, other.values)


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """Symmetric, nonnegative pairwise weights with zero diagonal."""

    w: np.ndarray

    def __post_init__(self):
        arr = np.array(self.w, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionError(f"weight matrix must be square, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("weight matrix contains non-finite entries")
        if np.any(arr < 0):
            raise ValueError("weights must be nonnegative")
        if not np.array_equal(arr, arr.T):
            raise ValueError("weight matrix must be symmetric")
        if np.any(np.diag(arr) != 0):
            raise ValueError("weight matrix must have zero diagonal")
        arr.setflags(write=False)
        object.__setattr__(self, "w", arr)

    @property
    def n(self) -> int:
        return self.w.shape[0]

    @classmethod
    def uniform(cls, n: int, value: float = 1.0) -> "WeightMatrix":
        """All off-diagonal weights equal to ``value`` (the all-ones E_n case)."""
        w = np.full((n, n), float(value))
        np.fill_diagonal(w, 0.0)
        return cls(w)

    def edges(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Index arrays (i, j) with i < j and w_ij > 0, plus the weights."""
        i, j = np.nonzero(np.triu(self.w, k=1))
        return i, j, self.w[i, j]


@dataclass(frozen=True)
class Partition:
    """Disjoint, covering blocks over {0..n-1}, stored in canonical order.

    Indices are 0-based internally; JSON and CLI use 1-based indices.
    Construction always canonicalizes, so ``==`` compares partitions
    independently of labels and block order.
    """

    blocks: tuple[tuple[int, ...], ...]
    n: int

    def __init__(self, blocks: Iterable[Iterable[int]], n: int | None = None):
        canon, size = _canonical_blocks(blocks, n)
        object.__setattr__(self, "blocks", canon)
        object.__setattr__(self, "n", size)

    @property
    def k(self) -> int:
        return len(self.blocks)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.blocks)

    def labels(self) -> np.ndarray:
        """Block index of every point."""
        lab = np.empty(self.n, dtype=int)
        for a, block in enumerate(self.blocks):
            lab[list(block)] = a
        return lab

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "Partition":
        groups: dict = {}
        for i, lab in enumerate(labels):
            groups.setdefault(lab, []).append(i)
        return cls(groups.values(), len(labels))

    def to_one_based(self) -> list[list[int]]:
        return [[i + 1 for i in b] for b in self.blocks]

    @classmethod
    def from_one_based(cls, blocks: Iterable[Iterable[int]], n: int | None = None) -> "Partition":
        return cls([[int(i) - 1 for i in b] for b in blocks], n)

    def __repr__(self):
        return f"Partition({self.to_one_based()}, n={self.n})"


def _canonical_blocks(blocks, n):
    canon = [tuple(sorted(int(i) for i in b)) for b in blocks]
    if any(len(b) == 0 for b in canon):
        raise PartitionError("empty block")
    members = [i for b in canon for i in b]
    if len(set(members)) != len(members):
        raise PartitionError("blocks overlap")
    size = len(members) if n is None else int(n)
    if sorted(members) != list(range(size)):
        raise PartitionError(f"blocks do not cover exactly {{0..{size - 1}}}")
    canon.sort(key=lambda b: b[0])
    return tuple(canon), size


def canonicalize(partition: Partition | Iterable[Iterable[int]], n: int | None = None) -> Partition:
    """Sort members within blocks and blocks by their smallest member."""
    if isinstance(partition, Partition):
        return Partition(partition.blocks, partition.n)
    return Partition(partition, n)


@dataclass(frozen=True)
class NormParam:
    """Penalty norm index p in {1, 2, inf} and its conjugate q."""

    p: float = 2.0

    def __post_init__(self):
        p = float(self.p)
        if p not in (1.0, 2.0, math.inf):
            raise ValueError(f"p must be 1, 2 or inf, got {self.p}")
        object.__setattr__(self, "p", p)

    @property
    def q(self) -> float:
        return {1.0: math.inf, 2.0: 2.0, math.inf: 1.0}[self.p]


@dataclass(frozen=True)
class SolverConfig:
    gamma: float
    norm: NormParam = field(default_factory=NormParam)
    kkt_tol: float = 1e-8
    fusion_tol: float = 1e-6
    max_iter: int = 100_000
    admm_rho: float = 1.0

    def __post_init__(self):
        if not self.gamma >= 0 or not math.isfinite(self.gamma):
            raise ValueError(f"gamma must be finite and >= 0, got {self.gamma}")
        for name in ("kkt_tol", "fusion_tol", "admm_rho"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be a positive integer")


@dataclass(frozen=True, eq=False)
class Perturbation:
    """Additive noise, same shape as the dataset it perturbs.

    ``support`` optionally lists the (row, col) entries allowed to be nonzero.
    """

    eps: np.ndarray
    support: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "eps", _frozen_array(self.eps, "perturbation"))
        if self.support is not None:
            object.__setattr__(self, "support", tuple((int(r), int(c)) for r, c in self.support))

    @classmethod
    def zeros(cls, shape) -> "Perturbation":
        return cls(np.zeros(shape))

    @classmethod
    def single(cls, shape, row: int, col: int, value: float) -> "Perturbation":
        eps = np.zeros(shape)
        eps[row, col] = value
        return cls(eps, ((row, col),))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.eps))


def apply_perturbation(data: Dataset, eps: Perturbation) -> Dataset:
    """Return X + eps entrywise."""
    if data.shape != eps.eps.shape:
        raise DimensionError(f"perturbation shape {eps.eps.shape} does not match data {data.shape}")
    return Dataset(data.values + eps.eps)


@dataclass(frozen=True, eq=False)
class ClusterSolution:
    Y: np.ndarray
    partition: Partition
    cluster_means: tuple[np.ndarray, ...]
    kkt_residual: float
    iterations: int

    def means_per_point(self) -> np.ndarray:
        """d x n matrix whose column i is the mean of the block holding i."""
        out = np.empty_like(self.Y)
        for block, mean in zip(self.partition.blocks, self.cluster_means):
            out[:, list(block)] = mean[:, None]
        return out
