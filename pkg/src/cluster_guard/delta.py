"""Co-assignment deviation between two partitions and its spill closed forms.

delta(P, Q) = ||C_Q - C_P||_F^2 where C is the 0/1 co-assignment matrix; it
counts the ordered pairs (i, j) whose same-cluster status differs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Partition, PartitionError


def membership_matrix(partition: Partition, n: int | None = None) -> np.ndarray:
    """n x K 0/1 matrix with D[i, a] = 1 iff i is in block a (canonical order)."""
    n = partition.n if n is None else n
    if partition.n != n:
        raise PartitionError(f"partition covers {partition.n} points, expected {n}")
    D = np.zeros((n, partition.k), dtype=np.int64)
    D[np.arange(n), partition.labels()] = 1
    return D


def coassignment(partition: Partition, n: int | None = None) -> np.ndarray:
    D = membership_matrix(partition, n)
    return D @ D.T


def delta(ref: Partition, pert: Partition, n: int | None = None) -> int:
    n = ref.n if n is None else n
    if pert.n != n or ref.n != n:
        raise PartitionError("partitions must cover the same point set")
    diff = coassignment(pert, n) - coassignment(ref, n)
    return int(np.sum(diff * diff))


@dataclass(frozen=True)
class SpillSpec2Way:
    """s points move from V1 (size n1) into V2 (size n2)."""

    n1: int
    n2: int
    s: int

    def __post_init__(self):
        if min(self.n1, self.n2, self.s) < 0 or self.s > self.n1:
            raise ValueError(f"invalid 2-way spill {self}")

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    def partitions(self) -> tuple[Partition, Partition]:
        """A concrete (reference, perturbed) pair; the last s points of V1 move."""
        n1, n = self.n1, self.n
        v1, v2 = list(range(n1)), list(range(n1, n))
        moved = v1[n1 - self.s :]
        ref = Partition([b for b in (v1, v2) if b], n)
        pert = Partition([b for b in (v1[: n1 - self.s], moved + v2) if b], n)
        return ref, pert


@dataclass(frozen=True)
class SpillSpec3Way:
    """s1 points move V1 -> V2 and s2 points move V1 -> V3."""

    n1: int
    n2: int
    n3: int
    s1: int
    s2: int

    def __post_init__(self):
        if min(self.n1, self.n2, self.n3, self.s1, self.s2) < 0 or self.s1 + self.s2 > self.n1:
            raise ValueError(f"invalid 3-way spill {self}")

    @property
    def n(self) -> int:
        return self.n1 + self.n2 + self.n3

    def partitions(self) -> tuple[Partition, Partition]:
        n1, n2, n = self.n1, self.n2, self.n
        v1 = list(range(n1))
        v2 = list(range(n1, n1 + n2))
        v3 = list(range(n1 + n2, n))
        keep = n1 - self.s1 - self.s2
        to2, to3 = v1[keep : keep + self.s1], v1[keep + self.s1 :]
        ref = Partition([b for b in (v1, v2, v3) if b], n)
        pert = Partition([b for b in (v1[:keep], to2 + v2, to3 + v3) if b], n)
        return ref, pert


def delta_2way_closed(spec: SpillSpec2Way) -> int:
    return 2 * spec.s * (spec.n - spec.s)


def delta_3way_closed(spec: SpillSpec3Way) -> int:
    s1, s2 = spec.s1, spec.s2
    s = s1 + s2
    return s * (2 * spec.n1 - s) + s1 * (2 * spec.n2 - s1) + s2 * (2 * spec.n3 - s2)


UNCLASSIFIED = "unclassified"


def deviation_valid_range(spec: SpillSpec2Way | SpillSpec3Way) -> bool | str:
    """Does the spill sit where delta grows with the number of moved points?

    2-way: 0 < s < min(n1, ceil(n/2)). 3-way with one of s1, s2 zero reduces to
    the 2-way rule on V1 and the receiving block. 3-way with s1 = s2: 0 < s1 < min(ceil((2n1+n2+n3)/6),
    ceil(n1/2)). Any other 3-way shape returns ``UNCLASSIFIED``.
    """
    if isinstance(spec, SpillSpec2Way):
        return 0 < spec.s < min(spec.n1, math.ceil(spec.n / 2))
    if spec.s2 == 0:
        return deviation_valid_range(SpillSpec2Way(spec.n1, spec.n2, spec.s1))
    if spec.s1 == 0:
        return deviation_valid_range(SpillSpec2Way(spec.n1, spec.n3, spec.s2))
    if spec.s1 == spec.s2:
        bound = min(math.ceil((2 * spec.n1 + spec.n2 + spec.n3) / 6), math.ceil(spec.n1 / 2))
        return 0 < spec.s1 < bound
    return UNCLASSIFIED
