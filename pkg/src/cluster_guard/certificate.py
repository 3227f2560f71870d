"""Sufficient conditions under which a perturbation cannot change the clustering.

For a reference partition and (perturbed) data, the recovery conditions are

* C1: every within-block pair has w_ij > 0 and n_a w_ij > mu_ij,
* C2: gamma_min < gamma_max,

with distinct block centroids. When they hold and gamma lies in
[gamma_min, gamma_max), the convex clustering solution recovers the reference
partition exactly. The test is one-sided: failing it does not mean the
partition changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Dataset, DimensionError, Partition, Perturbation, WeightMatrix, apply_perturbation


class CertificateInapplicable(ValueError):
    """A quantity is undefined for this input (C1 fails, or centroids coincide)."""


@dataclass(frozen=True, eq=False)
class ClassAggregates:
    n_alpha: np.ndarray  # (K,) block sizes
    centroids: np.ndarray  # (d, K) block means
    w_between: np.ndarray  # (K, K): sum_{i in I_a} sum_{j in I_b} w_ij
    w_point: np.ndarray  # (n, K): sum_{j in I_b} w_ij


@dataclass(frozen=True, eq=False)
class RecoveryCertificate:
    c1: bool
    c2: bool
    gamma_min: float
    gamma_max: float
    mu: tuple[np.ndarray, ...]
    centroids_distinct: bool

    @property
    def admissible(self) -> tuple[float, float] | None:
        """Half-open interval [gamma_min, gamma_max), or None when empty."""
        if self.c1 and self.c2 and self.centroids_distinct:
            return (self.gamma_min, self.gamma_max)
        return None

    def admits(self, gamma: float) -> bool:
        iv = self.admissible
        return iv is not None and iv[0] <= gamma < iv[1]


def _check(data: Dataset, weights: WeightMatrix, partition: Partition):
    if weights.n != data.n or partition.n != data.n:
        raise DimensionError("data, weights and partition disagree on n")


def class_aggregates(data: Dataset, weights: WeightMatrix, partition: Partition) -> ClassAggregates:
    _check(data, weights, partition)
    D = np.zeros((data.n, partition.k))
    D[np.arange(data.n), partition.labels()] = 1.0
    w_point = weights.w @ D
    return ClassAggregates(
        n_alpha=np.array(partition.sizes),
        centroids=data.values @ D / D.sum(axis=0),
        w_between=D.T @ w_point,
        w_point=w_point,
    )


def mu(weights: WeightMatrix, partition: Partition) -> tuple[np.ndarray, ...]:
    """Per block a, the matrix mu_ij = sum_{b != a} |w_i^(b) - w_j^(b)| over i, j in I_a."""
    D = np.zeros((weights.n, partition.k))
    D[np.arange(weights.n), partition.labels()] = 1.0
    wp = weights.w @ D
    out = []
    for a, block in enumerate(partition.blocks):
        rows = wp[list(block)]
        rows = np.delete(rows, a, axis=1)
        out.append(np.abs(rows[:, None, :] - rows[None, :, :]).sum(axis=2))
    return tuple(out)


def _c1(weights: WeightMatrix, partition: Partition, mus) -> bool:
    W = weights.w
    for block, m in zip(partition.blocks, mus):
        na = len(block)
        for a, b in zip(*np.triu_indices(na, 1)):
            wij = W[block[a], block[b]]
            if not (wij > 0 and na * wij > m[a, b]):
                return False
    return True


def gamma_min(data: Dataset, weights: WeightMatrix, partition: Partition, q: float = 2.0) -> float:
    """max over blocks and within-block pairs of ||x_i - x_j||_q / (n_a w_ij - mu_ij); 0 if no pairs."""
    _check(data, weights, partition)
    mus = mu(weights, partition)
    if not _c1(weights, partition, mus):
        raise CertificateInapplicable("C1 fails: some within-block denominator is not positive")
    X, W = data.values, weights.w
    best = 0.0
    for block, m in zip(partition.blocks, mus):
        na = len(block)
        for a, b in zip(*np.triu_indices(na, 1)):
            i, j = block[a], block[b]
            ratio = np.linalg.norm(X[:, i] - X[:, j], ord=q) / (na * W[i, j] - m[a, b])
            best = max(best, float(ratio))
    return best


def _centroids_distinct(centroids: np.ndarray) -> bool:
    k = centroids.shape[1]
    for a, b in zip(*np.triu_indices(k, 1)):
        if np.array_equal(centroids[:, a], centroids[:, b]):
            return False
    return True


def gamma_max(data: Dataset, weights: WeightMatrix, partition: Partition, q: float = 2.0) -> float:
    """min over block pairs of the centroid gap over the size-scaled outgoing weight; inf if none."""
    agg = class_aggregates(data, weights, partition)
    if not _centroids_distinct(agg.centroids):
        raise CertificateInapplicable("block centroids are not distinct")
    k = partition.k
    outgoing = (agg.w_between.sum(axis=1) - np.diag(agg.w_between)) / agg.n_alpha
    best = math.inf
    for a, b in zip(*np.triu_indices(k, 1)):
        denom = outgoing[a] + outgoing[b]
        if denom <= 0:
            continue
        gap = np.linalg.norm(agg.centroids[:, a] - agg.centroids[:, b], ord=q)
        best = min(best, float(gap / denom))
    return best


def check_conditions(data: Dataset, weights: WeightMatrix, partition: Partition, q: float = 2.0) -> RecoveryCertificate:
    _check(data, weights, partition)
    mus = mu(weights, partition)
    c1 = _c1(weights, partition, mus)
    agg = class_aggregates(data, weights, partition)
    distinct = _centroids_distinct(agg.centroids)
    gmin = gamma_min(data, weights, partition, q) if c1 else math.inf
    gmax = gamma_max(data, weights, partition, q) if distinct else 0.0
    return RecoveryCertificate(
        c1=c1,
        c2=bool(gmin < gmax),
        gamma_min=gmin,
        gamma_max=gmax,
        mu=mus,
        centroids_distinct=distinct,
    )


def certify_unchanged(
    data: Dataset,
    eps: Perturbation,
    weights: WeightMatrix,
    reference: Partition,
    gamma: float,
    q: float = 2.0,
) -> tuple[bool, RecoveryCertificate]:
    """Is the reference partition provably kept after adding ``eps``?

    ``reference`` should be the partition the solver returns on the clean data
    at this gamma. ``False`` only means no guarantee.
    """
    cert = check_conditions(apply_perturbation(data, eps), weights, reference, q)
    return cert.admits(gamma), cert


@dataclass(frozen=True)
class RobustInterval:
    lo: float
    hi: float

    @property
    def empty(self) -> bool:
        return not self.lo < self.hi

    def __contains__(self, t) -> bool:
        return self.lo < t < self.hi


def robust_interval(
    data: Dataset,
    weights: WeightMatrix,
    reference: Partition,
    coord: tuple[int, int],
    gamma: float | None = None,
    q: float = 2.0,
    bounds: tuple[float, float] | None = None,
    tol: float = 1e-6,
    scan_points: int = 400,
) -> RobustInterval:
    """Largest interval (lo, hi) around 0 of shifts t of one entry that keep the certificate.

    With ``gamma=None`` a shift is accepted when some gamma is admissible
    (C1, C2 and distinct centroids); with a fixed ``gamma`` it must also lie in
    [gamma_min, gamma_max). Each side is scanned outward from 0 on a grid to
    find the first rejected shift, then bisected down to ``tol``. A side that
    never fails returns the search bound. Returns an empty interval (0, 0)
    when the certificate fails at t = 0.
    """
    row, col = coord
    if bounds is None:
        span = float(np.ptp(data.values)) or 1.0
        bounds = (-10.0 * span, 10.0 * span)
    if not bounds[0] < 0 < bounds[1]:
        raise ValueError("search bounds must bracket 0")

    def ok(t: float) -> bool:
        eps = Perturbation.single(data.shape, row, col, t)
        cert = check_conditions(apply_perturbation(data, eps), weights, reference, q)
        if gamma is None:
            return cert.admissible is not None
        return cert.admits(gamma)

    if not ok(0.0):
        return RobustInterval(0.0, 0.0)

    def edge(limit: float) -> float:
        grid = np.linspace(0.0, limit, scan_points + 1)[1:]
        good = 0.0
        for t in grid:
            if not ok(t):
                bad = t
                break
            good = t
        else:
            return limit
        while abs(bad - good) > tol:
            mid = 0.5 * (good + bad)
            if ok(mid):
                good = mid
            else:
                bad = mid
        return 0.5 * (good + bad)

    return RobustInterval(float(edge(bounds[0])), float(edge(bounds[1])))
