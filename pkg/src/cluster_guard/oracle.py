"""Exact enumeration solver for tiny one-dimensional instances.

Independent of the ADMM path: every ordered grouping of the points is tried,
group values come from the closed-form stationarity equations, and the
within-group subgradients are certified by a linear feasibility problem.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linprog

from .model import Dataset, WeightMatrix


class OracleError(RuntimeError):
    """No candidate grouping passed certification."""


def set_partitions(items: list[int]):
    """Yield every partition of ``items`` as a list of lists."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1 :]
        yield [[first]] + part


def _group_feasible(group, u, y, x, W, gamma, tol):
    """Is there z_ij in [-1, 1] satisfying per-point stationarity inside ``group``?"""
    n = len(x)
    outside = [j for j in range(n) if j not in group]
    rhs = []
    for i in group:
        pull = sum(W[i, j] * np.sign(u - y[j]) for j in outside)
        rhs.append(-(u - x[i]) - gamma * pull)
    pairs = [(a, b) for a, b in itertools.combinations(group, 2) if W[a, b] > 0]
    if not pairs:
        return all(abs(r) <= tol for r in rhs)
    A = np.zeros((len(group), len(pairs)))
    pos = {i: r for r, i in enumerate(group)}
    for c, (a, b) in enumerate(pairs):
        A[pos[a], c] = gamma * W[a, b]
        A[pos[b], c] = -gamma * W[a, b]
    res = linprog(np.zeros(len(pairs)), A_eq=A, b_eq=np.array(rhs), bounds=[(-1, 1)] * len(pairs), method="highs")
    if res.status != 0:
        return False
    return float(np.max(np.abs(A @ res.x - rhs))) <= tol


def oracle_solve_1d(data: Dataset, weights: WeightMatrix, gamma: float, tol: float = 1e-9) -> np.ndarray:
    """Exact minimizer Y (1 x n) of the 1-D convex clustering problem, n <= 6."""
    if data.d != 1:
        raise ValueError("oracle handles d = 1 only")
    if data.n > 6:
        raise ValueError("oracle enumeration is limited to n <= 6")
    x = data.values[0]
    W = weights.w
    n = len(x)
    if gamma == 0:
        return x.reshape(1, -1).copy()

    best, best_obj = None, np.inf
    for groups in set_partitions(list(range(n))):
        k = len(groups)
        sizes = np.array([len(g) for g in groups], dtype=float)
        means = np.array([x[g].mean() for g in groups])
        between = np.array([[W[np.ix_(ga, gb)].sum() for gb in groups] for ga in groups])
        for order in itertools.permutations(range(k)):
            rank = np.empty(k, dtype=int)
            rank[list(order)] = np.arange(k)
            sign = np.sign(rank[:, None] - rank[None, :])
            u = means - gamma / sizes * (between * sign).sum(axis=1)
            # value ordering must match the assumed ranks (strictly)
            if k > 1 and np.any(np.diff(u[list(order)]) <= 0):
                continue
            y = np.empty(n)
            for g, val in zip(groups, u):
                y[g] = val
            if not all(_group_feasible(g, u[m], y, x, W, gamma, tol) for m, g in enumerate(groups) if len(g) > 1):
                continue
            i, j = np.triu_indices(n, 1)
            obj = 0.5 * np.sum((y - x) ** 2) + gamma * np.sum(W[i, j] * np.abs(y[i] - y[j]))
            if obj < best_obj:
                best, best_obj = y, obj
    if best is None:
        raise OracleError("no grouping satisfied the optimality conditions")
    return best.reshape(1, -1)
