"""Convex clustering (sum-of-norms) solver and partition extraction.

Minimizes

    1/2 sum_i ||y_i - x_i||^2 + gamma * sum_{i<j} w_ij ||y_i - y_j||_p

by ADMM on the edge splitting v_l = y_i - y_j, one splitting variable per
pair with w_ij > 0.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg

from .model import (
    ClusterSolution,
    Dataset,
    DimensionError,
    NormParam,
    Partition,
    SolverConfig,
    WeightMatrix,
)


class ConvergenceError(RuntimeError):
    """ADMM hit max_iter before the KKT residual reached kkt_tol."""

    def __init__(self, message, primal_residual, dual_residual, iterations):
        super().__init__(message)
        self.primal_residual = primal_residual
        self.dual_residual = dual_residual
        self.iterations = iterations


def _pnorm(diff: np.ndarray, p: float, axis=0) -> np.ndarray:
    return np.linalg.norm(diff, ord=p, axis=axis)


def objective(data: Dataset, weights: WeightMatrix, config: SolverConfig, Y) -> float:
    X = data.values
    Y = np.asarray(Y, dtype=float).reshape(X.shape[0], -1)
    if Y.shape != X.shape or weights.n != X.shape[1]:
        raise DimensionError("Y, data and weights disagree in shape")
    i, j, w = weights.edges()
    fidelity = 0.5 * float(np.sum((Y - X) ** 2))
    if len(w) == 0 or config.gamma == 0:
        return fidelity
    penalty = float(np.sum(w * _pnorm(Y[:, i] - Y[:, j], config.norm.p)))
    return fidelity + config.gamma * penalty


def project_l1_ball(v: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto {z : ||z||_1 <= radius} (sort-based)."""
    v = np.asarray(v, dtype=float)
    if radius <= 0:
        return np.zeros_like(v)
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, len(u) + 1)
    rho = np.nonzero(u * k > css - radius)[0][-1]
    theta = (css[rho] - radius) / (rho + 1)
    return np.sign(v) * np.maximum(a - theta, 0.0)


def prox_pairwise(v, lam: float, p: NormParam | float = 2.0) -> np.ndarray:
    """argmin_z 1/2 ||z - v||^2 + lam ||z||_p."""
    p = p.p if isinstance(p, NormParam) else float(p)
    v = np.asarray(v, dtype=float)
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if p == 2.0:
        nrm = np.linalg.norm(v)
        if nrm <= lam:
            return np.zeros_like(v)
        return (1.0 - lam / nrm) * v
    if p == 1.0:
        return np.sign(v) * np.maximum(np.abs(v) - lam, 0.0)
    if p == math.inf:
        # Moreau: prox of lam*||.||_inf is v minus projection onto the lam-ball of the dual norm
        return v - project_l1_ball(v, lam)
    raise ValueError(f"unsupported p={p}")


def _prox_columns(V: np.ndarray, lam: np.ndarray, p: float) -> np.ndarray:
    """Column-wise prox with per-column thresholds."""
    if p == 2.0:
        nrm = np.sqrt(np.einsum("ij,ij->j", V, V))
        scale = np.where(nrm > lam, 1.0 - lam / np.where(nrm > 0, nrm, 1.0), 0.0)
        return V * scale
    if p == 1.0:
        return np.sign(V) * np.maximum(np.abs(V) - lam, 0.0)
    out = np.empty_like(V)
    for col in range(V.shape[1]):
        out[:, col] = prox_pairwise(V[:, col], lam[col], math.inf)
    return out


def extract_partition(Y, fusion_tol: float = 1e-6) -> Partition:
    """Connected components of the graph joining i, j when y_i and y_j coincide.

    Two columns coincide when ||y_i - y_j||_2 <= fusion_tol * (1 + max_i ||y_i||_2).
    """
    if fusion_tol <= 0:
        raise ValueError("fusion_tol must be positive")
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y.reshape(1, -1)
    n = Y.shape[1]
    thresh = fusion_tol * (1.0 + float(np.max(np.linalg.norm(Y, axis=0))))
    dist = np.linalg.norm(Y[:, :, None] - Y[:, None, :], axis=0)
    adj = dist <= thresh
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in zip(*np.nonzero(np.triu(adj, k=1))):
        ri, rj = find(int(i)), find(int(j))
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    return Partition.from_labels([find(i) for i in range(n)])


def cluster_means(data: Dataset, partition: Partition) -> tuple[np.ndarray, ...]:
    X = data.values
    return tuple(X[:, list(b)].mean(axis=1) for b in partition.blocks)


class _LinearSystem:
    """Solves U (I + rho A^T A) = B; explicit inverse for small n, Cholesky otherwise."""

    def __init__(self, AtA: np.ndarray, rho: float):
        M = np.eye(AtA.shape[0]) + rho * AtA
        if M.shape[0] <= 256:
            self.inv = np.linalg.inv(M)
            self.factor = None
        else:
            self.inv = None
            self.factor = scipy.linalg.cho_factor(M)

    def solve(self, B: np.ndarray) -> np.ndarray:
        if self.inv is not None:
            return B @ self.inv
        return scipy.linalg.cho_solve(self.factor, B.T).T


def solve(
    data: Dataset,
    weights: WeightMatrix,
    config: SolverConfig,
    init=None,
    adaptive_rho: bool = True,
) -> ClusterSolution:
    """Solve the convex clustering problem to ``config.kkt_tol``.

    The returned ``kkt_residual`` is the larger of the worst per-point
    stationarity residual ||y_i - x_i + gamma sum_j w_ij z_ij||_2 and the worst
    per-edge splitting gap ||v_ij - (y_i - y_j)||_2. The subgradients z_ij are
    read off the edge multipliers, which the prox step keeps dual feasible.

    ``init`` is an optional d x n starting point. Raises ConvergenceError when
    ``config.max_iter`` is exhausted.
    """
    X = data.values
    d, n = X.shape
    if weights.n != n:
        raise DimensionError(f"weights are {weights.n}x{weights.n} but data has n={n}")
    p = config.norm.p
    ei, ej, w = weights.edges()
    m = len(w)

    if config.gamma == 0 or m == 0:
        Y = X.copy()
        part = extract_partition(Y, config.fusion_tol)
        return ClusterSolution(Y, part, cluster_means(data, part), 0.0, 0)

    # incidence: row l is e_i - e_j
    A = np.zeros((m, n))
    A[np.arange(m), ei] = 1.0
    A[np.arange(m), ej] = -1.0
    AtA = A.T @ A
    lam = config.gamma * w

    U = X.copy() if init is None else np.array(init, dtype=float).reshape(d, n)
    V = U @ A.T
    Lam = np.zeros((d, m))
    rho = float(config.admm_rho)
    system = _LinearSystem(AtA, rho)
    tol2 = config.kkt_tol**2

    primal = dual = math.inf
    for it in range(1, int(config.max_iter) + 1):
        U = system.solve(X + (Lam + rho * V) @ A)
        D = U @ A.T
        V_old = V
        V = _prox_columns(D - Lam / rho, lam / rho, p)
        R = V - D
        Lam += rho * R

        stat = rho * (V_old - V) @ A  # = U - X - Lam A, the stationarity defect
        primal = float(np.max(np.einsum("ij,ij->j", R, R)))
        dual = float(np.max(np.einsum("ij,ij->j", stat, stat)))
        if primal <= tol2 and dual <= tol2:
            break

        if adaptive_rho and it % 10 == 0:
            # residual balancing; the unscaled multiplier Lam is unaffected
            if primal > 100.0 * dual:
                rho *= 2.0
            elif dual > 100.0 * primal:
                rho /= 2.0
            else:
                continue
            system = _LinearSystem(AtA, rho)
    else:
        raise ConvergenceError(
            f"ADMM did not reach kkt_tol={config.kkt_tol} in {config.max_iter} iterations "
            f"(primal={math.sqrt(primal):.3e}, dual={math.sqrt(dual):.3e})",
            math.sqrt(primal),
            math.sqrt(dual),
            int(config.max_iter),
        )

    part = extract_partition(U, config.fusion_tol)
    return ClusterSolution(U, part, cluster_means(data, part), math.sqrt(max(primal, dual)), it)
