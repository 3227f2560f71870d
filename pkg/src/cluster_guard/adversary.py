"""Heuristic attack search with the convex clustering solver as lower level.

The map eps -> delta(partition(X), partition(X + eps)) is piecewise constant,
so every attack here is a seeded random search: candidates are drawn uniformly
from a ball around the incumbent, each is scored after a full solve, and the
ball shrinks geometrically between rounds.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .delta import delta
from .model import Dataset, Partition, Perturbation, SolverConfig, WeightMatrix, apply_perturbation
from .solver import ConvergenceError, solve

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AttackConfig:
    budget: float = 1.0  # max Frobenius norm of eps (max-deviation attack)
    target_delta: float = 1.0  # required delta (min-norm attack)
    penalty: float = 1.0  # weight on ||eps|| (penalized attack)
    support: tuple[tuple[int, int], ...] | None = None
    n_candidates: int = 64
    n_rounds: int = 20
    shrink: float = 0.7
    seed: int = 0
    a_hi: float | None = None  # upper budget for min-norm bisection; 10 x data range by default
    budget_rtol: float = 1e-3
    workers: int = 1

    def __post_init__(self):
        if self.budget < 0:
            raise ValueError("budget must be nonnegative")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")
        if self.n_candidates < 1 or self.n_rounds < 1:
            raise ValueError("n_candidates and n_rounds must be positive")


@dataclass(frozen=True, eq=False)
class AttackReport:
    eps: Perturbation
    eps_norm: float
    delta_achieved: int
    partition_before: Partition
    partition_after: Partition
    evaluations: int
    success: bool
    discarded: int = 0
    score: float = 0.0


@dataclass(frozen=True)
class CalmnessEstimate:
    radii: tuple[float, ...]
    ratios: tuple[float, ...]  # per radius, max ||Y(eps) - Y|| / ||eps||
    modulus_estimate: float
    flips: tuple[int, ...] = ()  # per radius, samples whose partition changed
    skipped: int = 0


def _support_mask(shape, support) -> np.ndarray:
    if support is None:
        return np.ones(shape, dtype=bool)
    mask = np.zeros(shape, dtype=bool)
    for r, c in support:
        mask[r, c] = True
    return mask


def _data_range(data: Dataset) -> float:
    return float(np.ptp(data.values)) or 1.0


class _Evaluator:
    """Solves the lower level at X + eps and scores the resulting partition."""

    def __init__(self, data, weights, config, reference):
        self.data, self.weights, self.config, self.reference = data, weights, config, reference
        self.evaluations = 0
        self.discarded = 0

    def partition(self, eps: np.ndarray) -> Partition | None:
        try:
            sol = solve(apply_perturbation(self.data, Perturbation(eps)), self.weights, self.config)
        except ConvergenceError as exc:
            log.warning("lower-level solve failed, candidate discarded: %s", exc)
            return None
        return sol.partition

    def batch(self, candidates: Sequence[np.ndarray], workers: int) -> list[Partition | None]:
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                parts = list(pool.map(self.partition, candidates))
        else:
            parts = [self.partition(c) for c in candidates]
        self.evaluations += len(parts)
        self.discarded += sum(p is None for p in parts)
        return parts


def _sample_ball(rng, center, mask, radius, count):
    """``count`` points uniform in the radius-ball around ``center`` within the support."""
    m = int(mask.sum())
    dirs = rng.standard_normal((count, m))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = radius * rng.random(count) ** (1.0 / m)
    out = []
    for k in range(count):
        eps = center.copy()
        eps[mask] += radii[k] * dirs[k]
        out.append(eps)
    return out


def _search(
    data: Dataset,
    weights: WeightMatrix,
    config: SolverConfig,
    atk: AttackConfig,
    score: Callable[[int, float], float],
    radius: float,
    budget: float | None,
    reference: Partition,
    warm_start: Sequence[np.ndarray] = (),
    stop_at: float | None = None,
) -> tuple[np.ndarray, Partition, float, _Evaluator]:
    rng = np.random.default_rng(atk.seed)
    mask = _support_mask(data.shape, atk.support)
    ev = _Evaluator(data, weights, config, reference)

    def project(eps):
        eps = np.where(mask, eps, 0.0)
        if budget is not None:
            nrm = np.linalg.norm(eps)
            if nrm > budget:
                eps = eps * (budget / nrm)
        return eps

    best = np.zeros(data.shape)
    best_part = reference
    best_score = score(0, 0.0)
    best_norm = 0.0

    def fold(cands, parts):
        nonlocal best, best_part, best_score, best_norm
        for eps, part in zip(cands, parts):
            if part is None:
                continue
            nrm = float(np.linalg.norm(eps))
            s = score(delta(reference, part), nrm)
            if s > best_score or (s == best_score and nrm < best_norm):
                best, best_part, best_score, best_norm = eps, part, s, nrm

    if budget == 0:
        return best, best_part, best_score, ev

    if warm_start:
        cands = [project(np.array(e, dtype=float)) for e in warm_start]
        fold(cands, ev.batch(cands, atk.workers))

    for _ in range(atk.n_rounds):
        if stop_at is not None and best_score >= stop_at:
            break
        cands = [project(c) for c in _sample_ball(rng, best, mask, radius, atk.n_candidates)]
        fold(cands, ev.batch(cands, atk.workers))
        radius *= atk.shrink
    return best, best_part, best_score, ev


def _report(data, eps, before, after, ev, success, score) -> AttackReport:
    return AttackReport(
        eps=Perturbation(eps),
        eps_norm=float(np.linalg.norm(eps)),
        delta_achieved=delta(before, after),
        partition_before=before,
        partition_after=after,
        evaluations=ev.evaluations if ev else 0,
        success=success,
        discarded=ev.discarded if ev else 0,
        score=float(score),
    )


def reference_partition(data: Dataset, weights: WeightMatrix, config: SolverConfig) -> Partition:
    return solve(data, weights, config).partition


def attack_max_deviation(
    data: Dataset,
    weights: WeightMatrix,
    config: SolverConfig,
    atk: AttackConfig,
    warm_start: Sequence[np.ndarray] = (),
    reference: Partition | None = None,
    stop_at: float | None = None,
) -> AttackReport:
    """Best-found eps with ||eps||_F <= atk.budget maximizing delta.

    Ties in delta go to the smaller perturbation. ``warm_start`` perturbations
    are projected into the budget and evaluated before the random rounds;
    the rounds end early once delta reaches ``stop_at``.
    """
    ref = reference_partition(data, weights, config) if reference is None else reference
    eps, part, s, ev = _search(
        data, weights, config, atk, lambda dl, nrm: float(dl), atk.budget, atk.budget, ref, warm_start, stop_at
    )
    return _report(data, eps, ref, part, ev, s > 0, s)


def attack_min_norm(
    data: Dataset,
    weights: WeightMatrix,
    config: SolverConfig,
    atk: AttackConfig,
) -> AttackReport:
    """Smallest-norm eps found with delta >= atk.target_delta.

    Bisects the budget over [0, a_hi], running the max-deviation search at
    each trial budget and seeding it with the current best attack rescaled to
    that budget. Stops when the bracket is within ``budget_rtol`` relative.
    Returns ``success=False`` with the largest delta seen when even a_hi falls
    short; targets above n^2 - n are rejected without searching.
    """
    if not atk.target_delta > 0:
        raise ValueError("target_delta must be positive")
    ref = reference_partition(data, weights, config)
    n = data.n
    if atk.target_delta > n * n - n:
        zero = np.zeros(data.shape)
        return _report(data, zero, ref, ref, None, False, 0.0)

    a_hi = atk.a_hi if atk.a_hi is not None else 10.0 * _data_range(data)
    total_evals = total_discarded = 0

    def run(budget, warm, stop=None):
        nonlocal total_evals, total_discarded
        trial = replace(atk, budget=budget)
        rep = attack_max_deviation(
            data, weights, config, trial, warm_start=warm, reference=ref, stop_at=stop
        )
        total_evals += rep.evaluations
        total_discarded += rep.discarded
        return rep

    top = run(a_hi, ())
    if top.delta_achieved < atk.target_delta:
        return _with_counts(top, total_evals, total_discarded, success=False)

    best = top
    lo, hi = 0.0, best.eps_norm
    while hi - lo > atk.budget_rtol * hi:
        mid = 0.5 * (lo + hi)
        warm = [best.eps.eps * (mid / best.eps_norm)] if best.eps_norm > 0 else []
        rep = run(mid, warm, stop=atk.target_delta)
        if rep.delta_achieved >= atk.target_delta:
            best = rep
            hi = min(mid, rep.eps_norm)
        else:
            lo = mid
    return _with_counts(best, total_evals, total_discarded, success=True)


def _with_counts(rep: AttackReport, evals: int, discarded: int, success: bool) -> AttackReport:
    return AttackReport(
        eps=rep.eps,
        eps_norm=rep.eps_norm,
        delta_achieved=rep.delta_achieved,
        partition_before=rep.partition_before,
        partition_after=rep.partition_after,
        evaluations=evals,
        success=success,
        discarded=discarded,
        score=rep.score,
    )


def attack_penalized(
    data: Dataset,
    weights: WeightMatrix,
    config: SolverConfig,
    atk: AttackConfig,
) -> AttackReport:
    """Best-found eps maximizing delta - penalty * ||eps||_F (no hard budget).

    The search radius starts at ``a_hi`` (10 x data range by default). The
    zero perturbation scores 0, so the returned score is never negative.
    """
    if not atk.penalty > 0:
        raise ValueError("penalty must be positive")
    ref = reference_partition(data, weights, config)
    radius = atk.a_hi if atk.a_hi is not None else 10.0 * _data_range(data)
    rho = atk.penalty
    eps, part, s, ev = _search(data, weights, config, atk, lambda dl, nrm: dl - rho * nrm, radius, None, ref)
    return _report(data, eps, ref, part, ev, s > 0, s)


def calmness_probe(
    data: Dataset,
    weights: WeightMatrix,
    config: SolverConfig,
    radii: Sequence[float],
    samples_per_radius: int = 16,
    seed: int = 0,
) -> CalmnessEstimate:
    """Empirical lower bound on the calmness modulus of eps -> Y*(eps) at 0.

    Draws perturbations uniformly on each sphere ||eps||_F = r and records the
    largest ratio ||Y*(eps) - Y*|| / r. Also counts, per radius, how many draws
    changed the partition.
    """
    radii = tuple(float(r) for r in radii)
    if any(r <= 0 for r in radii) or list(radii) != sorted(radii):
        raise ValueError("radii must be positive and ascending")
    base = solve(data, weights, config)
    rng = np.random.default_rng(seed)
    ratios, flips, skipped = [], [], 0
    for r in radii:
        worst, flipped = 0.0, 0
        for _ in range(samples_per_radius):
            eps = rng.standard_normal(data.shape)
            eps *= r / np.linalg.norm(eps)
            try:
                sol = solve(apply_perturbation(data, Perturbation(eps)), weights, config)
            except ConvergenceError:
                skipped += 1
                continue
            worst = max(worst, float(np.linalg.norm(sol.Y - base.Y)) / r)
            flipped += sol.partition != base.partition
        ratios.append(worst)
        flips.append(flipped)
    return CalmnessEstimate(radii, tuple(ratios), max(ratios, default=0.0), tuple(flips), skipped)
