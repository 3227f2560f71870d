"""Acceptance checks. Each ``test_criterion_<label>_*`` prints one PASS/FAIL line in the summary.

Run alone with ``pytest tests/test_acceptance.py -rA``.
"""

import math

import numpy as np
import pytest

from cluster_guard.adversary import AttackConfig, attack_max_deviation, attack_min_norm
from cluster_guard.certificate import certify_unchanged, check_conditions, robust_interval
from cluster_guard.delta import (
    SpillSpec2Way,
    SpillSpec3Way,
    delta,
    delta_2way_closed,
    delta_3way_closed,
    deviation_valid_range,
)
from cluster_guard.model import Dataset, NormParam, Partition, Perturbation, SolverConfig, WeightMatrix, apply_perturbation
from cluster_guard.oracle import oracle_solve_1d
from cluster_guard.solver import solve

from conftest import clustered_1d, dense_flip_magnitude

X = Dataset([0, 2, 10, 14])
E4 = WeightMatrix.uniform(4)
CFG = SolverConfig(gamma=2.0, norm=NormParam(2))
REF = Partition.from_one_based([[1, 2], [3, 4]])
X3 = ((0, 2),)


def P(*blocks):
    return Partition.from_one_based([list(b) for b in blocks])


def test_criterion_1_worked_solves():
    cases = [
        ([0, 2, 10, 14], P([1, 2], [3, 4]), [1.0, 12.0], 0.0),
        ([0, 2, 17, 14], P([1, 2], [3, 4]), [1.0, 15.5], 0.0),
        ([0, 2, -4, 14], P([1, 2, 3], [4]), [-2 / 3, 14.0], 1e-3),
    ]
    for x, part, means, tol in cases:
        sol = solve(Dataset(x), E4, CFG)
        assert sol.partition == part
        np.testing.assert_allclose(np.ravel(sol.cluster_means), means, rtol=0, atol=tol)
        Y_oracle = oracle_solve_1d(Dataset(x), E4, 2.0)
        np.testing.assert_allclose(sol.Y, Y_oracle, atol=1e-6)


def test_criterion_2_certificate_numbers():
    c = check_conditions(Dataset([0, 2, 17, 14]), E4, REF, q=2)
    assert abs(c.gamma_min - 1.5) <= 1e-12 and abs(c.gamma_max - 3.625) <= 1e-12
    assert c.c1 and c.c2
    c = check_conditions(Dataset([0, 2, -4, 14]), E4, REF, q=2)
    assert abs(c.gamma_min - 9) <= 1e-12 and abs(c.gamma_max - 1) <= 1e-12
    assert c.c1 and not c.c2


def test_criterion_3_robust_interval():
    iv = robust_interval(X, E4, REF, (0, 2), gamma=None, q=2, tol=1e-9)
    assert iv.lo == pytest.approx(-1.2, abs=1e-4)
    assert iv.hi == pytest.approx(12.6667, abs=1e-4)
    assert 10 + iv.lo == pytest.approx(44 / 5, abs=1e-4) and 10 + iv.hi == pytest.approx(68 / 3, abs=1e-4)


def _moved(sizes, moves):
    blocks, start = [], 1
    for size in sizes:
        blocks.append(list(range(start, start + size)))
        start += size
    pert = [list(b) for b in blocks]
    for point, dest in moves.items():
        for b in pert:
            if point in b:
                b.remove(point)
        pert[dest - 1].append(point)
    return P(*blocks), P(*[b for b in pert if b])


def test_criterion_4_delta_golden_values():
    cases = [
        ([4, 1], {4: 2}, 8),
        ([4, 1], {3: 2, 4: 2}, 12),
        ([4, 1], {2: 2, 3: 2, 4: 2}, 12),
        ([5, 5, 5], {2: 2, 3: 3}, 34),
        ([5, 5, 5], {2: 2, 3: 2, 4: 3, 5: 3}, 56),
        ([9, 1, 1], {6: 2, 7: 2, 8: 3, 9: 3}, 56),
        ([9, 1, 1], {4: 2, 5: 2, 6: 2, 7: 3, 8: 3, 9: 3}, 66),
        ([9, 1, 1], {2: 2, 3: 2, 4: 2, 5: 2, 6: 3, 7: 3, 8: 3, 9: 3}, 64),
        ([9, 1, 1], {4: 2, 5: 2, 6: 3, 7: 3, 8: 3, 9: 3}, 64),
        ([9, 1, 1], {3: 2, 4: 2, 5: 3, 6: 3, 7: 3, 8: 3, 9: 3}, 62),
        ([9, 1, 1], {3: 2, 4: 2, 5: 2, 6: 3, 7: 3, 8: 3, 9: 3}, 66),
    ]
    got = [delta(*_moved(sizes, moves)) for sizes, moves, _ in cases]
    assert got == [want for *_, want in cases]


def test_criterion_5_closed_form_equivalence():
    count = 0
    for n1 in range(1, 12):
        for n2 in range(1, 13 - n1):
            for s in range(n1 + 1):
                spec = SpillSpec2Way(n1, n2, s)
                assert delta(*spec.partitions()) == delta_2way_closed(spec)
                count += 1
            for n3 in range(1, 13 - n1 - n2):
                for s1 in range(n1 + 1):
                    for s2 in range(n1 - s1 + 1):
                        spec = SpillSpec3Way(n1, n2, n3, s1, s2)
                        assert delta(*spec.partitions()) == delta_3way_closed(spec)
                        count += 1
    assert count > 2000


def test_criterion_6_certificate_soundness():
    rng = np.random.default_rng(2024)
    certified = changed = 0
    for _ in range(500):
        data, W, part, cert = clustered_1d(rng, n_max=8)
        lo, hi = cert.admissible
        gamma = float(rng.uniform(lo, hi))
        scale = float(rng.choice([0.05, 0.3, 1.0, 3.0]))
        eps = Perturbation(rng.normal(scale=scale, size=data.shape))
        ok, _ = certify_unchanged(data, eps, W, part, gamma, q=2)
        if ok:
            certified += 1
            after = solve(apply_perturbation(data, eps), W, SolverConfig(gamma=gamma)).partition
            changed += after != part
    assert certified > 100
    assert changed == 0


def test_criterion_7_oracle_equivalence():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 6))
        data = Dataset(rng.uniform(-10, 10, size=n))
        gamma = float(rng.uniform(0.05, 4.0))
        Y = solve(data, WeightMatrix.uniform(n), SolverConfig(gamma=gamma)).Y
        worst = max(worst, float(np.linalg.norm(Y - oracle_solve_1d(data, WeightMatrix.uniform(n), gamma))))
    assert worst <= 1e-5


def test_criterion_8_equivariance():
    rng = np.random.default_rng(8)
    for _ in range(50):
        n = int(rng.integers(3, 9))
        x = rng.normal(size=(2, n)) * 3
        w = rng.uniform(0, 1, size=(n, n))
        w = np.triu(w, 1)
        W = WeightMatrix(w + w.T)
        gamma = float(rng.uniform(0.05, 1.0))
        cfg = SolverConfig(gamma=gamma, kkt_tol=1e-10)
        Y = solve(Dataset(x), W, cfg).Y

        shift = rng.normal(size=(2, 1)) * 5
        np.testing.assert_allclose(solve(Dataset(x + shift), W, cfg).Y, Y + shift, atol=1e-6)

        c = float(rng.uniform(0.2, 5.0))
        scaled = solve(Dataset(c * x), W, SolverConfig(gamma=c * gamma, kkt_tol=1e-10)).Y
        np.testing.assert_allclose(scaled, c * Y, atol=1e-6)

        perm = rng.permutation(n)
        Wp = WeightMatrix(W.w[np.ix_(perm, perm)])
        np.testing.assert_allclose(solve(Dataset(x[:, perm]), Wp, cfg).Y, Y[:, perm], atol=1e-6)


def test_criterion_9a_small_budget_no_flip():
    # literal check at gamma = 2; test_small_budget_at_interior_gamma is the interior counterpart
    rep = attack_max_deviation(X, E4, CFG, AttackConfig(budget=1.0, support=X3))
    assert rep.delta_achieved == 0


def test_small_budget_at_interior_gamma():
    cfg = SolverConfig(gamma=2.3)
    ref = solve(X, E4, cfg).partition
    iv = robust_interval(X, E4, ref, (0, 2), gamma=2.3)
    budget = 0.99 * min(-iv.lo, iv.hi)
    assert budget > 0.5
    rep = attack_max_deviation(X, E4, cfg, AttackConfig(budget=budget, support=X3))
    assert rep.delta_achieved == 0


def test_criterion_9b_large_budget_flip():
    rep = attack_max_deviation(X, E4, CFG, AttackConfig(budget=14.0, support=X3))
    flip = P([1, 2, 3], [4])
    assert rep.partition_after == flip
    assert rep.delta_achieved == delta(REF, flip) == 6
    # no single-coordinate move of x3 reaches delta 8
    assert dense_flip_magnitude(X, E4, CFG, (0, 2), 8, 14.0) == math.inf


def test_criterion_9c_min_norm_matches_dense_scan():
    target = delta(REF, P([1, 2, 3], [4]))
    oracle = dense_flip_magnitude(X, E4, CFG, (0, 2), target, 14.0)
    rep = attack_min_norm(X, E4, CFG, AttackConfig(target_delta=target, support=X3, n_candidates=16, n_rounds=8))
    assert rep.success
    assert abs(rep.eps_norm - oracle) <= 0.05 * oracle


def test_criterion_10_non_monotone_witness():
    a, b = SpillSpec3Way(9, 1, 1, 3, 3), SpillSpec3Way(9, 1, 1, 4, 4)
    assert delta_3way_closed(a) == delta(*a.partitions()) == 66
    assert delta_3way_closed(b) == delta(*b.partitions()) == 64
    assert deviation_valid_range(a) is True
    assert deviation_valid_range(b) is False


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
