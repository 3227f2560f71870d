import numpy as np
import pytest

from cluster_guard.adversary import (
    AttackConfig,
    attack_max_deviation,
    attack_min_norm,
    attack_penalized,
    calmness_probe,
)
from cluster_guard.certificate import certify_unchanged, robust_interval
from cluster_guard.delta import delta
from cluster_guard.model import Dataset, NormParam, Partition, SolverConfig, WeightMatrix
from cluster_guard.solver import solve

from conftest import clustered_1d, dense_flip_magnitude

X = Dataset([0, 2, 10, 14])
E4 = WeightMatrix.uniform(4)
CFG = SolverConfig(gamma=2.0, norm=NormParam(2))
X3 = ((0, 2),)
FAST = dict(n_candidates=16, n_rounds=8)


def test_single_coordinate_flip():
    rep = attack_max_deviation(X, E4, CFG, AttackConfig(budget=14, support=X3, **FAST))
    assert rep.partition_before == Partition.from_one_based([[1, 2], [3, 4]])
    assert rep.partition_after == Partition.from_one_based([[1, 2, 3], [4]])
    assert rep.delta_achieved == 6 == delta(rep.partition_before, rep.partition_after)
    assert rep.eps.eps[0, 2] < -2.99 and np.count_nonzero(rep.eps.eps) == 1
    assert rep.success


def test_zero_budget():
    rep = attack_max_deviation(X, E4, CFG, AttackConfig(budget=0, support=X3))
    assert rep.eps_norm == 0 and rep.delta_achieved == 0 and not rep.success
    assert rep.evaluations == 0


def test_budget_feasibility_and_report_consistency():
    for a in [0.3, 2.0, 7.5]:
        rep = attack_max_deviation(X, E4, CFG, AttackConfig(budget=a, **FAST, seed=3))
        assert rep.eps_norm <= a + 1e-12
        assert rep.eps_norm == pytest.approx(np.linalg.norm(rep.eps.eps), abs=0)
        assert rep.delta_achieved == delta(rep.partition_before, rep.partition_after)
        assert solve(Dataset(X.values + rep.eps.eps), E4, CFG).partition == rep.partition_after


def test_reproducible():
    atk = AttackConfig(budget=5, **FAST, seed=11)
    a = attack_max_deviation(X, E4, CFG, atk)
    b = attack_max_deviation(X, E4, CFG, atk)
    assert np.array_equal(a.eps.eps, b.eps.eps) and a.delta_achieved == b.delta_achieved
    assert a.evaluations == b.evaluations


def test_workers_do_not_change_result():
    atk = AttackConfig(budget=5, n_candidates=12, n_rounds=4, seed=2)
    a = attack_max_deviation(X, E4, CFG, atk)
    b = attack_max_deviation(X, E4, CFG, AttackConfig(**{**atk.__dict__, "workers": 4}))
    assert np.array_equal(a.eps.eps, b.eps.eps)


def test_monotone_in_budget_with_warm_start():
    prev, warm = 0, ()
    for a in [0.2, 1.0, 3.5, 8.0, 14.0]:
        rep = attack_max_deviation(X, E4, CFG, AttackConfig(budget=a, n_candidates=8, n_rounds=4), warm_start=warm)
        assert rep.delta_achieved >= prev
        prev, warm = rep.delta_achieved, (rep.eps.eps,)


def test_interior_gamma_small_budget_is_harmless():
    cfg = SolverConfig(gamma=2.3)
    ref = solve(X, E4, cfg).partition
    iv = robust_interval(X, E4, ref, (0, 2), gamma=2.3)
    radius = min(-iv.lo, iv.hi)
    assert radius == pytest.approx(0.6, abs=1e-5)
    rep = attack_max_deviation(X, E4, cfg, AttackConfig(budget=0.95 * radius, support=X3, **FAST))
    assert rep.delta_achieved == 0 and not rep.success


def test_boundary_gamma_any_inward_move_splits():
    # at gamma = 2 the clean data sits on the fusion threshold of points 3 and 4
    rep = attack_max_deviation(X, E4, CFG, AttackConfig(budget=1.0, support=X3, **FAST))
    assert rep.delta_achieved == 2
    assert rep.partition_after == Partition.from_one_based([[1, 2], [3], [4]])


class TestMinNorm:
    @pytest.fixture(scope="class")
    @classmethod
    def report(cls):
        return attack_min_norm(X, E4, CFG, AttackConfig(target_delta=6, support=X3, **FAST))

    def test_matches_dense_scan(self, report):
        assert report.success and report.delta_achieved >= 6
        assert report.eps_norm == pytest.approx(3.0, rel=5e-3)

    def test_dense_scan_oracle(self):
        assert dense_flip_magnitude(X, E4, CFG, (0, 2), 6, 14.0) == pytest.approx(3.0, abs=2e-3)
        assert dense_flip_magnitude(X, E4, CFG, (0, 2), 8, 14.0) == float("inf")

    def test_duality_with_max_deviation(self, report):
        rep = attack_max_deviation(
            X, E4, CFG, AttackConfig(budget=report.eps_norm, support=X3, **FAST), warm_start=(report.eps.eps,)
        )
        assert rep.delta_achieved >= 6

    def test_unreachable_on_this_support(self):
        rep = attack_min_norm(X, E4, CFG, AttackConfig(target_delta=8, support=X3, n_candidates=8, n_rounds=4))
        assert not rep.success and rep.delta_achieved == 6

    def test_beyond_bound_rejected_without_search(self):
        rep = attack_min_norm(X, E4, CFG, AttackConfig(target_delta=13))
        assert not rep.success and rep.evaluations == 0

    def test_nonpositive_target(self):
        with pytest.raises(ValueError):
            attack_min_norm(X, E4, CFG, AttackConfig(target_delta=0))

    def test_full_support_reaches_full_fusion(self):
        rep = attack_max_deviation(X, E4, CFG, AttackConfig(budget=14, **FAST))
        assert rep.delta_achieved == 8
        assert rep.partition_after == Partition.from_one_based([[1, 2, 3, 4]])


class TestPenalized:
    def test_huge_penalty_keeps_zero(self):
        rep = attack_penalized(X, E4, CFG, AttackConfig(penalty=1e6, support=X3, **FAST))
        assert rep.eps_norm == 0 and rep.score == 0 and not rep.success

    def test_small_penalty_recovers_max_flip(self):
        bl1 = attack_max_deviation(X, E4, CFG, AttackConfig(budget=140, support=X3, **FAST))
        rep = attack_penalized(X, E4, CFG, AttackConfig(penalty=1e-3, support=X3, **FAST))
        assert rep.delta_achieved == bl1.delta_achieved == 6
        assert rep.score == pytest.approx(6 - 1e-3 * rep.eps_norm)

    def test_score_never_negative(self):
        for rho in [0.1, 1.0, 5.0]:
            rep = attack_penalized(X, E4, CFG, AttackConfig(penalty=rho, n_candidates=8, n_rounds=4, seed=1))
            assert rep.score >= 0
            assert rep.score == pytest.approx(rep.delta_achieved - rho * rep.eps_norm)

    def test_requires_positive_penalty(self):
        with pytest.raises(ValueError):
            attack_penalized(X, E4, CFG, AttackConfig(penalty=0))


class TestCalmness:
    def test_identity_lower_level(self):
        est = calmness_probe(X, E4, SolverConfig(gamma=0.0), [0.1, 1.0, 10.0], samples_per_radius=6)
        np.testing.assert_allclose(est.ratios, 1.0, rtol=1e-12)
        assert est.flips == (0, 0, 0)

    def test_regression_fixture(self):
        est = calmness_probe(X, E4, CFG, [1e-3, 1e-2, 1e-1], samples_per_radius=16, seed=0)
        assert est.modulus_estimate == pytest.approx(0.99847014, rel=1e-4)
        assert est.modulus_estimate == max(est.ratios)
        assert all(0 <= r <= 1 + 1e-6 for r in est.ratios)

    def test_interior_gamma_is_flip_free_at_small_radius(self):
        est = calmness_probe(X, E4, SolverConfig(gamma=2.3), [1e-3, 1e-2, 1e-1, 5.0], samples_per_radius=12)
        assert est.flips[:3] == (0, 0, 0)
        assert est.flips[3] > 0
        assert all(r <= 1 + 1e-6 for r in est.ratios)

    def test_rejects_bad_radii(self):
        with pytest.raises(ValueError):
            calmness_probe(X, E4, CFG, [0.1, 0.01])
        with pytest.raises(ValueError):
            calmness_probe(X, E4, CFG, [0.0, 1.0])


def test_attack_never_beats_certificate():
    """Whenever the certificate vouches for the attack's eps, the partition must not move."""
    rng = np.random.default_rng(7)
    vouched = 0
    for _ in range(25):
        data, W, part, cert = clustered_1d(rng, n_max=6)
        lo, hi = cert.admissible
        gamma = float(rng.uniform(lo, hi))
        cfg = SolverConfig(gamma=gamma)
        if solve(data, W, cfg).partition != part:
            continue
        a = float(rng.uniform(0.05, 2.0)) * float(np.ptp(data.values))
        rep = attack_max_deviation(data, W, cfg, AttackConfig(budget=a, n_candidates=8, n_rounds=3, seed=int(rng.integers(1000))))
        ok, _ = certify_unchanged(data, rep.eps, W, part, gamma, q=2)
        if ok:
            vouched += 1
            assert rep.delta_achieved == 0 and rep.partition_after == part
    assert vouched > 0
