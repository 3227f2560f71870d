"""Solve, certify, bound and attack the four-point example X = [0, 2, 10, 14].

    python scripts/worked_example.py [--gamma 2.0]
"""

import argparse

import numpy as np

from cluster_guard.adversary import AttackConfig, attack_max_deviation, attack_min_norm
from cluster_guard.certificate import check_conditions, robust_interval
from cluster_guard.model import Dataset, SolverConfig, WeightMatrix
from cluster_guard.solver import solve


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--gamma", type=float, default=2.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    W = WeightMatrix.uniform(4)
    cfg = SolverConfig(gamma=args.gamma)
    X = Dataset([0, 2, 10, 14])
    ref = solve(X, W, cfg).partition

    print(f"gamma = {args.gamma}")
    print(f"{'x':>22}  {'partition':<22} {'means':<18} {'gamma_min':>9} {'gamma_max':>9}  C2")
    for x in ([0, 2, 10, 14], [0, 2, 17, 14], [0, 2, -4, 14]):
        sol = solve(Dataset(x), W, cfg)
        cert = check_conditions(Dataset(x), W, ref)
        means = np.round(np.ravel(sol.cluster_means), 4).tolist()
        print(
            f"{str(x):>22}  {str(sol.partition.to_one_based()):<22} {str(means):<18} "
            f"{cert.gamma_min:9.4f} {cert.gamma_max:9.4f}  {cert.c2}"
        )

    iv = robust_interval(X, W, ref, (0, 2))
    print(f"\nx3 certified for some gamma: ({10 + iv.lo:.4f}, {10 + iv.hi:.4f})")
    iv = robust_interval(X, W, ref, (0, 2), gamma=args.gamma)
    print(f"x3 certified at gamma={args.gamma}: ({10 + iv.lo:.4f}, {10 + iv.hi:.4f})")

    support = ((0, 2),)
    for a in (1.0, 14.0):
        rep = attack_max_deviation(X, W, cfg, AttackConfig(budget=a, support=support, seed=args.seed))
        print(
            f"max-deviation a={a:>4}: eps3={rep.eps.eps[0, 2]:+.4f} delta={rep.delta_achieved} "
            f"-> {rep.partition_after.to_one_based()}"
        )
    rep = attack_min_norm(
        X, W, cfg, AttackConfig(target_delta=6, support=support, n_candidates=16, n_rounds=8, seed=args.seed)
    )
    print(f"min-norm delta>=6: ||eps||={rep.eps_norm:.4f} ({rep.evaluations} solves)")


if __name__ == "__main__":
    main()
