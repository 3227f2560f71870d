"""Command-line entry point: ``cluster-guard <command> [options]``.

Every command prints a JSON report with keys "command", "config", "result"
and "diagnostics" (to stdout, or to ``--out``). Exit codes: 0 ok, 1 invalid
input, 2 solver did not converge, 3 attack target unreachable.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

from . import adversary, certificate, delta as delta_mod, io
from .model import NormParam, SolverConfig
from .solver import ConvergenceError, solve

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGENCE, EXIT_UNREACHABLE = 0, 1, 2, 3
SEED_ENV = "CLUSTER_GUARD_SEED"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _p_value(text: str) -> float:
    return math.inf if text.lower() in ("inf", "infinity") else float(text)


def _pairs(text: str) -> tuple[tuple[int, int], ...]:
    """'1,3;2,4' -> ((0, 2), (1, 3)); 1-based row (feature), col (sample)."""
    out = []
    for chunk in text.split(";"):
        r, c = chunk.split(",")
        out.append((int(r) - 1, int(c) - 1))
    return tuple(out)


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",")]


def _add_data(p):
    p.add_argument("--data", required=True, help="CSV, one sample per row")
    p.add_argument("--header", action="store_true", help="skip the first CSV line")
    p.add_argument("--weights", default="uniform", help="uniform | gaussian-knn | path to an n x n CSV")
    p.add_argument("--knn-k", type=int, default=5)
    p.add_argument("--knn-phi", type=float, default=0.5)


def _add_solver(p, gamma_required=True):
    p.add_argument("--gamma", type=float, required=gamma_required)
    p.add_argument("--p", type=_p_value, default=2.0, help="penalty norm: 1, 2 or inf")
    p.add_argument("--kkt-tol", type=float, default=1e-8)
    p.add_argument("--fusion-tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=100_000)
    p.add_argument("--admm-rho", type=float, default=1.0)


def _add_attack(p):
    p.add_argument("--support", type=_pairs, default=None, help="allowed entries 'row,col;...' (1-based)")
    p.add_argument("--n-candidates", type=int, default=64)
    p.add_argument("--n-rounds", type=int, default=20)
    p.add_argument("--shrink", type=float, default=0.7)
    p.add_argument("--seed", type=int, default=None, help=f"falls back to ${SEED_ENV}, then 0")
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cluster-guard", description=__doc__.splitlines()[0])
    common = _Parser(add_help=False)
    common.add_argument("--out", help="write the report here instead of stdout")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help):
        return commands.add_parser(name, help=help, parents=[common])

    p = add("solve", help="solve convex clustering and report the partition")
    _add_data(p)
    _add_solver(p)

    p = add("certify", help="check whether a perturbation provably keeps the partition")
    _add_data(p)
    _add_solver(p)
    p.add_argument("--eps", required=True, help="perturbation CSV, same layout as --data")
    p.add_argument("--reference", help="partition JSON; defaults to the solved clean partition")

    p = add("robust-interval", help="certified range for shifting one entry")
    _add_data(p)
    _add_solver(p, gamma_required=False)
    p.add_argument("--coord", type=_pairs, required=True, help="'row,col' (1-based)")
    p.add_argument("--mode", choices=["exists-gamma", "fixed-gamma"], default="exists-gamma")
    p.add_argument("--reference", help="partition JSON; defaults to the solved clean partition (needs --gamma)")
    p.add_argument("--lo", type=float, default=None)
    p.add_argument("--hi", type=float, default=None)
    p.add_argument("--tol", type=float, default=1e-6)

    p = add("delta", help="co-assignment deviation between two partitions")
    p.add_argument("--ref", required=True)
    p.add_argument("--pert", required=True)

    p = add("attack-bl1", help="maximize delta under a norm budget")
    _add_data(p)
    _add_solver(p)
    _add_attack(p)
    p.add_argument("--budget", type=float, required=True)

    p = add("attack-bl2", help="minimize the norm needed to reach a target delta")
    _add_data(p)
    _add_solver(p)
    _add_attack(p)
    p.add_argument("--target-delta", type=float, required=True)
    p.add_argument("--a-hi", type=float, default=None)
    p.add_argument("--budget-rtol", type=float, default=1e-3)

    p = add("attack-pen", help="maximize delta - penalty * ||eps||")
    _add_data(p)
    _add_solver(p)
    _add_attack(p)
    p.add_argument("--penalty", type=float, required=True)
    p.add_argument("--a-hi", type=float, default=None)

    p = add("calmness", help="empirical solution-drift ratios on spheres of given radii")
    _add_data(p)
    _add_solver(p)
    p.add_argument("--radii", type=_floats, required=True, help="comma-separated, ascending")
    p.add_argument("--samples", type=int, default=16)
    p.add_argument("--seed", type=int, default=None)
    return parser


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    return int(os.environ.get(SEED_ENV, 0))


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        gamma=args.gamma,
        norm=NormParam(args.p),
        kkt_tol=args.kkt_tol,
        fusion_tol=args.fusion_tol,
        max_iter=args.max_iter,
        admm_rho=args.admm_rho,
    )


def _solver_dict(cfg: SolverConfig) -> dict:
    return {
        "gamma": cfg.gamma,
        "p": cfg.norm.p,
        "q": cfg.norm.q,
        "kkt_tol": cfg.kkt_tol,
        "fusion_tol": cfg.fusion_tol,
        "max_iter": cfg.max_iter,
        "admm_rho": cfg.admm_rho,
    }


def _load(args):
    data = io.load_dataset(args.data, header=args.header)
    spec = io.WeightSpec.parse(args.weights, args.knn_k, args.knn_phi)
    return data, io.build_weights(spec, data), spec


def _cert_dict(cert: certificate.RecoveryCertificate) -> dict:
    return {
        "c1": cert.c1,
        "c2": cert.c2,
        "centroids_distinct": cert.centroids_distinct,
        "gamma_min": cert.gamma_min,
        "gamma_max": cert.gamma_max,
        "admissible": list(cert.admissible) if cert.admissible else None,
    }


def _attack_dict(rep: adversary.AttackReport) -> dict:
    return {
        "eps": rep.eps.eps.T,
        "eps_norm": rep.eps_norm,
        "delta": rep.delta_achieved,
        "partition_before": io.partition_to_json(rep.partition_before),
        "partition_after": io.partition_to_json(rep.partition_after),
        "success": rep.success,
        "score": rep.score,
    }


def _base_config(args, weight_spec) -> dict:
    return {"data": args.data, "header": args.header, "weights": weight_spec.as_dict()}


def _attack_config(args, **extra) -> adversary.AttackConfig:
    return adversary.AttackConfig(
        support=args.support,
        n_candidates=args.n_candidates,
        n_rounds=args.n_rounds,
        shrink=args.shrink,
        seed=_seed(args),
        workers=args.workers,
        **extra,
    )


def _attack_config_dict(atk: adversary.AttackConfig) -> dict:
    out = dict(atk.__dict__)
    out["support"] = None if atk.support is None else [[r + 1, c + 1] for r, c in atk.support]
    return out


def run(args) -> tuple[int, dict]:
    cmd = args.command
    if cmd == "delta":
        ref, pert = io.load_partition(args.ref), io.load_partition(args.pert)
        config = {"ref": args.ref, "pert": args.pert}
        return EXIT_OK, _report(cmd, config, {"delta": delta_mod.delta(ref, pert)}, {})

    data, weights, wspec = _load(args)
    config = _base_config(args, wspec)
    cfg = _solver_config(args) if args.gamma is not None else None
    if cfg is not None:
        config["solver"] = _solver_dict(cfg)

    if cmd == "solve":
        sol = solve(data, weights, cfg)
        result = {
            "partition": io.partition_to_json(sol.partition),
            "cluster_means": [m for m in sol.cluster_means],
            "Y": sol.Y.T,
        }
        diag = {"iterations": sol.iterations, "kkt_residual": sol.kkt_residual}
        return EXIT_OK, _report(cmd, config, result, diag)

    if cmd == "certify":
        eps = io.load_perturbation(args.eps, data, header=args.header)
        config["eps"] = args.eps
        diag = {}
        if args.reference:
            ref = io.load_partition(args.reference)
            config["reference"] = args.reference
        else:
            sol = solve(data, weights, cfg)
            ref = sol.partition
            diag = {"iterations": sol.iterations, "kkt_residual": sol.kkt_residual}
        ok, cert = certificate.certify_unchanged(data, eps, weights, ref, cfg.gamma, cfg.norm.q)
        result = {"guaranteed": ok, "reference": io.partition_to_json(ref), **_cert_dict(cert)}
        return EXIT_OK, _report(cmd, config, result, diag)

    if cmd == "robust-interval":
        if args.mode == "fixed-gamma" and cfg is None:
            raise ValueError("--mode fixed-gamma needs --gamma")
        if args.reference:
            ref = io.load_partition(args.reference)
        elif cfg is not None:
            ref = solve(data, weights, cfg).partition
        else:
            raise ValueError("give --reference or --gamma")
        (coord,) = args.coord
        bounds = None
        if args.lo is not None or args.hi is not None:
            span = 10.0 * (float(data.values.max() - data.values.min()) or 1.0)
            bounds = (args.lo if args.lo is not None else -span, args.hi if args.hi is not None else span)
        q = cfg.norm.q if cfg is not None else NormParam(args.p).q
        gamma = cfg.gamma if args.mode == "fixed-gamma" else None
        iv = certificate.robust_interval(data, weights, ref, coord, gamma=gamma, q=q, bounds=bounds, tol=args.tol)
        config.update(mode=args.mode, coord=[coord[0] + 1, coord[1] + 1], tol=args.tol, reference=args.reference)
        base = float(data.values[coord])
        result = {
            "interval": [iv.lo, iv.hi],
            "empty": iv.empty,
            "value_interval": [base + iv.lo, base + iv.hi],
            "reference": io.partition_to_json(ref),
        }
        return EXIT_OK, _report(cmd, config, result, {})

    if cmd == "attack-bl1":
        atk = _attack_config(args, budget=args.budget)
        rep = adversary.attack_max_deviation(data, weights, cfg, atk)
        config["attack"] = _attack_config_dict(atk)
        diag = {"evaluations": rep.evaluations, "discarded": rep.discarded}
        return EXIT_OK, _report(cmd, config, _attack_dict(rep), diag)

    if cmd == "attack-bl2":
        atk = _attack_config(args, target_delta=args.target_delta, a_hi=args.a_hi, budget_rtol=args.budget_rtol)
        rep = adversary.attack_min_norm(data, weights, cfg, atk)
        config["attack"] = _attack_config_dict(atk)
        diag = {"evaluations": rep.evaluations, "discarded": rep.discarded}
        code = EXIT_OK if rep.success else EXIT_UNREACHABLE
        return code, _report(cmd, config, _attack_dict(rep), diag)

    if cmd == "attack-pen":
        atk = _attack_config(args, penalty=args.penalty, a_hi=args.a_hi)
        rep = adversary.attack_penalized(data, weights, cfg, atk)
        config["attack"] = _attack_config_dict(atk)
        diag = {"evaluations": rep.evaluations, "discarded": rep.discarded}
        return EXIT_OK, _report(cmd, config, _attack_dict(rep), diag)

    if cmd == "calmness":
        seed = _seed(args)
        est = adversary.calmness_probe(data, weights, cfg, args.radii, args.samples, seed)
        config.update(radii=args.radii, samples=args.samples, seed=seed)
        result = {"radii": est.radii, "ratios": est.ratios, "modulus_estimate": est.modulus_estimate, "flips": est.flips}
        return EXIT_OK, _report(cmd, config, result, {"skipped": est.skipped})

    raise ValueError(f"unknown command {cmd}")


def _report(command, config, result, diagnostics) -> dict:
    return {"command": command, "config": config, "result": result, "diagnostics": diagnostics}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return int(exc.code or 0)
    try:
        code, report = run(args)
    except ConvergenceError as exc:
        code = EXIT_NONCONVERGENCE
        report = _report(
            args.command,
            {},
            None,
            {"error": str(exc), "primal_residual": exc.primal_residual, "dual_residual": exc.dual_residual},
        )
    except (ValueError, OSError) as exc:
        print(f"cluster-guard: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    text = io.dumps(report) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
