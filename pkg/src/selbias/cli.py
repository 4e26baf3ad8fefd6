"""Command line entry point: ``selbias <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import bounds, clustering, harness, kmm
from ._accel import backend
from .bias import make_model
from .kernels import KernelSpec


def _kmm_config(args) -> kmm.KmmConfig:
    return kmm.KmmConfig(args.b_prime, args.epsilon, args.kmm_tol, args.kmm_max_iter)


def _add_kmm_args(p):
    p.add_argument("--b-prime", type=float, default=1000.0, help="upper bound on KMM weights")
    p.add_argument("--epsilon", type=float, default=0.0, help="tolerance on the mean weight, in [0, 1/2]")
    p.add_argument("--kmm-tol", type=float, default=1e-10, help="objective-change stopping tolerance")
    p.add_argument("--kmm-max-iter", type=int, default=50_000)


def _add_kernel_args(p):
    p.add_argument("--lambda", dest="lam", type=float, default=1e-3, help="regularization strength")
    p.add_argument("--bandwidth", type=float, default=None, help="Gaussian bandwidth (default sqrt(d/2))")


def _dump(obj):
    print(json.dumps(obj, indent=2, sort_keys=True))


def cmd_run(args):
    config = harness.ExperimentConfig(
        dataset_path=args.dataset,
        seed=args.seed,
        num_projections=args.projections,
        projection_trials=args.projection_trials,
        folds=args.folds,
        lam=args.lam,
        kernel_bandwidth=args.bandwidth,
        min_leaf=args.min_leaf,
        kmm=_kmm_config(args),
        methods=tuple(args.methods.split(",")),
        delta=args.delta,
        unbiased=args.unbiased,
    )
    report = harness.run(config)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        paths = report.write(args.out)
        logging.info("wrote %s", ", ".join(map(str, paths)))
    sys.stdout.write(report.to_text())


def cmd_bounds(args):
    kind = args.kind
    if kind == "beta":
        _dump(bounds.beta_coefficients(args.sigma, args.kappa, args.lam, args.lambda_max).to_dict())
    elif kind == "frequency":
        _dump({"value": clustering.frequency_bound(args.m_distinct, args.n, args.p0, args.delta)})
    elif kind == "cluster-distance":
        l1, l2 = clustering.cluster_distance_bounds(args.B, args.c_max, args.k, args.q0, args.n, args.m, args.delta)
        _dump({"l1": l1, "l2": l2})
    elif kind == "cluster-gap":
        r1, r2 = bounds.cluster_gap_bounds(args.sigma, args.kappa, args.lam, args.lambda_max, args.B,
                                           args.m_distinct, args.p0, args.n, args.m, args.delta)
        _dump([r1.to_dict(), r2.to_dict()])
    elif kind == "kmm-deviation":
        _dump({"value": kmm.kmm_l2_deviation_bound(args.epsilon, args.b_prime, args.m, args.n, args.kappa,
                                                   args.lambda_min, args.delta)})
    elif kind == "kmm-gap":
        out = [bounds.kmm_gap_bound(args.sigma, args.kappa, args.lam, args.lambda_max, args.lambda_min,
                                    args.b_prime, args.epsilon, args.m, args.n, args.delta).to_dict()]
        if args.epsilon == 0:
            out.append(bounds.kmm_gap_bound_eps0(args.sigma, args.kappa, args.lam, args.lambda_max / args.lambda_min,
                                                 args.b_prime, args.m, args.n, args.delta).to_dict())
        _dump(out)
    elif kind == "crossover":
        _dump(bounds.crossover_diagnostic(args.lambda_min, args.B, args.m_distinct, args.n).to_dict())


def _pool_from_args(args):
    if args.dataset:
        return harness.load_dataset(args.dataset)
    X, y = harness.make_surrogate(rows=args.rows, seed=args.seed)
    Xs, mean, std = harness.standardize(X)
    return harness.Pool(Xs, y, mean, std)


def cmd_probe(args):
    pool = _pool_from_args(args)
    idx = np.random.default_rng(args.seed).choice(len(pool), size=min(args.sample, len(pool)), replace=False)
    X, y = pool.X[np.sort(idx)], pool.y[np.sort(idx)]
    kernel = KernelSpec(args.bandwidth) if args.bandwidth else KernelSpec.default(pool.dim)
    probe = harness.empirical_stability_probe(X, y - y.mean(), kernel, args.lam, args.pairs, args.seed)
    _dump(probe.to_dict())
    return 0 if probe.max_ratio <= 1 + 1e-6 else 1


def cmd_unbiased(args):
    pool = _pool_from_args(args)
    model = make_model(pool.X, args.seed)
    rec = harness.verify_unbiasedness(pool.X, pool.y, model, args.trials, args.seed)
    _dump(rec.to_dict())


def cmd_solve_kmm(args):
    S = harness.load_features(args.train)
    U = harness.load_features(args.pool)
    kernel = KernelSpec(args.bandwidth) if args.bandwidth else KernelSpec.default(S.shape[1])
    sol = kmm.solve(S, U, kernel, _kmm_config(args))
    _dump({
        "gamma_hat": sol.gamma_hat.tolist(),
        "weights": kmm.normalized_weights(sol).tolist(),
        "epsilon_prime": sol.epsilon_prime,
        "objective": sol.objective,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "warnings": list(sol.warnings),
    })


def cmd_make_surrogate(args):
    X, y = harness.make_surrogate(rows=args.rows, features=args.features, seed=args.seed)
    harness.write_dataset(args.out, X, y, header=[f"x{j}" for j in range(X.shape[1])] + ["y"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="selbias", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="cross-validated comparison of the four weighting methods")
    p.add_argument("--dataset", required=True, help="CSV, label in the last column")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--projections", type=int, default=10)
    p.add_argument("--projection-trials", type=int, default=20)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--min-leaf", type=int, default=clustering.DEFAULT_MIN_LEAF)
    p.add_argument("--methods", default=",".join(harness.METHODS))
    p.add_argument("--delta", type=float, default=0.05, help="confidence parameter of the bounds")
    p.add_argument("--unbiased", action="store_true", help="sample every point with probability 1/2")
    p.add_argument("--out", help="report prefix; writes PREFIX.txt, PREFIX.json, PREFIX.timings.json")
    _add_kernel_args(p)
    _add_kmm_args(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bounds", help="evaluate a bound calculator on explicit inputs")
    p.add_argument("kind", choices=["beta", "frequency", "cluster-distance", "cluster-gap",
                                    "kmm-deviation", "kmm-gap", "crossover"])
    for name, typ, default in [
        ("sigma", float, 1.0), ("kappa", float, 1.0), ("lambda", float, 1.0), ("lambda-max", float, 1.0),
        ("lambda-min", float, 1.0), ("B", float, 1.0), ("b-prime", float, 1.0), ("epsilon", float, 0.0),
        ("m-distinct", int, 1), ("p0", float, 1.0), ("q0", float, 1.0), ("c-max", int, 1), ("k", int, 1),
        ("n", int, 1), ("m", int, 1), ("delta", float, 0.05),
    ]:
        dest = "lam" if name == "lambda" else name.replace("-", "_")
        p.add_argument(f"--{name}", dest=dest, type=typ, default=default)
    p.set_defaults(func=cmd_bounds)

    for name, func, helptext in [
        ("probe-stability", cmd_probe, "measure cost deltas against the stability envelopes"),
        ("verify-unbiasedness", cmd_unbiased, "Monte Carlo check of inverse-probability weighting"),
    ]:
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--dataset", help="CSV, label in the last column (default: synthetic surrogate)")
        p.add_argument("--rows", type=int, default=500, help="surrogate size when no dataset is given")
        p.add_argument("--seed", type=int, default=0)
        if name == "probe-stability":
            p.add_argument("--sample", type=int, default=30)
            p.add_argument("--pairs", type=int, default=100)
            p.add_argument("--lambda", dest="lam", type=float, default=0.5)
            p.add_argument("--bandwidth", type=float, default=None)
        else:
            p.add_argument("--trials", type=int, default=5000)
        p.set_defaults(func=func)

    p = sub.add_parser("solve-kmm", help="KMM weights for a training set against a pool")
    p.add_argument("--train", required=True, help="CSV of training features")
    p.add_argument("--pool", required=True, help="CSV of unlabeled pool features")
    p.add_argument("--bandwidth", type=float, default=None)
    _add_kmm_args(p)
    p.set_defaults(func=cmd_solve_kmm)

    p = sub.add_parser("make-surrogate", help="write a housing-shaped synthetic CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--rows", type=int, default=506)
    p.add_argument("--features", type=int, default=13)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_make_surrogate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger(__name__).info("kernels backend: %s", backend())
    try:
        return args.func(args) or 0
    except (ValueError, OSError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"selbias {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
