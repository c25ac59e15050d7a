"""Command-line harness.

Subcommands:
    solve        recover a single synthetic instance, print a JSON summary
    verify       run the oracle/lemma checker suite (exit 1 on any FAIL)
    ensemble     print ensemble statistics
    experiment1  sparsity sweep over the (m, n) = (c1*k, c2*k) grid
    experiment2  method comparison at m = ceil(2k(1+log(d/k))), n = 3m

Exit codes: 0 success, 1 on any FAIL from `verify`, 2 on invalid
arguments (argparse default).
"""

import argparse
import json
import sys

import numpy as np

from . import experiments, oracles
from .ensemble import estimate_rip_constant, generate_instance, make_ensemble
from .estimators import L1Recovery, TraceL1Recovery, TwoStageRecovery

LARGE_SCALE_WARNING = (
    "warning: d >= 128: the baseline equality-projection factorization is "
    "dense in n x d^2 and this run may take hours\n")


def _add_common(parser):
    parser.add_argument("--d", type=int, default=None, help="signal dimension")
    parser.add_argument("--k", type=str, default=None,
                        help="sparsity level(s), comma separated")
    parser.add_argument("--trials", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--sigma", type=float, default=None,
                        help="noise standard deviation")
    parser.add_argument("--out", type=str, default=None, help="output CSV path")
    parser.add_argument("--methods", type=str, default=None,
                        help="comma separated subset of two_stage,sdp,sdp_l1,l1")
    parser.add_argument("--quantile", type=float, default=None)
    parser.add_argument("--config", type=str, default=None,
                        help="JSON file mirroring the experiment spec; "
                             "explicit flags override file values")


def build_parser():
    parser = argparse.ArgumentParser(prog="sparselift")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="recover one synthetic instance")
    _add_common(p_solve)
    p_solve.add_argument("--m", type=int, default=None)
    p_solve.add_argument("--n", type=int, default=None)
    p_solve.add_argument("--method", type=str, default="two_stage",
                         choices=experiments.METHODS)
    p_solve.add_argument("--stage2-C", type=float, default=2.0)

    p_verify = sub.add_parser("verify", help="run the checker suite")
    _add_common(p_verify)
    p_verify.add_argument("--m", type=int, default=None)

    p_ens = sub.add_parser("ensemble", help="print ensemble statistics")
    _add_common(p_ens)
    p_ens.add_argument("--m", type=int, default=None)
    p_ens.add_argument("--n", type=int, default=None)
    p_ens.add_argument("--psi-kind", type=str, default="gaussian_scaled",
                       choices=("gaussian_scaled", "identity"))

    for name in ("experiment1", "experiment2"):
        p = sub.add_parser(name, help=f"run {name}")
        _add_common(p)
    return parser


def _spec_from_args(args, builder):
    file_doc = {}
    if args.config:
        with open(args.config) as fh:
            file_doc = json.load(fh)
    spec = builder(d=64, trials=10)
    doc = spec.to_dict()
    doc.update(file_doc)
    flag_overrides = {
        "d": args.d,
        "trials": args.trials,
        "base_seed": args.seed,
        "noise_sigma": args.sigma,
        "quantile_q": args.quantile,
    }
    if args.k is not None:
        flag_overrides["k_list"] = [int(v) for v in args.k.split(",")]
    if args.methods is not None:
        flag_overrides["methods"] = args.methods.split(",")
    doc.update({key: val for key, val in flag_overrides.items() if val is not None})
    return experiments.ExperimentSpec.from_dict(doc)


def _cmd_experiment(args, builder):
    try:
        spec = _spec_from_args(args, builder)
        spec.validate()
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    if spec.d >= 128:
        sys.stderr.write(LARGE_SCALE_WARNING)

    def progress(method, k, gi, t, rel):
        sys.stderr.write(f"{method} k={k} grid={gi} trial={t}: {rel:.3e}\n")

    report = experiments.run_experiment(spec, progress=progress)
    if args.out:
        experiments.emit_csv(report, args.out)
        sys.stderr.write(f"wrote {args.out} and {args.out}.raw.csv\n")
    else:
        print(report.to_json())
    return 0


def _cmd_solve(args):
    d = args.d or 32
    k = int(args.k) if args.k else 2
    m = args.m or 8 * k
    n = args.n or 3 * m
    seed = args.seed or 0
    sigma = args.sigma or 0.0
    ens = make_ensemble(d, m, n, seed, "gaussian_scaled")
    inst = generate_instance(ens, k, sigma, seed)

    if args.method == "two_stage":
        est = TwoStageRecovery(k=k, stage2_C=args.stage2_C)
    elif args.method == "sdp":
        est = TraceL1Recovery(lam=0.0, fidelity="equality" if sigma == 0 else "ball", k=k)
    elif args.method == "sdp_l1":
        est = TraceL1Recovery(lam=0.2, fidelity="equality" if sigma == 0 else "ball", k=k)
    else:
        est = L1Recovery(fidelity="equality" if sigma == 0 else "ball", k=k)
    est.fit(ens, inst.y, epsilon=inst.epsilon)
    doc = est.recovery_result(inst).to_dict()
    doc["instance"] = {"d": d, "k": k, "m": m, "n": n, "seed": seed, "sigma": sigma}
    print(json.dumps(doc, indent=2))
    return 0


def _cmd_verify(args):
    d = args.d or 64
    k = int(args.k) if args.k else 2
    trials = args.trials or 10_000
    seed = args.seed or 0
    results = oracles.run_verification(d=d, k=k, m=args.m, trials=trials, seed=seed)
    any_fail = False
    for name, stat, bound, ok in results:
        verdict = "PASS" if ok else "FAIL"
        any_fail |= not ok
        print(f"{name:28s} statistic={stat:.6g} bound={bound:.6g} {verdict}")
    return 1 if any_fail else 0


def _cmd_ensemble(args):
    d = args.d or 64
    m = args.m or 32
    n = args.n or 96
    seed = args.seed or 0
    k = int(args.k) if args.k else 2
    ens = make_ensemble(d, m, n, seed, args.psi_kind)
    col_sq = np.sum(ens.psi ** 2, axis=0)
    stats = {
        "d": d, "m": m, "n": n, "seed": seed, "psi_kind": args.psi_kind,
        "psi_col_sq_norm_mean": float(np.mean(col_sq)),
        "psi_col_sq_norm_min": float(np.min(col_sq)),
        "psi_col_sq_norm_max": float(np.max(col_sq)),
        "w_row_norm_mean": float(np.mean(np.linalg.norm(ens.w_stack, axis=1))),
        "rip_estimate_2k": estimate_rip_constant(ens.psi, k, 2000, seed),
    }
    print(json.dumps(stats, indent=2))
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "solve":
        return _cmd_solve(args)
    if args.command == "verify":
        return _cmd_verify(args)
    if args.command == "ensemble":
        return _cmd_ensemble(args)
    if args.command == "experiment1":
        return _cmd_experiment(args, experiments.experiment1_spec)
    if args.command == "experiment2":
        return _cmd_experiment(args, experiments.experiment2_spec)
    return 2


if __name__ == "__main__":
    sys.exit(main())
