"""Monte-Carlo experiment harness: trial sweeps, quantiles, CSV emission.

A sweep is a pure function of its spec: every trial derives its seed
from a stable hash of (base_seed, method, k, grid index, trial index),
so reports are reproducible and adding a method or sparsity level never
shifts the randomness of other cells.  Individual solver failures are
recorded with error value +inf (excluding them would bias the quantiles
optimistically) and never abort a sweep.
"""

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .ensemble import generate_instance, make_ensemble
from .estimators import L1Recovery, TraceL1Recovery, TwoStageRecovery

METHODS = ("two_stage", "sdp", "sdp_l1", "l1")


def derive_seed(base_seed, *labels):
    """Stable 64-bit seed from a base seed and a tuple of labels."""
    h = hashlib.blake2b(digest_size=8)
    h.update(repr((int(base_seed),) + tuple(labels)).encode())
    return int.from_bytes(h.digest(), "little")


def resolve_m(rule, k, d):
    """m from a rule: an int, "mul_k:c" (m = c*k), or "log_rule"."""
    if isinstance(rule, int):
        return rule
    if rule == "log_rule":
        return math.ceil(2 * k * (1 + math.log(d / k)))
    if isinstance(rule, str) and rule.startswith("mul_k:"):
        return int(rule.split(":")[1]) * k
    raise ValueError(f"unknown m rule {rule!r}")


def resolve_n(rule, k, m):
    """n from a rule: an int, "mul_k:c" (n = c*k), or "mul_m:c" (n = c*m)."""
    if isinstance(rule, int):
        return rule
    if isinstance(rule, str) and rule.startswith("mul_k:"):
        return int(rule.split(":")[1]) * k
    if isinstance(rule, str) and rule.startswith("mul_m:"):
        return int(rule.split(":")[1]) * m
    raise ValueError(f"unknown n rule {rule!r}")


@dataclass
class ExperimentSpec:
    d: int = 64
    k_list: tuple = (2, 4)
    grid: tuple = (("mul_k:8", "mul_k:24"),)
    noise_sigma: float = 0.0
    trials: int = 10
    quantile_q: float = 0.9
    methods: tuple = ("two_stage",)
    base_seed: int = 0
    # Solver knobs (artifact additions, not part of the sweep geometry).
    max_iters: int = 4000
    tol: float = 1e-5
    stage2_C: float = 2.0

    def validate(self):
        if not 0 < self.quantile_q < 1:
            raise ValueError("quantile_q must lie in (0, 1)")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for method in self.methods:
            if method not in METHODS:
                raise ValueError(f"unknown method {method!r}; expected {METHODS}")
        for k in self.k_list:
            if k > self.d or k < 1:
                raise ValueError(f"invalid sparsity k={k} for d={self.d}")
            for m_rule, n_rule in self.grid:
                m = resolve_m(m_rule, k, self.d)
                n = resolve_n(n_rule, k, m)
                if m < 1 or n < 1:
                    raise ValueError(f"grid rule {(m_rule, n_rule)} yields "
                                     f"m={m}, n={n} at k={k}")

    def to_dict(self):
        doc = asdict(self)
        doc["k_list"] = list(self.k_list)
        doc["grid"] = [list(pair) for pair in self.grid]
        doc["methods"] = list(self.methods)
        return doc

    @classmethod
    def from_dict(cls, doc):
        doc = dict(doc)
        if "k_list" in doc:
            doc["k_list"] = tuple(doc["k_list"])
        if "grid" in doc:
            doc["grid"] = tuple(tuple(pair) for pair in doc["grid"])
        if "methods" in doc:
            doc["methods"] = tuple(doc["methods"])
        return cls(**doc)


@dataclass
class CellReport:
    method: str
    k: int
    m: int
    n: int
    values: list
    seeds: list
    quantile: float
    mean: float
    failures: int
    trials: int


@dataclass
class ExperimentReport:
    spec: dict
    cells: list = field(default_factory=list)

    def to_dict(self):
        return {"spec": self.spec, "cells": [asdict(c) for c in self.cells]}

    def to_json(self):
        # non-finite floats become strings so the output stays valid JSON
        def clean(o):
            if isinstance(o, float) and not math.isfinite(o):
                if math.isnan(o):
                    return "nan"
                return "inf" if o > 0 else "-inf"
            if isinstance(o, dict):
                return {key: clean(val) for key, val in o.items()}
            if isinstance(o, (list, tuple)):
                return [clean(val) for val in o]
            return o
        return json.dumps(clean(self.to_dict()), sort_keys=True)


def empirical_quantile(values, q):
    """The ceil(q*T)-th order statistic of T values (failures propagate)."""
    if len(values) == 0:
        raise ValueError("empty value list")
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    ordered = sorted(values)
    return ordered[math.ceil(q * len(ordered)) - 1]


def _make_estimator(method, k, spec):
    common = dict(k=k, max_iters=spec.max_iters, tol=spec.tol)
    fidelity = "equality" if spec.noise_sigma == 0 else "ball"
    if method == "two_stage":
        return TwoStageRecovery(stage2_C=spec.stage2_C, **common)
    if method == "sdp":
        return TraceL1Recovery(lam=0.0, fidelity=fidelity, **common)
    if method == "sdp_l1":
        return TraceL1Recovery(lam=0.2, fidelity=fidelity, **common)
    if method == "l1":
        return L1Recovery(fidelity=fidelity, **common)
    raise ValueError(f"unknown method {method!r}")


def run_trial(method, spec, k, m, n, seed):
    """One (ensemble, instance, solve) cycle; returns (rel_error, failed)."""
    ens = make_ensemble(spec.d, m, n, seed, "gaussian_scaled")
    inst = generate_instance(ens, k, spec.noise_sigma, seed)
    est = _make_estimator(method, k, spec)
    try:
        est.fit(ens, inst.y, epsilon=inst.epsilon)
    except (np.linalg.LinAlgError, ValueError):
        return math.inf, True
    if not est.converged_:
        return math.inf, True
    rel = float(np.linalg.norm(est.X_hat_ - inst.lift) / np.linalg.norm(inst.lift))
    return rel, False


def run_experiment(spec, progress=None):
    """Run the full sweep described by `spec` deterministically."""
    spec.validate()
    report = ExperimentReport(spec=spec.to_dict())
    for method in spec.methods:
        for k in spec.k_list:
            for gi, (m_rule, n_rule) in enumerate(spec.grid):
                m = resolve_m(m_rule, k, spec.d)
                n = resolve_n(n_rule, k, m)
                values, seeds, failures = [], [], 0
                for t in range(spec.trials):
                    seed = derive_seed(spec.base_seed, method, k, gi, t)
                    rel, failed = run_trial(method, spec, k, m, n, seed)
                    values.append(rel)
                    seeds.append(seed)
                    failures += int(failed)
                    if progress is not None:
                        progress(method, k, gi, t, rel)
                report.cells.append(CellReport(
                    method=method, k=k, m=m, n=n, values=values, seeds=seeds,
                    quantile=empirical_quantile(values, spec.quantile_q),
                    mean=float(np.mean(values)), failures=failures,
                    trials=spec.trials))
    return report


def emit_csv(report, path):
    """Aggregate CSV at `path`, raw per-trial values at `<path>.raw.csv`."""
    q = report.spec["quantile_q"]
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "k", "m", "n", "q", "quantile", "mean",
                             "failures", "trials"])
            for c in report.cells:
                writer.writerow([c.method, c.k, c.m, c.n, q, c.quantile,
                                 c.mean, c.failures, c.trials])
        raw_path = f"{path}.raw.csv"
        with open(raw_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "k", "m", "n", "trial", "seed", "rel_error"])
            for c in report.cells:
                for t, (seed, val) in enumerate(zip(c.seeds, c.values)):
                    writer.writerow([c.method, c.k, c.m, c.n, t, seed, val])
    except OSError as exc:
        raise OSError(f"failed writing experiment CSV to {path!r}: {exc}") from exc
    return path


def experiment1_spec(d=256, trials=100, base_seed=0, **overrides):
    """The five (m, n) = (c1*k, c2*k) grid rules at sigma^2 = 1e-4."""
    spec = ExperimentSpec(
        d=d, k_list=tuple(range(2, 21, 2)),
        grid=(("mul_k:8", "mul_k:24"), ("mul_k:8", "mul_k:32"),
              ("mul_k:12", "mul_k:36"), ("mul_k:12", "mul_k:48"),
              ("mul_k:16", "mul_k:48")),
        noise_sigma=1e-2, trials=trials, quantile_q=0.9,
        methods=("two_stage",), base_seed=base_seed)
    return _apply_overrides(spec, overrides)


def experiment2_spec(d=256, trials=100, base_seed=0, **overrides):
    """Method comparison at m = ceil(2k(1 + log(d/k))), n = 3m."""
    spec = ExperimentSpec(
        d=d, k_list=tuple(range(2, 21, 2)),
        grid=(("log_rule", "mul_m:3"),),
        noise_sigma=1e-2, trials=trials, quantile_q=0.9,
        methods=("two_stage", "sdp", "sdp_l1", "l1"), base_seed=base_seed)
    return _apply_overrides(spec, overrides)


def _apply_overrides(spec, overrides):
    doc = spec.to_dict()
    doc.update({key: val for key, val in overrides.items() if val is not None})
    return ExperimentSpec.from_dict(doc)
