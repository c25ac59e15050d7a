"""Experiment harness: seeds, grid rules, quantiles, CSV, determinism."""

import csv
import math

import numpy as np
import pytest

from sparselift import (
    ExperimentSpec,
    emit_csv,
    empirical_quantile,
    run_experiment,
)
from sparselift.experiments import (
    derive_seed,
    experiment1_spec,
    experiment2_spec,
    resolve_m,
    resolve_n,
)


def _smoke_spec(**kw):
    # small but nonzero noise: a positive stage-2 radius converges much
    # faster than the equality tail, keeping the harness tests quick
    base = dict(d=16, k_list=(2,), grid=(("mul_k:8", "mul_k:24"),),
                noise_sigma=1e-3, trials=3, quantile_q=0.9,
                methods=("two_stage",), base_seed=0, max_iters=2000, tol=1e-5)
    base.update(kw)
    return ExperimentSpec(**base)


def test_derive_seed_stable_and_distinct():
    a = derive_seed(0, "two_stage", 2, 0, 0)
    assert a == derive_seed(0, "two_stage", 2, 0, 0)
    assert a != derive_seed(0, "two_stage", 2, 0, 1)
    assert a != derive_seed(0, "sdp", 2, 0, 0)
    assert a != derive_seed(1, "two_stage", 2, 0, 0)
    assert 0 <= a < 2 ** 64


def test_resolve_rules():
    assert resolve_m(16, 4, 64) == 16
    assert resolve_m("mul_k:8", 4, 64) == 32
    assert resolve_m("log_rule", 4, 64) == math.ceil(8 * (1 + math.log(16)))
    assert resolve_n(48, 4, 32) == 48
    assert resolve_n("mul_k:24", 4, 32) == 96
    assert resolve_n("mul_m:3", 4, 32) == 96
    with pytest.raises(ValueError):
        resolve_m("cube", 4, 64)
    with pytest.raises(ValueError):
        resolve_n("cube", 4, 32)


def test_empirical_quantile_order_statistic():
    assert empirical_quantile(list(range(1, 11)), 0.9) == 9
    assert empirical_quantile([3.0, 3.0, 3.0], 0.5) == 3.0
    assert empirical_quantile([1.0, 2.0, math.inf], 0.9) == math.inf
    assert empirical_quantile([5.0], 0.9) == 5.0


def test_empirical_quantile_guards():
    with pytest.raises(ValueError):
        empirical_quantile([], 0.9)
    with pytest.raises(ValueError):
        empirical_quantile([1.0], 1.0)


def test_spec_validation():
    with pytest.raises(ValueError):
        _smoke_spec(quantile_q=1.5).validate()
    with pytest.raises(ValueError):
        _smoke_spec(trials=0).validate()
    with pytest.raises(ValueError):
        _smoke_spec(methods=("magic",)).validate()
    with pytest.raises(ValueError):
        _smoke_spec(k_list=(99,)).validate()
    _smoke_spec().validate()


def test_spec_round_trip():
    spec = _smoke_spec()
    again = ExperimentSpec.from_dict(spec.to_dict())
    assert again == spec


def test_smoke_run_structure():
    spec = _smoke_spec(k_list=(2, 4), trials=2)
    report = run_experiment(spec)
    assert len(report.cells) == 2  # one per k, one method, one grid point
    for cell in report.cells:
        assert len(cell.values) == 2
        assert len(cell.seeds) == 2
        assert cell.failures + sum(v != math.inf for v in cell.values) >= cell.trials
        assert cell.quantile == empirical_quantile(cell.values, 0.9)


def test_run_determinism():
    spec = _smoke_spec(trials=2)
    a = run_experiment(spec).to_json()
    b = run_experiment(spec).to_json()
    assert a == b


def test_failures_map_to_inf():
    # one iteration cannot converge; every trial must fail with +inf
    spec = _smoke_spec(trials=2, max_iters=1)
    report = run_experiment(spec)
    cell = report.cells[0]
    assert cell.failures == 2
    assert all(v == math.inf for v in cell.values)
    assert cell.quantile == math.inf


def test_emit_csv_round_trip(tmp_path):
    spec = _smoke_spec(trials=3)
    report = run_experiment(spec)
    path = tmp_path / "out.csv"
    emit_csv(report, str(path))

    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == len(report.cells)

    with open(f"{path}.raw.csv") as fh:
        raw = list(csv.DictReader(fh))
    # recompute quantiles from raw values and match the aggregate file
    for row in rows:
        vals = [float(r["rel_error"]) for r in raw
                if (r["method"], r["k"], r["m"], r["n"])
                == (row["method"], row["k"], row["m"], row["n"])]
        assert len(vals) == int(row["trials"])
        got = empirical_quantile(vals, float(row["q"]))
        want = float(row["quantile"])
        # equality first so failure cells (inf quantile) round-trip too
        assert got == want or abs(got - want) <= 1e-12


def test_emit_csv_bad_path(tmp_path):
    spec = _smoke_spec(trials=1)
    report = run_experiment(spec)
    with pytest.raises(OSError):
        emit_csv(report, str(tmp_path / "no" / "such" / "dir" / "x.csv"))


def test_full_scale_spec_shapes():
    s1 = experiment1_spec()
    assert s1.d == 256
    assert s1.k_list == tuple(range(2, 21, 2))
    assert len(s1.grid) == 5
    assert s1.trials == 100
    assert s1.noise_sigma == pytest.approx(1e-2)  # variance 1e-4
    s2 = experiment2_spec()
    assert s2.grid == (("log_rule", "mul_m:3"),)
    assert s2.methods == ("two_stage", "sdp", "sdp_l1", "l1")


def test_progress_callback_invoked():
    calls = []
    spec = _smoke_spec(trials=2)
    run_experiment(spec, progress=lambda *a: calls.append(a))
    assert len(calls) == 2


def test_two_stage_quantile_non_explosive():
    # desk-scale sweep at (8k, 24k): bounded 0.9-quantile error
    spec = _smoke_spec(d=32, k_list=(2, 3), trials=3, max_iters=20000)
    report = run_experiment(spec)
    for cell in report.cells:
        assert cell.quantile <= 1.0


def test_report_json_serializes_inf():
    spec = _smoke_spec(trials=1, max_iters=1)
    text = run_experiment(spec).to_json()
    assert '"inf"' in text
