"""Stage two: lifted-domain l1 minimization and its regularized twin."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparselift import (
    generate_instance,
    make_ensemble,
    sigma_max,
    soft_threshold,
    solve_l1_min,
    solve_l1_reg,
)
from sparselift.ensemble import lift
from sparselift.sparse import SparseSolveConfig, reg_objective


def _cfg(**kw):
    base = dict(max_iters=5000, tol_primal=1e-6, tol_dual=1e-6)
    base.update(kw)
    return SparseSolveConfig(**base)


# ---------------------------------------------------------------------------
# soft threshold
# ---------------------------------------------------------------------------

def test_soft_threshold_zero_is_identity(rng):
    M = rng.standard_normal((4, 4))
    assert np.array_equal(soft_threshold(M, 0.0), M)


def test_soft_threshold_scalars():
    assert soft_threshold(np.array([[3.0]]), 1.0)[0, 0] == 2.0
    assert soft_threshold(np.array([[-0.5]]), 1.0)[0, 0] == 0.0
    assert soft_threshold(np.array([[-3.0]]), 1.0)[0, 0] == -2.0


def test_soft_threshold_negative_t_rejected():
    with pytest.raises(ValueError):
        soft_threshold(np.eye(2), -0.1)


@given(st.integers(min_value=0, max_value=2 ** 32 - 1),
       st.floats(min_value=0.01, max_value=2.0))
@settings(max_examples=30, deadline=None)
def test_soft_threshold_is_prox_of_l1(seed, t):
    # S_t(M) minimizes t||Z||_1 + 0.5||Z - M||_F^2
    prng = np.random.default_rng(seed)
    M = prng.standard_normal((3, 3))
    Z = soft_threshold(M, t)
    obj = t * np.abs(Z).sum() + 0.5 * np.linalg.norm(Z - M) ** 2
    for _ in range(20):
        Zp = Z + 0.1 * prng.standard_normal((3, 3))
        objp = t * np.abs(Zp).sum() + 0.5 * np.linalg.norm(Zp - M) ** 2
        assert obj <= objp + 1e-12


# ---------------------------------------------------------------------------
# spectral norm and step sizing
# ---------------------------------------------------------------------------

def test_sigma_max_matches_svd(rng):
    psi = rng.standard_normal((7, 5))
    assert abs(sigma_max(psi) - np.linalg.svd(psi, compute_uv=False)[0]) < 1e-6


def test_step_tau_safety_enforced(small_ens):
    smax = sigma_max(small_ens.psi)
    cfg = _cfg(step_tau=1.5 / smax ** 4)
    with pytest.raises(ValueError):
        solve_l1_min(small_ens.psi, np.zeros((small_ens.m, small_ens.m)), cfg)


# ---------------------------------------------------------------------------
# constrained solver
# ---------------------------------------------------------------------------

def test_l1_min_zero_when_ball_covers_b_hat(small_ens, rng):
    B = rng.standard_normal((small_ens.m, small_ens.m))
    B = 0.5 * (B + B.T)
    res = solve_l1_min(small_ens.psi, B, _cfg(radius=2.0 * np.linalg.norm(B)))
    assert res.converged
    assert res.l1_value <= 1e-10


def test_l1_min_identity_psi_pins_solution(rng):
    B = rng.standard_normal((6, 6))
    B = 0.5 * (B + B.T)
    res = solve_l1_min(np.eye(6), B, _cfg(radius=0.0, max_iters=20000))
    assert np.linalg.norm(res.x_hat_matrix - B) <= 1e-4 * np.linalg.norm(B)


def test_l1_min_reference_recovery():
    # d=32, k=3, m=24, b_hat built exactly from the truth
    ens = make_ensemble(32, 24, 72, seed=1)
    inst = generate_instance(ens, 3, 0.0, seed=1)
    b_hat = ens.psi @ inst.lift @ ens.psi.T
    res = solve_l1_min(ens.psi, b_hat, _cfg(radius=1e-6, max_iters=20000))
    rel = np.linalg.norm(res.x_hat_matrix - inst.lift) / np.linalg.norm(inst.lift)
    assert rel <= 1e-2


def test_l1_min_optimality_sandwich():
    # when X* is feasible the minimizer's l1 value cannot exceed ||X*||_1
    ens = make_ensemble(16, 16, 80, seed=0)
    inst = generate_instance(ens, 2, 0.0, seed=0)
    b_hat = ens.psi @ inst.lift @ ens.psi.T
    res = solve_l1_min(ens.psi, b_hat, _cfg(radius=1e-4, max_iters=20000,
                                            tol_primal=1e-7, tol_dual=1e-7))
    assert res.l1_value <= np.abs(inst.lift).sum() + 1e-4


def test_l1_min_negative_radius_rejected(small_ens):
    with pytest.raises(ValueError):
        solve_l1_min(small_ens.psi, np.zeros((small_ens.m, small_ens.m)),
                     _cfg(radius=-1.0))


def test_l1_min_nonconvergence_flagged_not_raised(small_ens, small_inst):
    b_hat = small_ens.psi @ small_inst.lift @ small_ens.psi.T
    res = solve_l1_min(small_ens.psi, b_hat, _cfg(radius=0.0, max_iters=3))
    assert not res.converged


def test_l1_min_determinism(small_ens, small_inst):
    b_hat = small_ens.psi @ small_inst.lift @ small_ens.psi.T
    a = solve_l1_min(small_ens.psi, b_hat, _cfg(radius=1e-5, max_iters=500))
    b = solve_l1_min(small_ens.psi, b_hat, _cfg(radius=1e-5, max_iters=500))
    assert np.array_equal(a.x_hat_matrix, b.x_hat_matrix)


def test_l1_min_diagnostics_csv(tmp_path, small_ens, small_inst):
    path = tmp_path / "s2.csv"
    b_hat = small_ens.psi @ small_inst.lift @ small_ens.psi.T
    res = solve_l1_min(small_ens.psi, b_hat,
                       _cfg(radius=1e-4, max_iters=200,
                            diagnostics_path=str(path)))
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "iter,primal_res,dual_res,l1,feas_gap"
    assert len(lines) == res.iterations + 1


# ---------------------------------------------------------------------------
# regularized solver
# ---------------------------------------------------------------------------

def test_l1_reg_zero_for_large_lambda(small_ens, small_inst):
    b_hat = small_ens.psi @ small_inst.lift @ small_ens.psi.T
    lam = 2.0 * np.abs(small_ens.psi.T @ b_hat @ small_ens.psi).max()
    res = solve_l1_reg(small_ens.psi, b_hat, lam, _cfg())
    assert np.linalg.norm(res.x_hat_matrix) <= 1e-10


def test_l1_reg_zero_b_hat(small_ens):
    res = solve_l1_reg(small_ens.psi, np.zeros((small_ens.m, small_ens.m)),
                       0.1, _cfg())
    assert np.linalg.norm(res.x_hat_matrix) == 0.0


def test_l1_reg_requires_positive_lambda(small_ens):
    with pytest.raises(ValueError):
        solve_l1_reg(small_ens.psi, np.zeros((small_ens.m, small_ens.m)),
                     0.0, _cfg())


def test_l1_reg_objective_never_increases(small_ens, small_inst):
    # re-run the iteration by hand and track the objective
    psi = small_ens.psi
    b_hat = psi @ small_inst.lift @ psi.T
    tau = 0.99 / sigma_max(psi) ** 4
    lam = 1e-3
    X = np.zeros((small_ens.d, small_ens.d))
    prev = reg_objective(psi, b_hat, lam, X)
    for _ in range(200):
        grad = psi.T @ (psi @ X @ psi.T - b_hat) @ psi
        X = soft_threshold(X - tau * grad, tau * lam)
        cur = reg_objective(psi, b_hat, lam, X)
        assert cur <= prev + 1e-12 * max(1.0, abs(prev))
        prev = cur


def test_l1_reg_matches_constrained_for_small_lambda(small_ens, small_inst):
    # run the regularized solver, then the constrained one at the
    # realized fidelity level; the two programs then share a minimizer
    psi = small_ens.psi
    b_hat = psi @ small_inst.lift @ psi.T
    reg = solve_l1_reg(psi, b_hat, 1e-3, _cfg(max_iters=30000, tol_primal=1e-8))
    assert reg.converged
    r = np.linalg.norm(psi @ reg.x_hat_matrix @ psi.T - b_hat)
    con = solve_l1_min(psi, b_hat, _cfg(radius=r, max_iters=30000,
                                        tol_primal=1e-8, tol_dual=1e-8))
    rel = (np.linalg.norm(reg.x_hat_matrix - con.x_hat_matrix)
           / max(np.linalg.norm(con.x_hat_matrix), 1e-12))
    assert rel <= 1e-2
