"""Comparison methods operating directly on the lifted d x d variable.

These solve, over the full measurement operator A (no two-stage
decoupling):

    sdp / sdp_l1:  minimize trace(X) + lam ||X||_1
                   subject to X >= 0 and A(X) = y     (equality)
                   or || A(X) - y ||_2 <= radius      (ball)

    l1:            minimize ||X||_1 subject to the same fidelity.

lam = 0 reduces sdp_l1 to the plain SDP (the l1 prox becomes the
identity).  Equality fidelity uses a cached least-squares factorization
of the flattened n x d^2 operator for an exact affine projection; this
is the scaling bottleneck at large d and is intended for desk-scale
problems.  Noisy runs should use ball fidelity, since equality is
almost surely infeasible under noise.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .lowrank import (
    STATUS_CONVERGED,
    STATUS_INFEASIBLE,
    STATUS_MAX_ITERS,
    _shrink_psd,
    project_l2_ball,
)
from .sparse import soft_threshold
from .validation import check_vector

FIDELITY_KINDS = ("equality", "ball")


@dataclass
class BaselineConfig:
    lam: float = 0.0
    fidelity: str = "equality"
    radius: float = 0.0
    max_iters: int = 5000
    tol_primal: float = 1e-6
    tol_dual: float = 1e-6
    penalty_rho: float = 1.0

    def validate(self):
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.fidelity not in FIDELITY_KINDS:
            raise ValueError(f"fidelity must be one of {FIDELITY_KINDS}")
        if self.radius < 0:
            raise ValueError("ball radius must be nonnegative")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        for name in ("tol_primal", "tol_dual", "penalty_rho"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass
class BaselineResult:
    x_matrix: np.ndarray
    iterations: int
    primal_residual: float
    dual_residual: float
    feasibility_gap: float
    status: str = STATUS_CONVERGED

    @property
    def converged(self):
        return self.status == STATUS_CONVERGED


class _FlatOperator:
    """Dense flattening of A plus a cached factorization for equality fidelity."""

    def __init__(self, ens):
        a = ens.sensing_vectors()                      # n x d rows a_i
        self.d = ens.d
        self.n = ens.n
        self.rows = np.einsum("ni,nj->nij", a, a).reshape(ens.n, ens.d * ens.d)
        self._svd = None

    def apply(self, X):
        return self.rows @ X.ravel()

    def apply_adjoint(self, v):
        M = (self.rows.T @ v).reshape(self.d, self.d)
        return 0.5 * (M + M.T)

    def _factorize(self):
        if self._svd is None:
            U, s, Vt = scipy.linalg.svd(self.rows, full_matrices=False)
            rank = int(np.sum(s > s[0] * max(self.rows.shape) * np.finfo(float).eps))
            self._svd = (U[:, :rank], s[:rank], Vt[:rank])
        return self._svd

    def normal_solver(self, shift):
        """Exact solver for (shift * I + A^T A) x = rhs via the n x n Gram."""
        gram = self.rows @ self.rows.T
        chol = scipy.linalg.cho_factor(shift * np.eye(self.n) + gram)

        def solve(rhs):
            t = scipy.linalg.cho_solve(chol, self.rows @ rhs)
            return (rhs - self.rows.T @ t) / shift

        return solve

    def min_norm_solution(self, y):
        U, s, Vt = self._factorize()
        return (Vt.T @ ((U.T @ y) / s)).reshape(self.d, self.d)

    def is_consistent(self, y, tol=1e-8):
        X0 = self.min_norm_solution(y)
        return np.linalg.norm(self.apply(X0) - y) <= tol * (1.0 + np.linalg.norm(y))

    def project_affine(self, X, y):
        """Projection of X onto {X : A(X) = y}."""
        U, s, Vt = self._factorize()
        x = X.ravel()
        x_proj = x - Vt.T @ (Vt @ x) + (Vt.T @ ((U.T @ y) / s))
        M = x_proj.reshape(self.d, self.d)
        return 0.5 * (M + M.T)


def _consensus_admm(proxes, shape, rho, max_iters, tol_primal, tol_dual,
                    adapt_rho=True):
    """Consensus splitting over X-space blocks; returns (copies, xbar, info)."""
    N = len(proxes)
    xbar = np.zeros(shape)
    copies = [np.zeros(shape) for _ in range(N)]
    duals = [np.zeros(shape) for _ in range(N)]
    pri = dual = np.inf
    status = STATUS_MAX_ITERS
    it = 0
    for it in range(1, max_iters + 1):
        copies = [prox(xbar - u, rho) for prox, u in zip(proxes, duals)]
        xbar_new = sum(c + u for c, u in zip(copies, duals)) / N
        duals = [u + c - xbar_new for u, c in zip(duals, copies)]

        pri = np.sqrt(sum(np.linalg.norm(c - xbar_new) ** 2 for c in copies))
        dual = rho * np.sqrt(N) * np.linalg.norm(xbar_new - xbar)
        xbar = xbar_new

        scale = max(1.0, np.linalg.norm(xbar))
        if pri <= tol_primal * scale and dual <= tol_dual * scale:
            status = STATUS_CONVERGED
            break
        if adapt_rho:
            if pri > 10.0 * dual:
                rho *= 2.0
                duals = [u / 2.0 for u in duals]
            elif dual > 10.0 * pri:
                rho /= 2.0
                duals = [u * 2.0 for u in duals]
    return copies, xbar, (it, float(pri), float(dual), status)


def _ball_split_admm(flat, y, x_proxes, radius, rho, max_iters, tol_primal,
                     tol_dual, n_identity, adapt_rho=True):
    """Splitting with X-space prox blocks plus an A-space ball variable.

    Solves min sum_j f_j(X) + I_ball(A(X); y, radius) where each f_j has
    prox `x_proxes[j]`.  The X-update is the SPD system
    (N I + A^T A) x = sum_j vec(X_j + U_j) + A^T (v - u), solved exactly
    through the n x n Gram of the flattened operator.
    """
    d = flat.d
    N = len(x_proxes)
    X = np.zeros((d, d))
    copies = [np.zeros((d, d)) for _ in range(N)]
    duals = [np.zeros((d, d)) for _ in range(N)]
    v = np.zeros(flat.n)
    u = np.zeros(flat.n)
    solve_normal = flat.normal_solver(float(n_identity))

    pri = dualr = np.inf
    status = STATUS_MAX_ITERS
    it = 0
    for it in range(1, max_iters + 1):
        rhs = sum((c + w).ravel() for c, w in zip(copies, duals)) + flat.rows.T @ (v - u)
        X = solve_normal(rhs).reshape(d, d)
        X = 0.5 * (X + X.T)
        AX = flat.apply(X)

        old = [c.copy() for c in copies] + [v.copy()]
        copies = [prox(X - w, rho) for prox, w in zip(x_proxes, duals)]
        v = project_l2_ball(AX + u, y, radius)
        duals = [w + c - X for w, c in zip(duals, copies)]
        u = u + AX - v

        pri = np.sqrt(sum(np.linalg.norm(c - X) ** 2 for c in copies)
                      + np.linalg.norm(AX - v) ** 2)
        dualr = rho * np.sqrt(
            sum(np.linalg.norm(c - o) ** 2 for c, o in zip(copies, old[:-1]))
            + np.linalg.norm(flat.apply_adjoint(v - old[-1])) ** 2)
        scale = max(1.0, np.linalg.norm(X), np.linalg.norm(v))
        if pri <= tol_primal * scale and dualr <= tol_dual * scale:
            status = STATUS_CONVERGED
            break
        if adapt_rho:
            if pri > 10.0 * dualr:
                rho *= 2.0
                duals = [w / 2.0 for w in duals]
                u /= 2.0
            elif dualr > 10.0 * pri:
                rho /= 2.0
                duals = [w * 2.0 for w in duals]
                u *= 2.0
    return copies, X, (it, float(pri), float(dualr), status)


def solve_sdp_l1(ens, y, cfg, _skip_l1_prox=False):
    """l1-regularized trace minimization over the PSD cone (lam=0: plain SDP)."""
    cfg.validate()
    y = check_vector(y, length=ens.n, name="y")
    flat = _FlatOperator(ens)

    def prox_trace_psd(M, rho):
        return _shrink_psd(M, 1.0 / rho)

    def prox_l1(M, rho):
        if _skip_l1_prox:
            return M.copy()
        return soft_threshold(M, cfg.lam / rho)

    if cfg.fidelity == "equality":
        if not flat.is_consistent(y):
            return BaselineResult(
                x_matrix=np.zeros((ens.d, ens.d)), iterations=0,
                primal_residual=np.inf, dual_residual=np.inf,
                feasibility_gap=np.inf, status=STATUS_INFEASIBLE)

        def prox_affine(M, rho):
            return flat.project_affine(M, y)

        copies, xbar, (it, pri, dual, status) = _consensus_admm(
            [prox_trace_psd, prox_l1, prox_affine], (ens.d, ens.d),
            cfg.penalty_rho, cfg.max_iters, cfg.tol_primal, cfg.tol_dual)
        X_out = copies[0]  # PSD block copy: exactly PSD
        gap = float(np.linalg.norm(flat.apply(X_out) - y))
    else:
        copies, X, (it, pri, dual, status) = _ball_split_admm(
            flat, y, [prox_trace_psd, prox_l1], cfg.radius, cfg.penalty_rho,
            cfg.max_iters, cfg.tol_primal, cfg.tol_dual, n_identity=2.0)
        X_out = copies[0]
        gap = max(0.0, float(np.linalg.norm(flat.apply(X_out) - y)) - cfg.radius)

    return BaselineResult(x_matrix=X_out, iterations=it, primal_residual=pri,
                          dual_residual=dual, feasibility_gap=gap, status=status)


def solve_l1_only(ens, y, cfg):
    """Pure entrywise l1 minimization over the lifted variable (no PSD, no trace)."""
    cfg.validate()
    y = check_vector(y, length=ens.n, name="y")
    flat = _FlatOperator(ens)

    def prox_l1(M, rho):
        return soft_threshold(M, 1.0 / rho)

    if cfg.fidelity == "equality":
        if not flat.is_consistent(y):
            return BaselineResult(
                x_matrix=np.zeros((ens.d, ens.d)), iterations=0,
                primal_residual=np.inf, dual_residual=np.inf,
                feasibility_gap=np.inf, status=STATUS_INFEASIBLE)

        def prox_affine(M, rho):
            return flat.project_affine(M, y)

        copies, xbar, (it, pri, dual, status) = _consensus_admm(
            [prox_l1, prox_affine], (ens.d, ens.d), cfg.penalty_rho,
            cfg.max_iters, cfg.tol_primal, cfg.tol_dual)
        X_out = xbar
        gap = float(np.linalg.norm(flat.apply(X_out) - y))
    else:
        copies, X, (it, pri, dual, status) = _ball_split_admm(
            flat, y, [prox_l1], cfg.radius, cfg.penalty_rho,
            cfg.max_iters, cfg.tol_primal, cfg.tol_dual, n_identity=1.0)
        X_out = copies[0]
        gap = max(0.0, float(np.linalg.norm(flat.apply(X_out) - y)) - cfg.radius)

    return BaselineResult(x_matrix=X_out, iterations=it, primal_residual=pri,
                          dual_residual=dual, feasibility_gap=gap, status=status)
