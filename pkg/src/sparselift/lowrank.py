"""First recovery stage: trace minimization over the PSD cone.

Solves

    minimize   trace(B)
    subject to B >= 0,  || W(B) - y ||_2 <= eps

by consensus operator splitting with three blocks: the matrix variable
B, a PSD copy, and a copy of the data residual constrained to the
l2 ball.  The B-subproblem is the linear system (I + W*W) B = RHS,
solved matrix-free by conjugate gradients with warm starts.

Also provides the regularized alternative

    minimize_{B >= 0}  0.5 || W(B) - y ||_2^2 + lam * ||B||_*

(over the PSD cone the nuclear norm equals the trace) via proximal
gradient with a closed-form eigenvalue-shrinkage prox.
"""

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .ensemble import apply_W, apply_W_adjoint
from .validation import check_vector, symmetrize

STATUS_CONVERGED = "converged"
STATUS_MAX_ITERS = "max_iters"
STATUS_INFEASIBLE = "infeasible"


@dataclass
class LowRankSolveConfig:
    max_iters: int = 5000
    tol_primal: float = 1e-6
    tol_dual: float = 1e-6
    penalty_rho: float = 1.0
    inner_cg_tol: float = 1e-12
    inner_cg_max: int = 200
    epsilon: float = 0.0
    adapt_rho: bool = True
    keep_history: bool = False
    diagnostics_path: str = None

    def validate(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        for name in ("tol_primal", "tol_dual", "penalty_rho", "inner_cg_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")


@dataclass
class LowRankResult:
    b_hat: np.ndarray
    iterations: int
    primal_residual: float
    dual_residual: float
    feasibility_gap: float
    trace_value: float
    status: str = STATUS_CONVERGED
    optimality_residual: float = 0.0
    merit_history: list = field(default_factory=list)

    @property
    def converged(self):
        return self.status == STATUS_CONVERGED


def project_psd(M):
    """Frobenius-nearest PSD matrix: clamp negative eigenvalues of sym(M)."""
    M = symmetrize(np.asarray(M, dtype=float))
    vals, vecs = scipy.linalg.eigh(M)
    vals = np.maximum(vals, 0.0)
    return (vecs * vals) @ vecs.T


def project_l2_ball(v, center, radius):
    """Euclidean projection of v onto the ball of given center and radius."""
    v = np.asarray(v, dtype=float)
    center = np.asarray(center, dtype=float)
    diff = v - center
    nrm = np.linalg.norm(diff)
    if nrm <= radius:
        return v.copy()
    return center + (radius / nrm) * diff


def _shrink_psd(M, t):
    """Prox of t * trace over the PSD cone: eigenvalues -> max(lam - t, 0)."""
    vals, vecs = scipy.linalg.eigh(symmetrize(M))
    vals = np.maximum(vals - t, 0.0)
    return (vecs * vals) @ vecs.T


def _cg_matrix(op, rhs, x0, tol, max_iter):
    """Conjugate gradients for SPD operators acting on symmetric matrices."""
    x = x0.copy()
    r = rhs - op(x)
    p = r.copy()
    rs = float(np.vdot(r, r))
    bound = max(tol * float(np.vdot(rhs, rhs)), 1e-300)
    for _ in range(max_iter):
        if rs <= bound:
            break
        Ap = op(p)
        alpha = rs / float(np.vdot(p, Ap))
        x += alpha * p
        r -= alpha * Ap
        rs_new = float(np.vdot(r, r))
        p = r + (rs_new / rs) * p
        rs = rs_new
    return x


def _open_diag(path):
    if path is None:
        return None, None
    fh = open(path, "w", newline="")
    writer = csv.writer(fh)
    writer.writerow(["iter", "primal_res", "dual_res", "trace", "feas_gap"])
    return fh, writer


def solve_trace_min(ens, y, cfg):
    """Trace minimization over the PSD cone with an l2-ball data constraint.

    Non-convergence is reported through the result status, never raised:
    experiment sweeps must be able to record failures and move on.
    """
    cfg.validate()
    y = check_vector(y, length=ens.n, name="y")
    m = ens.m
    eps = cfg.epsilon
    rho = cfg.penalty_rho

    if np.linalg.norm(y) <= eps:
        # zero is feasible and trace-minimal; the splitting would crawl
        # here (the ball constraint never activates)
        return LowRankResult(
            b_hat=np.zeros((m, m)), iterations=0, primal_residual=0.0,
            dual_residual=0.0, feasibility_gap=0.0, trace_value=0.0,
            status=STATUS_CONVERGED)

    B = np.zeros((m, m))
    P = np.zeros((m, m))          # PSD copy of B
    q = np.zeros(ens.n)           # copy of W(B) - y, confined to the eps-ball
    U = np.zeros((m, m))          # scaled dual for B = P
    u = np.zeros(ens.n)           # scaled dual for W(B) - y = q

    identity = np.eye(m)

    # B-subproblem: (I + W*W) B = RHS.  At desk scale the Gram matrix of
    # the flattened operator is only n x n, so Woodbury gives an exact
    # solve; very large n falls back to matrix-free CG.
    solve_normal = None
    if ens.n <= 4000:
        gram = (ens.w_stack @ ens.w_stack.T) ** 2
        chol = scipy.linalg.cho_factor(np.eye(ens.n) + gram)

        def solve_normal(rhs_mat):
            t = scipy.linalg.cho_solve(chol, apply_W(ens, rhs_mat))
            return rhs_mat - apply_W_adjoint(ens, t)

    def normal_op(M):
        return M + apply_W_adjoint(ens, apply_W(ens, M))

    fh, diag = _open_diag(cfg.diagnostics_path)
    history = []
    status = STATUS_MAX_ITERS
    it = 0
    pri = dual = np.inf
    WB = apply_W(ens, B)
    feas_hist = []
    try:
        for it in range(1, cfg.max_iters + 1):
            rhs = (P - U) - identity / rho + apply_W_adjoint(ens, y + q - u)
            if solve_normal is not None:
                B = symmetrize(solve_normal(rhs))
            else:
                B = symmetrize(_cg_matrix(normal_op, rhs, B, cfg.inner_cg_tol,
                                          cfg.inner_cg_max))
            WB = apply_W(ens, B)

            P_old, q_old = P, q
            P = project_psd(B + U)
            q = project_l2_ball(WB - y + u, np.zeros(ens.n), eps)

            r_B = B - P
            r_w = WB - y - q
            U = U + r_B
            u = u + r_w

            pri = np.sqrt(np.linalg.norm(r_B) ** 2 + np.linalg.norm(r_w) ** 2)
            dual = rho * np.sqrt(
                np.linalg.norm(P - P_old) ** 2
                + np.linalg.norm(apply_W_adjoint(ens, q - q_old)) ** 2
            )
            scale_pri = max(1.0, np.linalg.norm(B), np.linalg.norm(P),
                            np.linalg.norm(WB), np.linalg.norm(y))
            scale_dual = max(1.0, rho * np.linalg.norm(U),
                             rho * np.linalg.norm(apply_W_adjoint(ens, u)))

            feas = max(0.0, float(np.linalg.norm(WB - y)) - eps)
            feas_hist.append(feas)
            if cfg.keep_history:
                merit = (np.trace(B)
                         + 0.5 * rho * (np.linalg.norm(r_B + U) ** 2 - np.linalg.norm(U) ** 2)
                         + 0.5 * rho * (np.linalg.norm(r_w + u) ** 2 - np.linalg.norm(u) ** 2))
                history.append(float(merit))
            if diag is not None:
                diag.writerow([it, pri, dual, float(np.trace(B)), feas])

            if pri <= cfg.tol_primal * scale_pri and dual <= cfg.tol_dual * scale_dual:
                status = STATUS_CONVERGED
                break

            if cfg.adapt_rho:
                if pri > 10.0 * dual:
                    rho *= 2.0
                    U /= 2.0
                    u /= 2.0
                elif dual > 10.0 * pri:
                    rho /= 2.0
                    U *= 2.0
                    u *= 2.0
    finally:
        if fh is not None:
            fh.close()

    B_final = project_psd(B)
    W_final = apply_W(ens, B_final)
    feas_gap = max(0.0, float(np.linalg.norm(W_final - y)) - eps)

    if status != STATUS_CONVERGED:
        # Stalled with a large, non-shrinking feasibility gap: no PSD point
        # reaches the ball, i.e. the specification is inconsistent.
        tail = feas_hist[-100:]
        if (feas_gap > 0.01 * max(1.0, np.linalg.norm(y))
                and len(tail) == 100 and tail[-1] > 0.99 * tail[0]):
            status = STATUS_INFEASIBLE

    return LowRankResult(
        b_hat=B_final,
        iterations=it,
        primal_residual=float(pri),
        dual_residual=float(dual),
        feasibility_gap=feas_gap,
        trace_value=float(np.trace(B_final)),
        status=status,
        merit_history=history,
    )


def _power_iter_wstar_w(ens, tol=1e-8, max_iter=1000, seed=0):
    """Largest eigenvalue of the normal operator W*W by power iteration."""
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    M = symmetrize(rng.standard_normal((ens.m, ens.m)))
    M /= np.linalg.norm(M)
    lam = 0.0
    for _ in range(max_iter):
        Mn = apply_W_adjoint(ens, apply_W(ens, M))
        lam_new = float(np.vdot(M, Mn))
        nrm = np.linalg.norm(Mn)
        if nrm == 0:
            return 0.0
        M = Mn / nrm
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new
        lam = lam_new
    return lam


def solve_trace_reg(ens, y, lam, cfg):
    """Regularized least-squares alternative to the constrained stage.

    Proximal gradient on 0.5 ||W(B) - y||^2 with the closed-form prox of
    lam * trace over the PSD cone (eigenvalue shrinkage).  The reported
    optimality residual is the prox-gradient fixed-point residual.
    """
    cfg.validate()
    if lam <= 0:
        raise ValueError("lambda must be strictly positive")
    y = check_vector(y, length=ens.n, name="y")

    L = _power_iter_wstar_w(ens)
    step = 1.0 / max(L, 1e-12)
    B = np.zeros((ens.m, ens.m))
    status = STATUS_MAX_ITERS
    opt_res = np.inf
    it = 0
    for it in range(1, cfg.max_iters + 1):
        grad = apply_W_adjoint(ens, apply_W(ens, B) - y)
        B_new = _shrink_psd(B - step * grad, step * lam)
        opt_res = float(np.linalg.norm(B_new - B)) / step
        B = B_new
        if opt_res <= cfg.tol_primal * max(1.0, np.linalg.norm(B)):
            status = STATUS_CONVERGED
            break

    W_final = apply_W(ens, B)
    feas_gap = max(0.0, float(np.linalg.norm(W_final - y)) - cfg.epsilon)
    return LowRankResult(
        b_hat=B,
        iterations=it,
        primal_residual=float(opt_res),
        dual_residual=0.0,
        feasibility_gap=feas_gap,
        trace_value=float(np.trace(B)),
        status=status,
        optimality_residual=float(opt_res),
    )
