"""Second recovery stage: entrywise l1 minimization in the lifted domain.

Given the stage-one estimate Bh of Psi X Psi^T, solves

    minimize   ||X||_1
    subject to || Psi X Psi^T - Bh ||_F <= radius

by linearized operator splitting: the X-update is a single
soft-threshold (no d^2 x d^2 system), the auxiliary update is a
Frobenius-ball projection.  Symmetry and PSD-ness of X are deliberately
not enforced here; post-processing restores them.

The regularized alternative

    minimize  0.5 || Psi X Psi^T - Bh ||_F^2 + lam ||X||_1

is solved by proximal gradient with step <= 1 / sigma_max(Psi)^4, which
makes the objective non-increasing per iteration.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .lowrank import STATUS_CONVERGED, STATUS_MAX_ITERS
from .validation import check_matrix, check_square


@dataclass
class SparseSolveConfig:
    max_iters: int = 5000
    tol_primal: float = 1e-6
    tol_dual: float = 1e-6
    penalty_rho: float = 1.0
    radius: float = 0.0
    step_tau: float = None      # default 0.99 / sigma_max(Psi)^4
    stage2_C: float = 2.0
    adapt_rho: bool = True
    diagnostics_path: str = None

    def validate(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        for name in ("tol_primal", "tol_dual", "penalty_rho"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")
        if self.stage2_C <= 0:
            raise ValueError("stage2_C must be positive")


@dataclass
class SparseResult:
    x_hat_matrix: np.ndarray
    iterations: int
    primal_residual: float
    dual_residual: float
    l1_value: float
    feasibility_gap: float
    status: str = STATUS_CONVERGED

    @property
    def converged(self):
        return self.status == STATUS_CONVERGED


def soft_threshold(M, t):
    """Entrywise shrinkage sign(m) * max(|m| - t, 0); t=0 is the identity."""
    if t < 0:
        raise ValueError("threshold must be nonnegative")
    M = np.asarray(M, dtype=float)
    return np.sign(M) * np.maximum(np.abs(M) - t, 0.0)


def sigma_max(psi, tol=1e-8, max_iter=1000, seed=0):
    """Largest singular value of psi by power iteration on psi^T psi."""
    psi = check_matrix(psi, name="psi")
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    v = rng.standard_normal(psi.shape[1])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = psi.T @ (psi @ v)
        lam_new = float(v @ w)
        nrm = np.linalg.norm(w)
        if nrm == 0:
            return 0.0
        v = w / nrm
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            break
        lam = lam_new
    return float(np.sqrt(max(lam_new, 0.0)))


def _project_frob_ball(Z, center, radius):
    diff = Z - center
    nrm = np.linalg.norm(diff)
    if nrm <= radius:
        return Z
    return center + (radius / nrm) * diff


def _resolve_step(cfg, psi):
    smax = sigma_max(psi)
    lip = max(smax ** 4, 1e-300)
    if cfg.step_tau is None:
        return 0.99 / lip
    if cfg.step_tau * lip > 1.0 + 1e-12:
        raise ValueError(
            f"step_tau={cfg.step_tau} violates step_tau * sigma_max(psi)^4 <= 1")
    return cfg.step_tau


def solve_l1_min(psi, b_hat, cfg):
    """Constrained l1 minimization in the lifted domain (linearized splitting)."""
    cfg.validate()
    psi = check_matrix(psi, name="psi")
    m, d = psi.shape
    b_hat = check_square(b_hat, size=m, name="b_hat")
    rho = cfg.penalty_rho
    base_step = _resolve_step(cfg, psi)
    tau = base_step / rho  # majorization step; threshold = tau

    X = np.zeros((d, d))
    Z = np.zeros((m, m))
    U = np.zeros((m, m))  # scaled dual for Psi X Psi^T = Z

    fh = writer = None
    if cfg.diagnostics_path is not None:
        fh = open(cfg.diagnostics_path, "w", newline="")
        writer = csv.writer(fh)
        writer.writerow(["iter", "primal_res", "dual_res", "l1", "feas_gap"])

    status = STATUS_MAX_ITERS
    pri = dual = np.inf
    it = 0
    AX = psi @ X @ psi.T
    try:
        for it in range(1, cfg.max_iters + 1):
            grad = psi.T @ (AX - Z + U) @ psi
            X_old = X
            X = soft_threshold(X - tau * rho * grad, tau)
            AX = psi @ X @ psi.T

            Z_old = Z
            Z = _project_frob_ball(AX + U, b_hat, cfg.radius)
            U = U + AX - Z

            pri = float(np.linalg.norm(AX - Z))
            dual = rho * float(np.linalg.norm(psi.T @ (Z - Z_old) @ psi))
            # With radius 0 the Z-block is pinned and dual is identically
            # zero; require the X fixed-point residual instead so we do
            # not declare victory at a feasible but non-optimal point.
            scale_pri = max(1.0, np.linalg.norm(AX), np.linalg.norm(Z))
            scale_dual = max(1.0, rho * np.linalg.norm(psi.T @ U @ psi))
            if cfg.radius == 0.0:
                dual = float(np.linalg.norm(X - X_old))
                scale_dual = max(1.0, float(np.linalg.norm(X)))

            if writer is not None:
                feas = max(0.0, float(np.linalg.norm(AX - b_hat)) - cfg.radius)
                writer.writerow([it, pri, dual, float(np.abs(X).sum()), feas])

            if pri <= cfg.tol_primal * scale_pri and dual <= cfg.tol_dual * scale_dual:
                status = STATUS_CONVERGED
                break
            # Residual balancing only makes sense when the Z-block
            # actually moves (radius > 0); with a pinned Z it would
            # just ratchet rho and erode the shrinkage threshold.
            if cfg.adapt_rho and cfg.radius > 0.0 and it % 10 == 0:
                if pri > 10.0 * dual and rho < 1e4 * cfg.penalty_rho:
                    rho *= 2.0
                    U /= 2.0
                    tau = base_step / rho
                elif dual > 10.0 * pri and rho > 1e-4 * cfg.penalty_rho:
                    rho /= 2.0
                    U *= 2.0
                    tau = base_step / rho
    finally:
        if fh is not None:
            fh.close()

    feas_gap = max(0.0, float(np.linalg.norm(AX - b_hat)) - cfg.radius)
    return SparseResult(
        x_hat_matrix=X,
        iterations=it,
        primal_residual=float(pri),
        dual_residual=float(dual),
        l1_value=float(np.abs(X).sum()),
        feasibility_gap=feas_gap,
        status=status,
    )


def solve_l1_reg(psi, b_hat, lam, cfg):
    """l1-regularized least squares in the lifted domain (proximal gradient)."""
    cfg.validate()
    if lam <= 0:
        raise ValueError("lambda must be strictly positive")
    psi = check_matrix(psi, name="psi")
    m, d = psi.shape
    b_hat = check_square(b_hat, size=m, name="b_hat")
    tau = _resolve_step(cfg, psi)

    X = np.zeros((d, d))
    status = STATUS_MAX_ITERS
    opt_res = np.inf
    it = 0
    for it in range(1, cfg.max_iters + 1):
        R = psi @ X @ psi.T - b_hat
        grad = psi.T @ R @ psi
        X_new = soft_threshold(X - tau * grad, tau * lam)
        opt_res = float(np.linalg.norm(X_new - X)) / tau
        X = X_new
        if opt_res <= cfg.tol_primal * max(1.0, np.linalg.norm(X)):
            status = STATUS_CONVERGED
            break

    feas_gap = max(0.0, float(np.linalg.norm(psi @ X @ psi.T - b_hat)) - cfg.radius)
    return SparseResult(
        x_hat_matrix=X,
        iterations=it,
        primal_residual=float(opt_res),
        dual_residual=0.0,
        l1_value=float(np.abs(X).sum()),
        feasibility_gap=feas_gap,
        status=status,
    )


def reg_objective(psi, b_hat, lam, X):
    """Objective of the regularized program; exposed for monotonicity checks."""
    R = psi @ X @ psi.T - b_hat
    return 0.5 * float(np.linalg.norm(R) ** 2) + lam * float(np.abs(X).sum())
