"""Estimator front-end: fit-shaped wrappers around the solvers.

Each estimator follows the scikit-learn convention: constructor takes
only configuration, ``fit(ensemble, y, epsilon=...)`` runs the solve
and exposes trailing-underscore attributes, and ``get_params`` /
``set_params`` come from :class:`sklearn.base.BaseEstimator` so the
estimators compose with the wider ecosystem (cloning, grid search over
solver knobs, etc.).
"""

import numpy as np
from sklearn.base import BaseEstimator

from . import baselines, lowrank, sparse
from .ensemble import apply_A, lift
from .postprocess import RecoveryResult, postprocess_estimate, relative_errors
from .validation import check_vector


class TwoStageRecovery(BaseEstimator):
    """Two-stage convex recovery: PSD trace minimization, then lifted l1.

    Parameters
    ----------
    k : int or None
        Sparsity level used by the post-processing projection.  When
        None the sparse projection is skipped.
    stage2_C : float
        Constant in the stage-two constraint level C * eps / sqrt(n).
    radius : float or None
        Explicit stage-two radius override; None derives it from
        (stage2_C, epsilon, n).
    max_iters, tol, penalty_rho, inner_cg_tol, inner_cg_max
        Shared solver knobs for both stages.
    """

    def __init__(self, k=None, stage2_C=2.0, radius=None, max_iters=5000,
                 tol=1e-6, penalty_rho=1.0, inner_cg_tol=1e-12, inner_cg_max=200):
        self.k = k
        self.stage2_C = stage2_C
        self.radius = radius
        self.max_iters = max_iters
        self.tol = tol
        self.penalty_rho = penalty_rho
        self.inner_cg_tol = inner_cg_tol
        self.inner_cg_max = inner_cg_max

    def fit(self, ensemble, y, epsilon=0.0):
        y = check_vector(y, length=ensemble.n, name="y")
        cfg1 = lowrank.LowRankSolveConfig(
            max_iters=self.max_iters, tol_primal=self.tol, tol_dual=self.tol,
            penalty_rho=self.penalty_rho, inner_cg_tol=self.inner_cg_tol,
            inner_cg_max=self.inner_cg_max, epsilon=epsilon)
        stage1 = lowrank.solve_trace_min(ensemble, y, cfg1)

        radius = self.radius
        if radius is None:
            radius = self.stage2_C * epsilon / np.sqrt(ensemble.n)
        cfg2 = sparse.SparseSolveConfig(
            max_iters=self.max_iters, tol_primal=self.tol, tol_dual=self.tol,
            penalty_rho=self.penalty_rho, radius=radius, stage2_C=self.stage2_C)
        stage2 = sparse.solve_l1_min(ensemble.psi, stage1.b_hat, cfg2)

        x_sparse, x_rank1, signal = postprocess_estimate(stage2.x_hat_matrix, self.k)
        self.lowrank_result_ = stage1
        self.sparse_result_ = stage2
        self.b_hat_ = stage1.b_hat
        self.X_hat_ = stage2.x_hat_matrix
        self.x_tilde_sparse_ = x_sparse
        self.x_tilde_rank1_ = x_rank1
        self.x_hat_ = signal
        self.converged_ = stage1.converged and stage2.converged
        return self

    def predict(self, ensemble):
        """Noiseless measurements of the recovered signal under `ensemble`."""
        return apply_A(ensemble, lift(self.x_hat_))

    def recovery_result(self, instance=None):
        result = RecoveryResult(
            method="two_stage",
            b_hat=self.b_hat_,
            x_hat_matrix=self.X_hat_,
            x_tilde_sparse=self.x_tilde_sparse_,
            x_tilde_rank1=self.x_tilde_rank1_,
            x_hat_signal=self.x_hat_,
            converged=self.converged_,
            diagnostics={
                "stage1_iterations": self.lowrank_result_.iterations,
                "stage1_status": self.lowrank_result_.status,
                "stage1_feasibility_gap": self.lowrank_result_.feasibility_gap,
                "stage1_trace": self.lowrank_result_.trace_value,
                "stage2_iterations": self.sparse_result_.iterations,
                "stage2_status": self.sparse_result_.status,
                "stage2_feasibility_gap": self.sparse_result_.feasibility_gap,
                "stage2_l1": self.sparse_result_.l1_value,
            },
            config=self.get_params())
        if instance is not None:
            result.rel_error_matrix, result.rel_error_signal = relative_errors(
                self.X_hat_, instance.lift, self.x_hat_, instance.x_star)
        return result


class _LiftedBaseline(BaseEstimator):
    """Shared fit/post-processing plumbing for the single-program baselines."""

    method = None

    def _solve(self, ensemble, y, cfg):
        raise NotImplementedError

    def _config(self, epsilon):
        raise NotImplementedError

    def fit(self, ensemble, y, epsilon=0.0):
        y = check_vector(y, length=ensemble.n, name="y")
        res = self._solve(ensemble, y, self._config(epsilon))
        x_sparse, x_rank1, signal = postprocess_estimate(res.x_matrix, self.k)
        self.result_ = res
        self.X_hat_ = res.x_matrix
        self.x_tilde_sparse_ = x_sparse
        self.x_tilde_rank1_ = x_rank1
        self.x_hat_ = signal
        self.converged_ = res.converged
        return self

    def predict(self, ensemble):
        return apply_A(ensemble, lift(self.x_hat_))

    def recovery_result(self, instance=None):
        result = RecoveryResult(
            method=self.method,
            x_hat_matrix=self.X_hat_,
            x_tilde_sparse=self.x_tilde_sparse_,
            x_tilde_rank1=self.x_tilde_rank1_,
            x_hat_signal=self.x_hat_,
            converged=self.converged_,
            diagnostics={
                "iterations": self.result_.iterations,
                "status": self.result_.status,
                "feasibility_gap": self.result_.feasibility_gap,
            },
            config=self.get_params())
        if instance is not None:
            result.rel_error_matrix, result.rel_error_signal = relative_errors(
                self.X_hat_, instance.lift, self.x_hat_, instance.x_star)
        return result


class TraceL1Recovery(_LiftedBaseline):
    """trace + lam * l1 minimization over the PSD cone (lam=0: plain SDP)."""

    def __init__(self, lam=0.0, fidelity="equality", k=None, max_iters=5000,
                 tol=1e-6, penalty_rho=1.0):
        self.lam = lam
        self.fidelity = fidelity
        self.k = k
        self.max_iters = max_iters
        self.tol = tol
        self.penalty_rho = penalty_rho

    @property
    def method(self):
        return "sdp" if self.lam == 0 else "sdp_l1"

    def _config(self, epsilon):
        return baselines.BaselineConfig(
            lam=self.lam, fidelity=self.fidelity, radius=epsilon,
            max_iters=self.max_iters, tol_primal=self.tol, tol_dual=self.tol,
            penalty_rho=self.penalty_rho)

    def _solve(self, ensemble, y, cfg):
        return baselines.solve_sdp_l1(ensemble, y, cfg)


class L1Recovery(_LiftedBaseline):
    """Pure entrywise l1 minimization over the lifted variable."""

    method = "l1"

    def __init__(self, fidelity="equality", k=None, max_iters=5000, tol=1e-6,
                 penalty_rho=1.0):
        self.fidelity = fidelity
        self.k = k
        self.max_iters = max_iters
        self.tol = tol
        self.penalty_rho = penalty_rho

    def _config(self, epsilon):
        return baselines.BaselineConfig(
            lam=0.0, fidelity=self.fidelity, radius=epsilon,
            max_iters=self.max_iters, tol_primal=self.tol, tol_dual=self.tol,
            penalty_rho=self.penalty_rho)

    def _solve(self, ensemble, y, cfg):
        return baselines.solve_l1_only(ensemble, y, cfg)
