"""Structured projections, signal extraction, and error metrics.

The convex stages return estimates that are neither rank-one nor
k x k-sparse.  Projecting onto either structured set at most doubles
the estimation error (the projected-estimator argument: the truth lies
in the set, so the projection moves by at most the original error).
Default order: sparse projection, then rank-one PSD projection, then
signal extraction; the rank-one projection of a k x k-sparse matrix
stays k x k-sparse, so the final output lies in both sets.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .validation import check_positive_int, check_square, symmetrize


@dataclass
class RecoveryResult:
    """Full output of a recovery run, with optional truth-based errors."""

    method: str
    b_hat: np.ndarray = None
    x_hat_matrix: np.ndarray = None
    x_tilde_sparse: np.ndarray = None
    x_tilde_rank1: np.ndarray = None
    x_hat_signal: np.ndarray = None
    rel_error_matrix: float = None
    rel_error_signal: float = None
    converged: bool = True
    diagnostics: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def to_dict(self):
        """JSON-ready summary: errors, diagnostics, config echoes, signal."""
        return {
            "method": self.method,
            "converged": bool(self.converged),
            "rel_error_matrix": self.rel_error_matrix,
            "rel_error_signal": self.rel_error_signal,
            "x_hat_signal": None if self.x_hat_signal is None
            else [float(v) for v in self.x_hat_signal],
            "diagnostics": self.diagnostics,
            "config": self.config,
        }


def project_rank_one_psd(M):
    """Frobenius-nearest rank-one PSD matrix and its top eigenpair.

    Returns (lam1 * u1 u1^T, (lam1, u1)) with lam1 clamped at zero.
    """
    M = check_square(M, name="M")
    S = symmetrize(M)
    vals, vecs = scipy.linalg.eigh(S)
    lam = max(float(vals[-1]), 0.0)
    u = vecs[:, -1]
    return lam * np.outer(u, u), (lam, u)


def project_k_sparse(M, k):
    """Restrict M to its dominant k x k principal pattern.

    The k indices maximizing the row l2 norms of sym(M) are kept (ties
    broken by lowest index); all entries outside the selected principal
    submatrix are zeroed.
    """
    M = check_square(M, name="M")
    k = check_positive_int(k, "k")
    d = M.shape[0]
    if k > d:
        raise ValueError(f"k={k} exceeds matrix size {d}")
    if k == d:
        return M.copy()
    norms = np.linalg.norm(symmetrize(M), axis=1)
    order = np.argsort(-norms, kind="stable")  # stable sort: ties -> lowest index
    keep = np.sort(order[:k])
    out = np.zeros_like(M)
    out[np.ix_(keep, keep)] = M[np.ix_(keep, keep)]
    return out


def extract_signal(M_rank1):
    """Signal from a rank-one PSD matrix, defined up to global sign."""
    M_rank1 = check_square(M_rank1, name="M_rank1")
    vals, vecs = scipy.linalg.eigh(symmetrize(M_rank1))
    lam = max(float(vals[-1]), 0.0)
    return np.sqrt(lam) * vecs[:, -1]


def relative_errors(X_hat, X_star, x_hat, x_star):
    """Matrix and sign-invariant signal relative errors against the truth."""
    X_star = np.asarray(X_star, dtype=float)
    denom_m = np.linalg.norm(X_star)
    if denom_m == 0:
        raise ValueError("X_star must be nonzero for the matrix error metric")
    rel_matrix = float(np.linalg.norm(np.asarray(X_hat, float) - X_star) / denom_m)

    x_star = np.asarray(x_star, dtype=float)
    denom_s = np.linalg.norm(x_star)
    if denom_s == 0:
        raise ValueError("x_star must be nonzero for the signal error metric")
    x_hat = np.asarray(x_hat, dtype=float)
    rel_signal = float(min(np.linalg.norm(x_hat - x_star),
                           np.linalg.norm(x_hat + x_star)) / denom_s)
    return rel_matrix, rel_signal


def postprocess_estimate(X_hat, k=None):
    """Default post-processing chain: k-sparse, then rank-one PSD, then signal.

    Returns (x_tilde_sparse, x_tilde_rank1, x_hat_signal).  When k is
    None the sparse projection is skipped.
    """
    x_sparse = project_k_sparse(X_hat, k) if k is not None else np.asarray(X_hat, float)
    x_rank1, _ = project_rank_one_psd(x_sparse)
    return x_sparse, x_rank1, extract_signal(x_rank1)
