"""Independent brute-force and analytic checkers.

These validate the solver pipeline and the restricted-isometry facts it
relies on at desk scale, without sharing any code path with the
splitting solvers.
"""

import math
from itertools import combinations

import numpy as np

from .ensemble import _stream, estimate_rip_constant
from .postprocess import project_rank_one_psd
from .validation import check_matrix, check_positive_int, check_vector

ENUMERATION_BUDGET = 100_000


def brute_force_cpr(ens, y, k):
    """Exhaustive-support reference solver for the quadratic measurements.

    Enumerates every size-k support, fits the symmetric k x k lifted
    block by least squares, projects it to rank-one PSD, and scores by
    the measurement residual of the projected matrix.  Exact (up to
    sign) in the noiseless identifiable case.
    """
    y = check_vector(y, length=ens.n, name="y")
    k = check_positive_int(k, "k")
    if math.comb(ens.d, k) > ENUMERATION_BUDGET:
        raise ValueError(
            f"C({ens.d},{k}) = {math.comb(ens.d, k)} exceeds the "
            f"enumeration budget {ENUMERATION_BUDGET}")
    n_unknowns = k * (k + 1) // 2
    if n_unknowns > ens.n:
        raise ValueError(f"underdetermined: k(k+1)/2 = {n_unknowns} > n = {ens.n}")

    a = ens.sensing_vectors()                        # n x d
    pairs = [(p, q) for p in range(k) for q in range(p, k)]

    best = (np.inf, None, None)
    for supp in combinations(range(ens.d), k):
        a_S = a[:, supp]                             # n x k
        design = np.empty((ens.n, n_unknowns))
        for col, (p, q) in enumerate(pairs):
            coef = a_S[:, p] * a_S[:, q]
            design[:, col] = coef if p == q else 2.0 * coef
        theta, *_ = np.linalg.lstsq(design, y, rcond=None)
        X_S = np.zeros((k, k))
        for col, (p, q) in enumerate(pairs):
            X_S[p, q] = theta[col]
            X_S[q, p] = theta[col]
        X_r1, _ = project_rank_one_psd(X_S)
        resid = float(np.linalg.norm(np.einsum("ij,jk,ik->i", a_S, X_r1, a_S) - y))
        if resid < best[0]:
            best = (resid, supp, X_r1)

    resid, supp, X_r1 = best
    vals, vecs = np.linalg.eigh(X_r1)
    x_local = np.sqrt(max(vals[-1], 0.0)) * vecs[:, -1]
    x = np.zeros(ens.d)
    x[list(supp)] = x_local
    return x, resid


def _disjoint_sparse_pair(rng, d, k):
    """Random k x k-sparse matrices with disjoint row and column sets."""
    perm = rng.permutation(d)
    r1, c1, r2, c2 = perm[:k], perm[k:2 * k], perm[2 * k:3 * k], perm[3 * k:4 * k]
    X = np.zeros((d, d))
    Xp = np.zeros((d, d))
    X[np.ix_(r1, c1)] = rng.standard_normal((k, k))
    Xp[np.ix_(r2, c2)] = rng.standard_normal((k, k))
    return X, Xp


def check_disjoint_support_lemma(psi, k, trials, seed):
    """Max observed |<Psi X Psi', Psi X' Psi'>| / (||X||_F ||X'||_F).

    For k x k-sparse X, X' with disjoint supports the ratio is bounded
    by twice the 2k-restricted isometry constant of Psi.
    """
    psi = check_matrix(psi, name="psi")
    d = psi.shape[1]
    k = check_positive_int(k, "k")
    if 4 * k > d:
        raise ValueError(f"need 4k <= d for disjoint supports, got k={k}, d={d}")
    rng = _stream(seed, 5)
    worst = 0.0
    for _ in range(check_positive_int(trials, "trials")):
        X, Xp = _disjoint_sparse_pair(rng, d, k)
        inner = float(np.vdot(psi @ X @ psi.T, psi @ Xp @ psi.T))
        ratio = abs(inner) / (np.linalg.norm(X) * np.linalg.norm(Xp))
        worst = max(worst, ratio)
    return worst


def check_rip_product(psi, k, trials, seed):
    """Extreme ratios ||Psi X Psi'||_F^2 / ||X||_F^2 over 2k x 2k-sparse X."""
    psi = check_matrix(psi, name="psi")
    d = psi.shape[1]
    k = check_positive_int(k, "k")
    s = 2 * k
    if s > d:
        raise ValueError(f"need 2k <= d, got k={k}, d={d}")
    rng = _stream(seed, 5)
    lo, hi = np.inf, 0.0
    for _ in range(check_positive_int(trials, "trials")):
        rows = rng.choice(d, size=s, replace=False)
        cols = rng.choice(d, size=s, replace=False)
        X = np.zeros((d, d))
        X[np.ix_(rows, cols)] = rng.standard_normal((s, s))
        ratio = (np.linalg.norm(psi @ X @ psi.T) / np.linalg.norm(X)) ** 2
        lo = min(lo, ratio)
        hi = max(hi, ratio)
    return float(lo), float(hi)


def check_gamma_threshold(delta):
    """gamma(delta) = (1 - delta)^2 - 2 sqrt(2) delta.

    Positive iff delta is below roughly 0.216; the stage-two error bound
    requires gamma > 0.
    """
    if not 0.0 <= delta <= 1.0:
        raise ValueError("delta must lie in [0, 1]")
    return (1.0 - delta) ** 2 - 2.0 * math.sqrt(2.0) * delta


def run_verification(d=64, k=2, m=None, trials=10_000, seed=0):
    """Run the checker suite; returns a list of (name, statistic, bound, ok)."""
    from .ensemble import make_ensemble

    if m is None:
        m = 8 * k
    ens = make_ensemble(d, m, 3 * m, seed, "gaussian_scaled")
    delta_hat = estimate_rip_constant(ens.psi, k, trials, seed)
    margin = 0.05

    results = []
    ratio = check_disjoint_support_lemma(ens.psi, k, trials, seed)
    bound = 2.0 * (delta_hat + margin)
    results.append(("disjoint_support_lemma", ratio, bound, ratio <= bound))

    lo, hi = check_rip_product(ens.psi, k, trials, seed)
    lo_bound = (max(1.0 - delta_hat - margin, 0.0)) ** 2
    hi_bound = (1.0 + delta_hat + margin) ** 2
    results.append(("rip_product_lower", lo, lo_bound, lo >= lo_bound))
    results.append(("rip_product_upper", hi, hi_bound, hi <= hi_bound))

    gamma_at = check_gamma_threshold(0.216)
    results.append(("gamma_threshold", gamma_at, 1e-2, abs(gamma_at) < 1e-2))
    results.append(("rip_estimate", delta_hat, float("inf"), True))
    return results
