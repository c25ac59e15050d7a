"""Sensing ensembles, signal lifting, and the measurement operators.

The measurement model: a k-sparse signal x in R^d is observed through
magnitude-squared linear measurements

    y_i = <a_i, x>^2 + z_i,        a_i = Psi^T w_i,

with Psi an m x d matrix and w_i Gaussian vectors in R^m.  Lifting
X = x x^T turns the quadratics into linear functionals of X via the
operators

    W: B |-> [ w_i^T B w_i ]_{i=1..n}     (on m x m symmetric B)
    A: X |-> W(Psi X Psi^T)               (on d x d symmetric X)

All random generation is counter-based (Philox) so that a (seed, dims)
pair reproduces the exact same arrays on any platform.  The ensemble
draws from sub-streams 0 and 1 of its seed, instances from sub-streams
2-4 of theirs, and Monte-Carlo probes from sub-stream 5; the streams
never collide even when the seeds coincide.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .validation import (
    check_matrix,
    check_positive_int,
    check_square,
    check_vector,
    symmetrize,
)

PSI_KINDS = ("gaussian_scaled", "identity", "custom")

# Sub-stream indices of the Philox family.
_STREAM_PSI = 0
_STREAM_W = 1
_STREAM_SUPPORT = 2
_STREAM_VALUES = 3
_STREAM_NOISE = 4
_STREAM_PROBE = 5


def _stream(seed, index):
    """Deterministic sub-stream `index` of the Philox generator keyed by seed."""
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)).jumped(index))


@dataclass
class SensingEnsemble:
    """The pair (Psi, {w_i}) defining constrained sensing vectors a_i = Psi^T w_i.

    Attributes:
        psi: m x d sensing subspace matrix.
        w_stack: n x m array whose rows are the vectors w_i.
        d, m, n: problem dimensions.
        seed: generation seed (meaningful for gaussian_scaled / identity kinds).
        psi_kind: one of "gaussian_scaled", "identity", "custom".
    """

    psi: np.ndarray
    w_stack: np.ndarray
    d: int
    m: int
    n: int
    seed: int
    psi_kind: str = "gaussian_scaled"

    @property
    def dims(self):
        return (self.d, self.m, self.n)

    def sensing_vectors(self):
        """The explicit sensing vectors a_i = Psi^T w_i as an n x d array."""
        return self.w_stack @ self.psi


@dataclass
class SparseInstance:
    """A ground-truth sparse recovery problem drawn from an ensemble."""

    x_star: np.ndarray
    support: np.ndarray
    lift: np.ndarray
    z: np.ndarray
    y: np.ndarray
    epsilon: float
    k: int
    noise_sigma: float
    seed: int = 0


def make_ensemble(d, m, n, seed, psi_kind="gaussian_scaled", psi_matrix=None):
    """Build a sensing ensemble.

    psi_kind "gaussian_scaled" draws Psi with iid N(0, 1/m) entries,
    "identity" requires m == d, and "custom" takes the supplied m x d
    matrix.  The w_i are always iid standard normal.
    """
    d = check_positive_int(d, "d")
    m = check_positive_int(m, "m")
    n = check_positive_int(n, "n")
    if psi_kind not in PSI_KINDS:
        raise ValueError(f"unknown psi_kind {psi_kind!r}; expected one of {PSI_KINDS}")

    if psi_kind == "identity":
        if m != d:
            raise ValueError(f"identity psi_kind requires m == d, got m={m}, d={d}")
        psi = np.eye(d)
    elif psi_kind == "custom":
        if psi_matrix is None:
            raise ValueError("custom psi_kind requires psi_matrix")
        psi = check_matrix(psi_matrix, shape=(m, d), name="psi_matrix")
    else:
        psi = _stream(seed, _STREAM_PSI).normal(0.0, 1.0 / np.sqrt(m), size=(m, d))

    w_stack = _stream(seed, _STREAM_W).standard_normal((n, m))
    return SensingEnsemble(psi=psi, w_stack=w_stack, d=d, m=m, n=n,
                           seed=int(seed), psi_kind=psi_kind)


def lift(x):
    """Rank-one lift x x^T of a signal vector."""
    x = check_vector(x, name="x")
    return np.outer(x, x)


def apply_W(ens, B):
    """Apply W: component i is the quadratic form w_i^T B w_i."""
    B = check_square(B, size=ens.m, name="B")
    WB = ens.w_stack @ B
    return np.einsum("ij,ij->i", WB, ens.w_stack)


def apply_W_adjoint(ens, v):
    """Adjoint of W: sum_i v_i w_i w_i^T (symmetric m x m)."""
    v = check_vector(v, length=ens.n, name="v")
    M = (ens.w_stack * v[:, None]).T @ ens.w_stack
    return symmetrize(M)


def apply_A(ens, X):
    """Apply A = W(Psi X Psi^T) to a d x d symmetric matrix."""
    X = check_square(X, size=ens.d, name="X")
    return apply_W(ens, ens.psi @ X @ ens.psi.T)


def apply_A_adjoint(ens, v):
    """Adjoint of A: Psi^T W*(v) Psi (symmetric d x d)."""
    return ens.psi.T @ apply_W_adjoint(ens, v) @ ens.psi


def generate_instance(ens, k, noise_sigma, seed):
    """Draw a k-sparse ground-truth instance with Gaussian noise.

    The support is uniform among size-k subsets, nonzeros are iid
    standard normal, and the noise bound epsilon is the realized l2
    norm of z (a certified, not probabilistic, bound).
    """
    k = check_positive_int(k, "k")
    if k > ens.d:
        raise ValueError(f"k={k} exceeds signal dimension d={ens.d}")
    if noise_sigma < 0:
        raise ValueError(f"noise_sigma must be nonnegative, got {noise_sigma}")

    support = np.sort(_stream(seed, _STREAM_SUPPORT).choice(ens.d, size=k, replace=False))
    values = _stream(seed, _STREAM_VALUES).standard_normal(k)
    x_star = np.zeros(ens.d)
    x_star[support] = values
    X_star = np.outer(x_star, x_star)

    if noise_sigma > 0:
        z = _stream(seed, _STREAM_NOISE).normal(0.0, noise_sigma, size=ens.n)
    else:
        z = np.zeros(ens.n)
    y = apply_A(ens, X_star) + z
    return SparseInstance(x_star=x_star, support=support, lift=X_star, z=z, y=y,
                          epsilon=float(np.linalg.norm(z)), k=k,
                          noise_sigma=float(noise_sigma), seed=int(seed))


def estimate_rip_constant(psi, k, trials, seed, batch=4096):
    """Monte-Carlo lower estimate of the restricted isometry constant delta_{2k}.

    Samples random 2k-sparse unit vectors x and returns the maximum of
    |  ||Psi x||_2^2 - 1 |.  This is an empirical lower bound on the true
    constant, never a certificate.
    """
    psi = check_matrix(psi, name="psi")
    d = psi.shape[1]
    k = check_positive_int(k, "k")
    trials = check_positive_int(trials, "trials")
    s = 2 * k
    if s > d:
        raise ValueError(f"2k={s} exceeds d={d}")

    rng = _stream(seed, _STREAM_PROBE)
    worst = 0.0
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        # random size-s supports via partial argsort of uniforms
        idx = np.argpartition(rng.random((b, d)), s - 1, axis=1)[:, :s]
        vals = rng.standard_normal((b, s))
        vals /= np.linalg.norm(vals, axis=1, keepdims=True)
        X = np.zeros((b, d))
        np.put_along_axis(X, idx, vals, axis=1)
        sq = np.sum((X @ psi.T) ** 2, axis=1)
        worst = max(worst, float(np.max(np.abs(sq - 1.0))))
        done += b
    return worst


# ---------------------------------------------------------------------------
# Serialization: generation parameters only, never raw matrices.
# ---------------------------------------------------------------------------

def problem_to_dict(ens, instance):
    """Parameter document regenerating an (ensemble, instance) pair exactly."""
    if ens.psi_kind == "custom":
        raise ValueError("custom ensembles carry raw matrices and cannot be serialized")
    if instance.seed != ens.seed:
        raise ValueError("serialization stores a single seed; ensemble and "
                         "instance seeds must match")
    return {
        "d": ens.d,
        "m": ens.m,
        "n": ens.n,
        "seed": ens.seed,
        "psi_kind": ens.psi_kind,
        "k": instance.k,
        "noise_sigma": instance.noise_sigma,
    }


def problem_from_dict(doc):
    """Rebuild (ensemble, instance) from a parameter document."""
    ens = make_ensemble(doc["d"], doc["m"], doc["n"], doc["seed"], doc["psi_kind"])
    inst = generate_instance(ens, doc["k"], doc["noise_sigma"], doc["seed"])
    return ens, inst


def problem_to_json(ens, instance):
    return json.dumps(problem_to_dict(ens, instance), sort_keys=True)


def problem_from_json(text):
    return problem_from_dict(json.loads(text))
