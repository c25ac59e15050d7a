"""Input validation helpers shared across the package."""

import numpy as np


def check_vector(v, length=None, name="vector"):
    """Coerce to a 1-d float array and validate length/finiteness."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got shape {v.shape}")
    if length is not None and v.shape[0] != length:
        raise ValueError(f"{name} must have length {length}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def check_matrix(M, shape=None, name="matrix"):
    """Coerce to a 2-d float array and validate shape/finiteness."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {M.shape}")
    if shape is not None and M.shape != tuple(shape):
        raise ValueError(f"{name} must have shape {tuple(shape)}, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")
    return M


def check_square(M, size=None, name="matrix"):
    M = check_matrix(M, name=name)
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got shape {M.shape}")
    if size is not None and M.shape[0] != size:
        raise ValueError(f"{name} must be {size}x{size}, got {M.shape}")
    return M


def check_positive_int(value, name):
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if value <= 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return int(value)


def symmetrize(M):
    """Symmetric part (M + M^T) / 2."""
    return 0.5 * (M + M.T)
