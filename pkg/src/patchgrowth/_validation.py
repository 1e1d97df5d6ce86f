"""Input checking helpers shared across modules."""

from __future__ import annotations

import numbers

import numpy as np

from .errors import ModelError


def check_square(M, name: str = "matrix") -> np.ndarray:
    """Return ``M`` as a finite square float array or raise :class:`ModelError`."""
    A = np.array(M, dtype=float)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ModelError(f"{name} must be a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ModelError(f"{name} has non-finite entries")
    return A


def check_vector(x, n: int | None = None, name: str = "vector") -> np.ndarray:
    """Return ``x`` as a finite 1-d float array, optionally of length ``n``."""
    v = np.array(x, dtype=float).reshape(-1)
    if n is not None and v.shape[0] != n:
        raise ModelError(f"{name} must have length {n}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ModelError(f"{name} has non-finite entries")
    return v


def check_simplex(theta, n: int | None = None, tol: float = 1e-9) -> np.ndarray:
    """Validate a point of the unit simplex and return it renormalized."""
    v = check_vector(theta, n, "theta")
    if v.min() < -tol or abs(v.sum() - 1.0) > tol:
        raise ModelError("theta must be nonnegative with entries summing to 1")
    v = np.clip(v, 0.0, None)
    return v / v.sum()


def check_positive(value, name: str, *, strict: bool = True) -> float:
    """Return ``value`` as float after checking it is finite and positive."""
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise ModelError(f"{name} must be a real number")
    x = float(value)
    if not np.isfinite(x) or (x <= 0 if strict else x < 0):
        bound = "> 0" if strict else ">= 0"
        raise ModelError(f"{name} must be finite and {bound}, got {value!r}")
    return x
