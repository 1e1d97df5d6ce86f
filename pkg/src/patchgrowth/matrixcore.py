"""Dense linear algebra for small Metzler and nonnegative matrices.

Entry ``M[i, j]`` is read as the flow into patch ``i`` from patch ``j``.
All routines are pure functions of their inputs.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ._validation import check_square
from .errors import NumericalError, SpectralError

__all__ = [
    "SpectralResult",
    "PerronResult",
    "is_metzler",
    "is_nonnegative",
    "is_irreducible",
    "spectral_abscissa",
    "nonnegative_eigenvectors",
    "perron_root",
    "matrix_exponential",
    "gap_tolerance",
]


def gap_tolerance(lam: float) -> float:
    """Spectral gap below which a dominant eigenvalue counts as non-simple."""
    return 1e-9 * (1.0 + abs(lam))


@dataclass(frozen=True, eq=False)
class SpectralResult:
    """Dominant spectral data of a Metzler matrix.

    Attributes
    ----------
    lambda_max : float
        Spectral abscissa (largest real part of the spectrum).
    eigvec : ndarray or None
        Nonnegative eigenvector on the unit simplex, if one is available.
    simple : bool
        Whether the dominant eigenvalue is separated from the rest of the
        spectrum by more than :func:`gap_tolerance`.
    gap : float
        Distance from ``lambda_max`` to the next-largest real part, ``inf``
        for 1x1 input.
    eigenvalues : ndarray
        Full spectrum sorted by decreasing real part.
    """

    lambda_max: float
    eigvec: np.ndarray | None
    simple: bool
    gap: float
    eigenvalues: np.ndarray = field(repr=False)


@dataclass(frozen=True, eq=False)
class PerronResult:
    """Perron root ``mu`` and simplex-normalized Perron vector ``pi``."""

    mu: float
    pi: np.ndarray


def is_metzler(M) -> bool:
    """True iff every off-diagonal entry of ``M`` is ``>= 0`` (exact test)."""
    A = check_square(M)
    off = A[~np.eye(A.shape[0], dtype=bool)]
    return bool(np.all(off >= 0.0))


def is_nonnegative(M, tol: float = 0.0) -> bool:
    """True iff every entry of ``M`` is ``>= -tol``."""
    A = check_square(M)
    return bool(np.all(A >= -tol))


def _reaches_all(adj: np.ndarray) -> bool:
    # BFS from node 0 over adj[target, source]
    n = adj.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        j = queue.popleft()
        for i in np.flatnonzero(adj[:, j] & ~seen):
            seen[i] = True
            queue.append(int(i))
    return bool(seen.all())


def is_irreducible(M, tol: float = 0.0) -> bool:
    """Strong connectivity of the off-diagonal support of ``M``.

    The graph has an edge ``j -> i`` iff ``M[i, j] > tol`` for ``i != j``.

    Parameters
    ----------
    M : array_like
        Metzler or nonnegative square matrix.
    tol : float, default 0
        Support threshold. Use 0 for exact model data and a small positive
        value (``1e-12``) for matrices produced by quadrature.
    """
    A = check_square(M)
    n = A.shape[0]
    if n == 1:
        return True
    adj = A > tol
    np.fill_diagonal(adj, False)
    return _reaches_all(adj) and _reaches_all(adj.T)


def _eigenspace(M: np.ndarray, lam: float, dim_hint: int) -> np.ndarray:
    """Orthonormal basis (columns) of the null space of ``M - lam I``."""
    n = M.shape[0]
    _, s, vh = np.linalg.svd(M - lam * np.eye(n))
    scale = 1.0 + np.abs(M).max()
    thresh = max(1e-8 * scale, 1e3 * np.finfo(float).eps * scale)
    k = int(np.sum(s <= thresh))
    k = max(1, min(k, dim_hint)) if k else 1
    return vh[n - k:].T


def _canonical_nonnegative(basis: np.ndarray) -> np.ndarray | None:
    """Project the uniform vector onto span(basis); keep it if nonnegative."""
    n = basis.shape[0]
    u = np.full(n, 1.0 / n)
    p = basis @ (basis.T @ u)
    if p.sum() < 0:
        p = -p
    scale = np.abs(p).max()
    if scale == 0.0 or p.min() < -1e-9 * scale:
        return None
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def _to_simplex(v: np.ndarray) -> np.ndarray | None:
    v = np.real_if_close(v, tol=1e6).real
    s = v.sum()
    if s == 0.0:
        return None
    v = v / s
    if v.min() < -1e-9 * np.abs(v).max():
        return None
    v = np.clip(v, 0.0, None)
    return v / v.sum()


def _sorted_eig(A: np.ndarray, want_vectors: bool):
    n = A.shape[0]
    r = 1.0 + np.abs(np.diag(A)).max()
    try:
        if want_vectors:
            w, V = np.linalg.eig(A + r * np.eye(n))
        else:
            w, V = np.linalg.eigvals(A + r * np.eye(n)), None
    except np.linalg.LinAlgError as exc:
        raise SpectralError(f"eigensolver did not converge: {exc}", matrix=A) from exc
    w = w - r
    order = np.lexsort((-w.imag, -w.real))
    return w[order], (None if V is None else V[:, order])


def spectral_abscissa(M) -> SpectralResult:
    """Spectral abscissa and dominant nonnegative eigenvector of a Metzler matrix.

    The spectrum is obtained from a dense eigendecomposition of
    ``M + r I`` with ``r = 1 + max|diag M|`` and shifted back.

    Parameters
    ----------
    M : array_like
        Metzler matrix.

    Returns
    -------
    SpectralResult

    Notes
    -----
    When the dominant eigenvalue is not simple, ``eigvec`` is the orthogonal
    projection of the uniform vector onto the dominant eigenspace, clipped
    and renormalized, and only when that projection is nonnegative.

    Examples
    --------
    >>> res = spectral_abscissa([[-0.5, 0.0], [0.0, 0.5]])
    >>> res.lambda_max, res.eigvec.tolist(), res.simple
    (0.5, [0.0, 1.0], True)
    """
    A = check_square(M)
    n = A.shape[0]
    w, V = _sorted_eig(A, want_vectors=True)
    lam = float(w[0].real)
    gap = float(lam - w[1].real) if n > 1 else float("inf")
    gap = max(gap, 0.0)
    simple = gap > gap_tolerance(lam)
    if simple:
        vec = _to_simplex(V[:, 0])
        if vec is None:
            vec = _canonical_nonnegative(_eigenspace(A, lam, 1))
    else:
        mult = int(np.sum(lam - w.real <= gap_tolerance(lam)))
        vec = _canonical_nonnegative(_eigenspace(A, lam, mult))
    return SpectralResult(lam, vec, bool(simple), gap, w)


def nonnegative_eigenvectors(M, tol: float | None = None) -> list[tuple[float, np.ndarray]]:
    """Nonnegative simplex eigenvectors of ``M``, one per real eigenvalue cluster.

    Used for diagnostics: each equilibrium of the frozen simplex flow is a
    nonnegative eigenvector. Multi-dimensional eigenspaces contribute the
    canonical projection of the uniform vector when it is nonnegative.

    Returns
    -------
    list of (eigenvalue, vector)
        Sorted by decreasing eigenvalue.
    """
    A = check_square(M)
    w, _ = _sorted_eig(A, want_vectors=False)
    out: list[tuple[float, np.ndarray]] = []
    i = 0
    while i < len(w):
        lam = float(w[i].real)
        t = gap_tolerance(lam) if tol is None else tol
        j = i
        while j < len(w) and abs(w[j].real - lam) <= t:
            j += 1
        cluster = w[i:j]
        i = j
        if np.abs(cluster.imag).max() > t:
            continue
        vec = _canonical_nonnegative(_eigenspace(A, lam, len(cluster)))
        if vec is not None:
            out.append((lam, vec))
    return out


def perron_root(N) -> PerronResult:
    """Perron-Frobenius root and vector of an irreducible nonnegative matrix.

    Parameters
    ----------
    N : array_like
        Nonnegative irreducible square matrix.

    Returns
    -------
    PerronResult
        ``mu > 0`` and ``pi`` with positive entries summing to one.

    Raises
    ------
    SpectralError
        If ``N`` has negative entries or is reducible.
    """
    A = check_square(N)
    scale = np.abs(A).max()
    if scale == 0.0 or A.min() < -1e-12 * scale:
        raise SpectralError("perron_root requires irreducible nonnegative matrix", matrix=A)
    A = np.clip(A, 0.0, None)
    if not is_irreducible(A):
        raise SpectralError("perron_root requires irreducible nonnegative matrix", matrix=A)
    n = A.shape[0]
    if n == 1:
        return PerronResult(float(A[0, 0]), np.ones(1))
    try:
        w, V = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:
        raise SpectralError(f"eigensolver did not converge: {exc}", matrix=A) from exc
    k = int(np.argmax(w.real))
    v = np.abs(V[:, k].real)
    v = v / v.sum()
    # a few power steps polish the vector and give a Rayleigh-free root estimate
    for _ in range(3):
        y = A @ v
        s = y.sum()
        if not np.isfinite(s) or s <= 0.0:
            raise SpectralError("Perron refinement failed", matrix=A)
        v = y / s
    mu = float((A @ v).sum())
    if not mu > 0.0 or np.any(v <= 0.0):
        raise SpectralError("Perron root or vector not positive", matrix=A)
    return PerronResult(mu, v)


def matrix_exponential(M, t: float = 1.0) -> np.ndarray:
    """``exp(t M)`` by scaling and squaring with a Pade core.

    Parameters
    ----------
    M : array_like
        Square matrix.
    t : float, default 1
        Finite scalar time.

    Returns
    -------
    ndarray
        The exponential. ``t == 0`` returns the identity exactly.

    Raises
    ------
    NumericalError
        If the result has non-finite entries (overflow).
    """
    A = check_square(M)
    t = float(t)
    if not np.isfinite(t):
        raise NumericalError("matrix_exponential requires finite t")
    n = A.shape[0]
    if t == 0.0:
        return np.eye(n)
    with np.errstate(all="ignore"):
        E = scipy.linalg.expm(t * A)
    if not np.all(np.isfinite(E)):
        raise NumericalError(
            "matrix exponential overflowed; rescale time or shift the growth rates"
        )
    return E
