"""Shared generators for tests."""

from fractions import Fraction

import numpy as np
from hypothesis import strategies as st
from scipy.sparse.csgraph import connected_components

from patchgrowth import PatchModel


def random_migration(rng, n, density=0.6, scale=1.0):
    """Metzler matrix with zero column sums and random sparsity."""
    L = rng.uniform(0.0, scale, (n, n)) * (rng.random((n, n)) < density)
    np.fill_diagonal(L, 0.0)
    L[np.diag_indices(n)] = -L.sum(axis=0)
    return L


def strongly_connected(M):
    """Irreducibility oracle via scipy's strongly connected components."""
    adj = (np.abs(np.asarray(M)) > 0).astype(int)
    np.fill_diagonal(adj, 0)
    ncomp, _ = connected_components(adj, directed=True, connection="strong")
    return ncomp == 1


def random_model(rng, n=None, segments=None, rate=2.0, require_h2=True):
    """Random piecewise-constant model on a grid of twelfths.

    With ``require_h2`` the mean migration matrix is made irreducible by
    rejection.
    """
    while True:
        nn = int(rng.integers(2, 5)) if n is None else n
        k = int(rng.integers(1, 5)) if segments is None else segments
        cuts = sorted(set(rng.choice(np.arange(1, 12), size=k - 1, replace=False).tolist()))
        bps = [Fraction(0)] + [Fraction(c, 12) for c in cuts]
        rates = [rng.uniform(-rate, rate, nn) for _ in bps]
        migs = [random_migration(rng, nn) for _ in bps]
        model = PatchModel.piecewise_constant(bps, rates, migs)
        if not require_h2:
            return model
        lengths = np.diff([float(b) for b in bps] + [1.0])
        Lbar = sum(w * L for w, L in zip(lengths, migs))
        if strongly_connected(Lbar):
            return model


@st.composite
def metzler_matrices(draw, n_min=2, n_max=4, zero_columns=False):
    """Hypothesis strategy for Metzler matrices."""
    n = draw(st.integers(n_min, n_max))
    off = draw(st.lists(st.floats(0.0, 3.0), min_size=n * n, max_size=n * n))
    diag = draw(st.lists(st.floats(-3.0, 3.0), min_size=n, max_size=n))
    M = np.array(off).reshape(n, n)
    np.fill_diagonal(M, 0.0)
    if zero_columns:
        M[np.diag_indices(n)] = -M.sum(axis=0)
    else:
        M[np.diag_indices(n)] = diag
    return M


@st.composite
def models(draw, n_min=2, n_max=3):
    """Hypothesis strategy for piecewise-constant models (H2 not enforced)."""
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    n = draw(st.integers(n_min, n_max))
    k = draw(st.integers(1, 3))
    return random_model(rng, n=n, segments=k, require_h2=False)
