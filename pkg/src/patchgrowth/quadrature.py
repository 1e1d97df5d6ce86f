"""Gauss-Legendre quadrature and crossing detection for smooth segments."""

from __future__ import annotations

from functools import lru_cache
from typing import Callable

import numpy as np
import scipy.optimize

from .errors import CrossingLimitError

GL_ORDER = 32
CROSSING_CAP = 1024


@lru_cache(maxsize=8)
def _gl_rule(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def gauss_legendre(f: Callable[[float], np.ndarray], a: float, b: float, order: int = GL_ORDER):
    """Integrate ``f`` over ``[a, b]`` with an ``order``-point Gauss-Legendre rule.

    ``f`` may return scalars or arrays; the result has the same shape.
    """
    x, w = _gl_rule(order)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    total = None
    for xi, wi in zip(x, w):
        val = wi * np.asarray(f(mid + half * xi), dtype=float)
        total = val if total is None else total + val
    return half * total


def _bisect(g: Callable[[float], float], lo: float, hi: float, glo: float, xtol: float) -> float:
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0.0:
            return mid
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def pairwise_crossings(
    values: Callable[[float], np.ndarray],
    a: float,
    b: float,
    *,
    grid: int = 257,
    xtol: float = 1e-12,
    cap: int = CROSSING_CAP,
    what: str = "growth rates",
) -> list[float]:
    """Locate sign changes of ``values(t)[i] - values(t)[j]`` inside ``(a, b)``.

    A uniform grid brackets sign changes, which are then refined by
    bisection to ``xtol``. Crossings closer together than the grid spacing
    can be missed; the model class is restricted to finitely many,
    well-separated crossings per segment.

    Raises
    ------
    CrossingLimitError
        If more than ``cap`` crossings are found.
    """
    ts = np.linspace(a, b, grid)
    V = np.array([values(t) for t in ts], dtype=float)
    n = V.shape[1]
    found: list[float] = []
    for i in range(n):
        for j in range(i + 1, n):
            d = V[:, i] - V[:, j]

            def g(t, i=i, j=j):
                v = values(t)
                return float(v[i] - v[j])

            for k in range(grid - 1):
                if d[k] == 0.0 or d[k + 1] == 0.0 or (d[k] > 0) == (d[k + 1] > 0):
                    continue
                found.append(_bisect(g, ts[k], ts[k + 1], d[k], xtol))
                if len(found) > cap:
                    raise CrossingLimitError(
                        f"more than {cap} crossings of the {what} in one segment; "
                        "rapidly oscillating coefficients are not supported"
                    )
    found.sort()
    merged: list[float] = []
    for t in found:
        if not merged or t - merged[-1] > 10 * xtol:
            merged.append(t)
    return [t for t in merged if a < t < b]


def gap_minima(
    gap: Callable[[float], float],
    a: float,
    b: float,
    *,
    grid: int = 257,
    threshold: float = 1e-6,
    xtol: float = 1e-12,
) -> list[float]:
    """Interior points where a nonnegative gap function nearly touches zero.

    Used to split quadrature where the dominant eigenvalue changes branch.
    """
    ts = np.linspace(a, b, grid)
    g = np.array([gap(t) for t in ts])
    out = []
    for k in range(1, grid - 1):
        if g[k] <= g[k - 1] and g[k] <= g[k + 1]:
            res = scipy.optimize.minimize_scalar(
                gap, bounds=(ts[k - 1], ts[k + 1]), method="bounded", options={"xatol": xtol}
            )
            if res.fun <= threshold * (1.0 + abs(res.fun)):
                out.append(float(res.x))
    return out
