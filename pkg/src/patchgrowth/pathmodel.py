"""Periodic piecewise matrix paths and patch models.

A path is a 1-periodic function ``tau -> M(tau)`` on ``[0, 1)`` split into
half-open segments ``[tau_k, tau_{k+1})``. Each segment is either a
:class:`Constant` matrix or a :class:`Smooth` callable. Evaluation is
right-continuous; left limits are available through
:meth:`PiecewiseMatrixPath.left_limit`.

A :class:`PatchModel` pairs a diagonal growth path ``R`` with a migration
path ``L`` whose samples are Metzler with zero column sums, and binds to
``A(tau) = R(tau) + m L(tau)`` once ``m`` is known.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import Callable, Iterator, Sequence

import numpy as np

from ._validation import check_positive, check_square
from .errors import ModelError
from .quadrature import gauss_legendre

__all__ = [
    "Constant",
    "Smooth",
    "PiecewiseMatrixPath",
    "CombinedPath",
    "PatchModel",
    "ModelParameters",
    "merge_breakpoints",
    "average",
    "bind",
]

MERGE_TOL = 1e-15
COLUMN_TOL = 1e-12


class Constant:
    """Segment carrying a fixed matrix."""

    __slots__ = ("matrix",)

    def __init__(self, matrix):
        M = check_square(matrix, "segment matrix")
        M.setflags(write=False)
        self.matrix = M

    def __call__(self, tau: float) -> np.ndarray:
        return self.matrix

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def __eq__(self, other) -> bool:
        return isinstance(other, Constant) and np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash(self.matrix.tobytes())

    def __repr__(self) -> str:
        return f"Constant({self.matrix.tolist()!r})"


class Smooth:
    """Segment given by a callable ``tau -> matrix``, continuous on its interval.

    Parameters
    ----------
    func : callable
        Receives an absolute ``tau`` inside the segment (the closed interval
        is allowed so that left limits can be taken) and returns a square
        matrix.
    lipschitz : float, optional
        Declared Lipschitz bound of ``func``. Used to size the first
        integration step; estimated by sampling when omitted.
    """

    __slots__ = ("func", "lipschitz")

    def __init__(self, func: Callable[[float], np.ndarray], lipschitz: float | None = None):
        if not callable(func):
            raise ModelError("Smooth segment requires a callable")
        if lipschitz is not None:
            lipschitz = check_positive(lipschitz, "lipschitz", strict=False)
        self.func = func
        self.lipschitz = lipschitz

    def __call__(self, tau: float) -> np.ndarray:
        return check_square(self.func(tau), "smooth segment value")

    def __eq__(self, other) -> bool:
        return isinstance(other, Smooth) and self.func is other.func

    def __hash__(self):
        return hash(id(self.func))

    def __repr__(self) -> str:
        return f"Smooth({self.func!r})"


def _as_breakpoint(x) -> Fraction | float:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool) or not isinstance(x, Real):
        raise ModelError(f"breakpoint {x!r} is not a real number")
    if isinstance(x, int):
        return Fraction(x)
    return float(x)


class PiecewiseMatrixPath:
    """A 1-periodic piecewise matrix-valued function on ``[0, 1)``.

    Parameters
    ----------
    breakpoints : sequence of real
        Segment start points ``0 = tau_0 < tau_1 < ... < tau_N < 1``.
        :class:`fractions.Fraction` values are kept exactly.
    segments : sequence
        One entry per breakpoint: a :class:`Constant`, a :class:`Smooth`, or
        anything convertible to a square matrix (wrapped as Constant).

    Examples
    --------
    >>> from fractions import Fraction
    >>> P = PiecewiseMatrixPath([0, Fraction(1, 2)], [[[1.0]], [[-1.0]]])
    >>> float(P(0.25)[0, 0]), float(P(0.5)[0, 0]), float(P.left_limit(0.5)[0, 0])
    (1.0, -1.0, 1.0)
    """

    def __init__(self, breakpoints: Sequence, segments: Sequence):
        bps = [_as_breakpoint(b) for b in breakpoints]
        segs = [s if isinstance(s, (Constant, Smooth)) else Constant(s) for s in segments]
        if not bps:
            raise ModelError("a path needs at least one segment")
        if len(bps) != len(segs):
            raise ModelError(
                f"{len(bps)} breakpoints but {len(segs)} segments; lengths must match"
            )
        if bps[0] != 0:
            raise ModelError("first breakpoint must be 0")
        for k in range(1, len(bps)):
            if not bps[k] > bps[k - 1]:
                raise ModelError(f"breakpoints must be strictly increasing (index {k})")
        if not bps[-1] < 1:
            raise ModelError("breakpoints must lie in [0, 1)")
        n = None
        for k, s in enumerate(segs):
            dim = s.n if isinstance(s, Constant) else s(float(bps[k])).shape[0]
            if n is None:
                n = dim
            elif dim != n:
                raise ModelError(f"segment {k} has dimension {dim}, expected {n}")
        self._breakpoints = tuple(bps)
        self._segments = tuple(segs)
        self._n = int(n)
        self._edges = np.array([float(b) for b in bps] + [1.0])

    @property
    def n(self) -> int:
        return self._n

    @property
    def breakpoints(self) -> tuple:
        """Segment start points as given (Fractions preserved)."""
        return self._breakpoints

    @property
    def segments(self) -> tuple:
        return self._segments

    @property
    def edges(self) -> np.ndarray:
        """Float segment boundaries including the final 1."""
        return self._edges.copy()

    def lengths(self) -> list:
        """Segment lengths, exact when the breakpoints are Fractions."""
        ends = list(self._breakpoints[1:]) + [Fraction(1)]
        return [e - s for s, e in zip(self._breakpoints, ends)]

    def __len__(self) -> int:
        return len(self._segments)

    def __iter__(self) -> Iterator[tuple[float, float, Constant | Smooth]]:
        for k, seg in enumerate(self._segments):
            yield float(self._edges[k]), float(self._edges[k + 1]), seg

    @property
    def is_piecewise_constant(self) -> bool:
        return all(isinstance(s, Constant) for s in self._segments)

    def segment_index(self, tau: float) -> int:
        """Index of the segment containing ``tau mod 1`` (right-continuous)."""
        t = float(tau) % 1.0
        k = int(np.searchsorted(self._edges, t, side="right")) - 1
        return min(max(k, 0), len(self._segments) - 1)

    def __call__(self, tau: float) -> np.ndarray:
        t = float(tau) % 1.0
        return self._segments[self.segment_index(t)](t)

    def left_limit(self, tau: float) -> np.ndarray:
        """Limit of the path as ``tau`` is approached from the left.

        At ``tau = 0`` the limit wraps around to ``1``.
        """
        t = float(tau) % 1.0
        if t == 0.0:
            t = 1.0
        k = int(np.searchsorted(self._edges, t, side="left")) - 1
        k = min(max(k, 0), len(self._segments) - 1)
        return self._segments[k](t)

    def sample_points(self, per_segment: int = 9) -> list[float]:
        """Evenly spread interior sample points, one per Constant segment."""
        pts = []
        for a, b, seg in self:
            if isinstance(seg, Constant):
                pts.append(a)
            else:
                pts.extend(np.linspace(a, b, per_segment + 2)[:-1].tolist())
        return pts

    def __eq__(self, other) -> bool:
        if not isinstance(other, PiecewiseMatrixPath):
            return NotImplemented
        return (
            self._n == other._n
            and len(self._breakpoints) == len(other._breakpoints)
            and all(a == b for a, b in zip(self._breakpoints, other._breakpoints))
            and all(a == b for a, b in zip(self._segments, other._segments))
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"PiecewiseMatrixPath(n={self._n}, segments={len(self)})"


class _LinearCombination:
    """Picklable callable ``tau -> G(tau) + m * L(tau)``."""

    __slots__ = ("g", "l", "m")

    def __init__(self, g, l, m):
        self.g, self.l, self.m = g, l, m

    def __call__(self, tau):
        return self.g(tau) + self.m * self.l(tau)


class CombinedPath:
    """Growth and migration segments aligned on a common breakpoint set.

    The migration strength is bound later with :meth:`at`.
    """

    def __init__(self, breakpoints: Sequence, pairs: Sequence[tuple]):
        self.breakpoints = tuple(breakpoints)
        self.pairs = tuple(pairs)
        self.n = (
            pairs[0][0].n
            if isinstance(pairs[0][0], Constant)
            else pairs[0][0](float(breakpoints[0])).shape[0]
        )

    def __len__(self) -> int:
        return len(self.pairs)

    def at(self, m: float) -> PiecewiseMatrixPath:
        """Return the path ``A(tau) = R(tau) + m L(tau)``."""
        m = float(m)
        segs = []
        for g, l in self.pairs:
            if isinstance(g, Constant) and isinstance(l, Constant):
                segs.append(Constant(g.matrix + m * l.matrix))
            else:
                segs.append(Smooth(_LinearCombination(g, l, m)))
        return PiecewiseMatrixPath(self.breakpoints, segs)


def merge_breakpoints(growth: PiecewiseMatrixPath, migration: PiecewiseMatrixPath) -> CombinedPath:
    """Align two paths on the union of their breakpoints.

    Breakpoints closer than ``1e-15`` are merged. The result stores
    (growth segment, migration segment) pairs so that ``m`` can be bound
    later.

    Raises
    ------
    ModelError
        If the dimensions differ.
    """
    if growth.n != migration.n:
        raise ModelError(f"dimension mismatch: growth n={growth.n}, migration n={migration.n}")
    union = sorted(set(growth.breakpoints) | set(migration.breakpoints), key=float)
    merged = []
    for b in union:
        if merged and float(b) - float(merged[-1]) <= MERGE_TOL:
            continue
        merged.append(b)
    edges = [float(b) for b in merged] + [1.0]
    pairs = []
    for k in range(len(merged)):
        mid = 0.5 * (edges[k] + edges[k + 1])
        pairs.append(
            (
                growth.segments[growth.segment_index(mid)],
                migration.segments[migration.segment_index(mid)],
            )
        )
    return CombinedPath(merged, pairs)


def average(path: PiecewiseMatrixPath) -> np.ndarray:
    """Mean of the path over one period.

    Exact length-weighted sum for Constant segments, 32-point Gauss-Legendre
    per Smooth segment.
    """
    total = np.zeros((path.n, path.n))
    for (a, b, seg), length in zip(path, path.lengths()):
        if isinstance(seg, Constant):
            total += float(length) * seg.matrix
        else:
            total += gauss_legendre(seg, a, b)
    return total


@dataclass(frozen=True)
class ModelParameters:
    """Migration strength ``m >= 0`` and period ``T > 0``."""

    m: float
    T: float

    def __post_init__(self):
        object.__setattr__(self, "m", check_positive(self.m, "m", strict=False))
        object.__setattr__(self, "T", check_positive(self.T, "T"))


def _check_growth_sample(M: np.ndarray, where: str) -> None:
    off = M[~np.eye(M.shape[0], dtype=bool)]
    if np.any(off != 0.0):
        raise ModelError(f"{where}: growth matrix must be diagonal")


def _check_migration_sample(M: np.ndarray, where: str) -> None:
    n = M.shape[0]
    mask = ~np.eye(n, dtype=bool)
    if np.any(M[mask] < 0.0):
        i, j = np.argwhere((M < 0.0) & mask)[0]
        raise ModelError(f"{where}: off-diagonal entry L[{i}][{j}] = {M[i, j]} must be >= 0")
    sums = M.sum(axis=0)
    bad = np.flatnonzero(np.abs(sums) > COLUMN_TOL * (1.0 + np.abs(M).max()))
    if bad.size:
        j = int(bad[0])
        raise ModelError(f"{where}: column {j} of L sums to {sums[j]:.3g}, expected 0")


class PatchModel:
    """Periodic patch model ``x' = (R(t/T) + m L(t/T)) x``.

    Parameters
    ----------
    growth : PiecewiseMatrixPath
        Diagonal growth-rate path ``R``.
    migration : PiecewiseMatrixPath
        Migration path ``L`` with Metzler samples and zero column sums.
    name, description : str, optional
        Metadata carried into exported model files.

    Raises
    ------
    ModelError
        If a sample violates the structural invariants. Smooth segments are
        sampled at a few points per segment.
    """

    def __init__(
        self,
        growth: PiecewiseMatrixPath,
        migration: PiecewiseMatrixPath,
        *,
        name: str | None = None,
        description: str | None = None,
    ):
        if not isinstance(growth, PiecewiseMatrixPath) or not isinstance(
            migration, PiecewiseMatrixPath
        ):
            raise ModelError("growth and migration must be PiecewiseMatrixPath instances")
        if growth.n != migration.n:
            raise ModelError(f"dimension mismatch: growth n={growth.n}, migration n={migration.n}")
        for tau in growth.sample_points():
            _check_growth_sample(growth(tau), f"growth at tau={tau:.6g}")
        for tau in migration.sample_points():
            _check_migration_sample(migration(tau), f"migration at tau={tau:.6g}")
        self.growth = growth
        self.migration = migration
        self.name = name
        self.description = description
        self._combined: CombinedPath | None = None

    @classmethod
    def piecewise_constant(
        cls,
        breakpoints: Sequence,
        rates: Sequence[Sequence[float]],
        migrations: Sequence,
        **meta,
    ) -> "PatchModel":
        """Build a model whose growth and migration share the given breakpoints.

        Parameters
        ----------
        breakpoints : sequence
            Segment start points.
        rates : sequence of vectors
            Growth rates ``r_i`` per segment.
        migrations : sequence of matrices
            Migration matrix per segment.
        """
        growth = PiecewiseMatrixPath(breakpoints, [np.diag(np.asarray(r, float)) for r in rates])
        migration = PiecewiseMatrixPath(breakpoints, list(migrations))
        return cls(growth, migration, **meta)

    @property
    def n(self) -> int:
        return self.growth.n

    def combined(self) -> CombinedPath:
        if self._combined is None:
            self._combined = merge_breakpoints(self.growth, self.migration)
        return self._combined

    def growth_means(self) -> np.ndarray:
        """Mean growth rates ``r_bar_i`` over one period."""
        return np.diag(average(self.growth)).copy()

    @property
    def is_piecewise_constant(self) -> bool:
        return self.growth.is_piecewise_constant and self.migration.is_piecewise_constant

    def shifted(self, c: float) -> "PatchModel":
        """Model with every growth rate shifted by ``c``."""
        shift = Constant(c * np.eye(self.n))
        segs = []
        for seg in self.growth.segments:
            if isinstance(seg, Constant):
                segs.append(Constant(seg.matrix + shift.matrix))
            else:
                segs.append(Smooth(_LinearCombination(seg, shift, 1.0)))
        return PatchModel(
            PiecewiseMatrixPath(self.growth.breakpoints, segs),
            self.migration,
            name=self.name,
            description=self.description,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, PatchModel):
            return NotImplemented
        return self.growth == other.growth and self.migration == other.migration

    __hash__ = None

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"PatchModel{label}(n={self.n}, segments={len(self.combined())})"


def bind(model: PatchModel, params: ModelParameters | float) -> PiecewiseMatrixPath:
    """Concrete path ``A(tau) = R(tau) + m L(tau)``.

    ``params`` may be a :class:`ModelParameters` or just the value of ``m``.
    """
    m = params.m if isinstance(params, ModelParameters) else check_positive(
        params, "m", strict=False
    )
    return model.combined().at(m)


def is_time_independent(path: PiecewiseMatrixPath) -> bool:
    """True when every segment is the same Constant matrix."""
    if not path.is_piecewise_constant:
        return False
    first = path.segments[0].matrix
    return all(np.array_equal(s.matrix, first) for s in path.segments)

