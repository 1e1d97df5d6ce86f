"""Dispersal-induced growth (DIG) and decay (DID).

DIG: every patch is a sink (``r_bar_i < 0``) yet ``Lambda(m, T) > 0`` for
some ``m, T``. It is possible iff ``chi > 0``.

DID: every patch is a source (``r_bar_i > 0``) yet ``Lambda(m, T) < 0``
for some ``m, T``. It is possible iff ``sigma < 0``; a migration that
always sends everybody to a currently worst patch drives
``Lambda(m -> inf)`` to ``sigma``, which :func:`did_construct` builds.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import CrossingLimitError, ModelError, NumericalError, PatchGrowthError
from .matrixcore import is_irreducible, spectral_abscissa
from .monodromy import growth_rate
from .pathmodel import (
    Constant,
    ModelParameters,
    PatchModel,
    PiecewiseMatrixPath,
    average,
    is_time_independent,
)
from .quadrature import CROSSING_CAP, gauss_legendre, pairwise_crossings
from .limits import lambda_m_to_inf, sigma_chi
from .simplexflow import CheckConfig, check_H3

__all__ = [
    "PatchClassification",
    "PhenomenonResult",
    "MinimizerPartition",
    "DIDConstruction",
    "default_grid",
    "classify",
    "dig_scan",
    "did_scan",
    "minimizer_partition",
    "did_construct",
]

NEUTRAL_TOL = 1e-12
WITNESS_TOL = 1e-9


def default_grid() -> np.ndarray:
    """13 log-spaced values on ``[1e-2, 1e3]``."""
    return np.logspace(-2, 3, 13)


@dataclass(frozen=True, eq=False)
class PatchClassification:
    """Mean growth per patch with sink/source/neutral labels."""

    rbar: np.ndarray
    labels: tuple
    sigma: float
    chi: float

    @property
    def all_sinks(self) -> bool:
        return all(lab == "sink" for lab in self.labels)

    @property
    def all_sources(self) -> bool:
        return all(lab == "source" for lab in self.labels)

    def to_dict(self) -> dict:
        return {"rbar": self.rbar.tolist(), "labels": list(self.labels),
                "sigma": self.sigma, "chi": self.chi}


def _growth(model_or_growth) -> PiecewiseMatrixPath:
    return model_or_growth.growth if isinstance(model_or_growth, PatchModel) else model_or_growth


def classify(model) -> PatchClassification:
    """Label each patch by the sign of its mean growth rate.

    ``|r_bar_i| <= 1e-12`` counts as neutral.
    """
    growth = _growth(model)
    rbar = np.diag(average(growth)).copy()
    labels = tuple(
        "neutral" if abs(r) <= NEUTRAL_TOL else ("sink" if r < 0 else "source") for r in rbar
    )
    sigma, chi = sigma_chi(growth)
    return PatchClassification(rbar, labels, sigma, chi)


@dataclass(frozen=True, eq=False)
class PhenomenonResult:
    """Outcome of a DIG or DID scan.

    Attributes
    ----------
    phenomenon : str
        ``"DIG"`` or ``"DID"``.
    feasible : str
        ``"theory-certain"`` (a sufficient condition holds),
        ``"found-numerically"`` (witness found, sufficient condition not
        established), ``"impossible"`` (a necessary condition fails) or
        ``"not-found"`` (nothing decided and no witness on the grid).
    witness : tuple or None
        ``(m, T, Lambda)`` of the first witness in grid order.
    gate : str
        The condition that decided ``feasible``.
    by_definition : bool
        Whether the patches are all sinks (DIG) or all sources (DID).
    """

    phenomenon: str
    feasible: str
    witness: tuple | None
    gate: str
    by_definition: bool
    classification: PatchClassification
    limit: float | None = None
    evaluations: int = 0
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "phenomenon": self.phenomenon,
            "feasible": self.feasible,
            "witness": None if self.witness is None else list(self.witness),
            "gate": self.gate,
            "by_definition": self.by_definition,
            "classification": self.classification.to_dict(),
            "limit": self.limit,
            "evaluations": self.evaluations,
        }
        d.update({k: v for k, v in self.details.items() if k not in ("construction", "model")})
        return d


def _eval_point(args):
    model, m, T = args
    try:
        return growth_rate(model, ModelParameters(m, T)).Lambda
    except NumericalError:
        return float("nan")


def _sweep(model: PatchModel, m_grid, T_grid, predicate, n_jobs: int = 1):
    """Evaluate in m-major order; return (first witness or None, evaluations)."""
    points = [(float(m), float(T)) for m in sorted(m_grid) for T in sorted(T_grid)]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            values = list(pool.map(_eval_point, [(model, m, T) for m, T in points], chunksize=4))
        for (m, T), lam in zip(points, values):
            if np.isfinite(lam) and predicate(lam):
                return (m, T, lam), len(points)
        return None, len(points)
    count = 0
    for m, T in points:
        lam = _eval_point((model, m, T))
        count += 1
        if np.isfinite(lam) and predicate(lam):
            return (m, T, lam), count
    return None, count


def _check_grid(grid, name, positive_only):
    g = np.atleast_1d(np.asarray(grid, dtype=float))
    if g.size == 0 or not np.all(np.isfinite(g)):
        raise ModelError(f"{name} grid must be nonempty and finite")
    if positive_only and np.any(g <= 0):
        raise ModelError(f"{name} grid values must be > 0")
    if np.any(g < 0):
        raise ModelError(f"{name} grid values must be >= 0")
    return g


def dig_scan(model: PatchModel, m_grid=None, T_grid=None, *, config: CheckConfig | None = None,
             n_jobs: int = 1) -> PhenomenonResult:
    """Search for dispersal-induced growth.

    ``chi <= 0`` makes DIG impossible and no growth rate is evaluated.
    Otherwise ``Lambda`` is swept over the grid (m-major, ascending) and
    the first value ``> 1e-9`` is the witness. Existence is theory-certain
    when H3 holds at the smallest grid ``m`` (then ``Lambda(m, T)``
    approaches ``chi > 0`` for small ``m`` and large ``T``).
    """
    m_grid = _check_grid(default_grid() if m_grid is None else m_grid, "m", True)
    T_grid = _check_grid(default_grid() if T_grid is None else T_grid, "T", True)
    cls = classify(model)
    if cls.chi <= 0:
        return PhenomenonResult("DIG", "impossible", None, "chi <= 0 bounds the growth rate above",
                                cls.all_sinks, cls, cls.chi)
    witness, count = _sweep(model, m_grid, T_grid, lambda lam: lam > WITNESS_TOL, n_jobs)
    m_small = float(np.min(m_grid))
    h3 = check_H3(model, m_small, config)
    details = {"H3_probe": {"m": m_small, "verdict": h3.verdict}}
    if h3.verified:
        feasible, gate = "theory-certain", f"chi > 0 and H3 verified-sampled at m={m_small:g}"
    elif witness is not None:
        feasible, gate = "found-numerically", "witness on the sweep grid"
    else:
        feasible, gate = "not-found", "chi > 0 but H3 not verified and no witness on the grid"
    return PhenomenonResult("DIG", feasible, witness, gate, cls.all_sinks, cls, cls.chi, count,
                            details)


@dataclass(frozen=True, eq=False)
class MinimizerPartition:
    """Piecewise-constant choice of a worst patch.

    ``breakpoints[k]`` starts the piece on which patch ``indices[k]``
    attains ``min_i r_i``. Pieces cover ``[0, 1)``.
    """

    breakpoints: tuple
    indices: tuple

    def index_at(self, tau: float) -> int:
        t = float(tau) % 1.0
        k = int(np.searchsorted([float(b) for b in self.breakpoints], t, side="right")) - 1
        return self.indices[max(k, 0)]

    def never_minimal(self, n: int) -> tuple:
        return tuple(i for i in range(n) if i not in set(self.indices))


def _argmin(values) -> int:
    v = np.asarray(values)
    return int(np.flatnonzero(v == v.min())[0])


def minimizer_partition(growth) -> MinimizerPartition:
    """Partition the period by which patch has the smallest growth rate.

    Ties go to the lowest index. Each segment of the growth path starts a
    new piece; Smooth segments are further split at pairwise crossings of
    the rates, with the argmin taken at each piece's midpoint.

    Raises
    ------
    CrossingLimitError
        If the growth rates oscillate too rapidly (too many crossings).
    """
    path = _growth(growth)
    starts, idx = [], []
    for (a, b, seg), bp in zip(path, path.breakpoints):
        if isinstance(seg, Constant):
            pieces = [(bp, _argmin(np.diag(seg.matrix)))]
        else:
            f = lambda t, seg=seg: np.diag(seg(t))  # noqa: E731
            try:
                cuts = pairwise_crossings(f, a, b, what="growth rates (rapid oscillations)")
            except CrossingLimitError as exc:
                raise CrossingLimitError(
                    f"minimizer partition needs finitely many crossings (cap {CROSSING_CAP} per "
                    f"segment); rapid oscillations are not supported: {exc}"
                ) from exc
            edges = [a, *cuts, b]
            pieces = [(bp if k == 0 else edges[k], _argmin(f(0.5 * (edges[k] + edges[k + 1]))))
                      for k in range(len(edges) - 1)]
        for s, i in pieces:
            starts.append(s)
            idx.append(i)
    return MinimizerPartition(tuple(starts), tuple(idx))


@dataclass(frozen=True, eq=False)
class DIDConstruction:
    """Migration built to drive the growth rate to ``sigma`` as ``m`` grows.

    Attributes
    ----------
    migration : PiecewiseMatrixPath
    partition : MinimizerPartition
    case : int
        1 if every patch is somewhere a minimizer, else 2.
    never_minimal : tuple
        Patches that are never selected (the set ``I`` of case 2).
    epsilon : float
        Weight of the extra links on the first piece in case 2.
    correction : float
        ``epsilon * sum_{i in I} integral over the first piece of r_i``.
    """

    migration: PiecewiseMatrixPath
    partition: MinimizerPartition
    case: int
    never_minimal: tuple
    epsilon: float
    correction: float


def _to_worst(n: int, target: int, extra: tuple = (), eps: float = 0.0) -> np.ndarray:
    L = np.zeros((n, n))
    for j in range(n):
        if j != target:
            L[target, j] = 1.0
    for i in extra:
        for j in range(n):
            if j != i:
                L[i, j] = eps
    L[np.diag_indices(n)] = 0.0
    L[np.diag_indices(n)] = -L.sum(axis=0)
    return L


def did_construct(growth, epsilon: float = 1e-3) -> DIDConstruction:
    """Migration that sends everybody to a currently worst patch.

    On each piece of the minimizer partition, every patch ``j`` migrates at
    rate 1 to the selected patch ``i_k``. If some patches are never
    selected (case 2), on the first piece they also receive migration at
    rate ``epsilon`` from every other patch, which makes the mean
    migration irreducible.

    Raises
    ------
    ModelError
        If ``epsilon == 0`` in case 2.
    PatchGrowthError
        If the result is not irreducible on average (construction bug).
    """
    path = _growth(growth)
    n = path.n
    part = minimizer_partition(path)
    missing = part.never_minimal(n)
    case = 1 if not missing else 2
    eps = float(epsilon)
    if eps < 0:
        raise ModelError("epsilon must be >= 0")
    if case == 2 and eps == 0.0:
        raise ModelError("epsilon must be > 0 when some patch is never minimal")
    segs = []
    for k, i in enumerate(part.indices):
        extra = missing if (case == 2 and k == 0) else ()
        segs.append(_to_worst(n, i, extra, eps))
    migration = PiecewiseMatrixPath(part.breakpoints, segs)
    tol = 0.0 if path.is_piecewise_constant else 1e-12
    if not is_irreducible(average(migration), tol):
        raise PatchGrowthError("internal error: constructed migration is reducible on average")
    correction = 0.0
    if case == 2:
        a = float(part.breakpoints[0])
        b = float(part.breakpoints[1]) if len(part.breakpoints) > 1 else 1.0
        correction = eps * sum(_segment_integral(path, i, a, b) for i in missing)
    return DIDConstruction(migration, part, case, missing, eps, correction)


def _segment_integral(path: PiecewiseMatrixPath, i: int, a: float, b: float) -> float:
    total = 0.0
    for s, e, seg in path:
        lo, hi = max(s, a), min(e, b)
        if hi <= lo:
            continue
        if isinstance(seg, Constant):
            total += (hi - lo) * seg.matrix[i, i]
        else:
            total += float(gauss_legendre(lambda t, seg=seg: seg(t)[i, i], lo, hi))
    return total


def did_scan(growth, m_grid=None, T_grid=None, epsilon: float = 1e-3, *, migration=None,
             config: CheckConfig | None = None, n_jobs: int = 1) -> PhenomenonResult:
    """Search for dispersal-induced decay.

    ``sigma >= 0`` makes DID impossible. With a user migration that does
    not depend on time, the infimum of ``Lambda`` is ``sum_i q_i r_bar_i``
    (``q`` the kernel vector of ``L``), so DID under that migration is
    impossible when this is ``>= 0``. Otherwise a migration is built with
    :func:`did_construct` (or the user migration is used), H4 is checked,
    the ``m -> inf`` limit is evaluated and the grid swept for
    ``Lambda < -1e-9``.

    Returns
    -------
    PhenomenonResult
        ``details["construction"]`` holds the :class:`DIDConstruction`
        and ``details["model"]`` the model that was swept.
    """
    m_grid = _check_grid(default_grid() if m_grid is None else m_grid, "m", True)
    T_grid = _check_grid(default_grid() if T_grid is None else T_grid, "T", True)
    path = _growth(growth)
    cls = classify(path)
    if cls.sigma >= 0:
        return PhenomenonResult("DID", "impossible", None, "sigma >= 0 bounds the growth rate below",
                                cls.all_sources, cls, cls.sigma)
    details: dict = {}
    if migration is not None:
        model = PatchModel(path, migration)
        if is_time_independent(migration):
            L = migration.segments[0].matrix
            q = spectral_abscissa(L).eigvec
            inf = float(q @ cls.rbar)
            details["infimum"] = inf
            if inf >= 0:
                return PhenomenonResult(
                    "DID", "impossible", None,
                    "time-independent migration: infimum sum_i q_i r_bar_i >= 0",
                    cls.all_sources, cls, inf, 0, details)
            witness, count = _sweep(model, m_grid, T_grid, lambda lam: lam < -WITNESS_TOL, n_jobs)
            feasible = "found-numerically" if witness else "not-found"
            return PhenomenonResult("DID", feasible, witness,
                                    "time-independent migration: infimum sum_i q_i r_bar_i < 0",
                                    cls.all_sources, cls, inf, count, details)
    else:
        cons = did_construct(path, epsilon)
        details["construction"] = cons
        details["case"] = cons.case
        details["never_minimal"] = list(cons.never_minimal)
        details["epsilon"] = cons.epsilon
        details["correction"] = cons.correction
        details["sigma_plus_correction"] = cls.sigma + cons.correction
        model = PatchModel(path, cons.migration)
    details["model"] = model
    limit = lambda_m_to_inf(model, config=config)
    details["H4"] = limit.report.verdict
    witness, count = _sweep(model, m_grid, T_grid, lambda lam: lam < -WITNESS_TOL, n_jobs)
    if limit.present and limit.value < 0:
        feasible, gate = "theory-certain", "H4 verified-sampled and m -> inf limit < 0"
    elif witness is not None:
        feasible, gate = "found-numerically", "witness on the sweep grid"
    else:
        feasible, gate = "not-found", "no sufficient condition established and no witness"
    return PhenomenonResult("DID", feasible, witness, gate, cls.all_sources, cls,
                            limit.value, count, details)

