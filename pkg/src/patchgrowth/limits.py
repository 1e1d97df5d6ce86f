"""Asymptotic limits of the growth rate and the universal bounds.

Quantities computed here, for a model with mean growth ``r_bar``:

``sigma``, ``chi``
    Period means of ``min_i r_i`` and ``max_i r_i``; ``sigma <= Lambda <= chi``.
``lambda_0T``  (m -> 0)
    ``max_i r_bar_i``.
``lambda_m0``  (T -> 0)
    ``lambda_max(R_bar + m L_bar)``.
``lambda_mInf`` (T -> inf, needs H3)
    ``integral of lambda_max(A(tau))``.
``lambda_infT`` (m -> inf, needs H4)
    ``sum_i integral of p_i(tau) r_i(tau)`` with ``p`` the kernel vector of ``L(tau)``.
Corners
    ``lambda_00 = max_i r_bar_i``, ``lambda_0inf = chi`` (needs H3 for
    small m), ``lambda_inf0 = sum_i q_i r_bar_i`` with ``q`` the kernel
    vector of ``L_bar``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_positive
from .errors import HypothesisError, NumericalError
from .matrixcore import is_irreducible, spectral_abscissa
from .pathmodel import Constant, PatchModel, PiecewiseMatrixPath, average, bind
from .quadrature import gap_minima, gauss_legendre, pairwise_crossings
from .simplexflow import CheckConfig, HypothesisReport, check_H3, check_H4

__all__ = [
    "GatedLimit",
    "LimitReport",
    "M0Profile",
    "sigma_chi",
    "lambda_m_to_0",
    "lambda_T_to_0",
    "average_spectral_abscissa",
    "lambda_T_to_inf",
    "mean_kernel_growth",
    "lambda_m_to_inf",
    "corner_limits",
    "lambda_m0_profile",
    "limit_report",
]

BOUND_TOL = 1e-9
FORCED_NOTE = "formula value, hypothesis unverified"


def _growth_path(model_or_growth) -> PiecewiseMatrixPath:
    return model_or_growth.growth if isinstance(model_or_growth, PatchModel) else model_or_growth


def _diag_fn(seg):
    return lambda t: np.diag(seg(t))


def _extreme_integrals(growth: PiecewiseMatrixPath) -> tuple[float, float]:
    lo = hi = 0.0
    for (a, b, seg), length in zip(growth, growth.lengths()):
        if isinstance(seg, Constant):
            d = np.diag(seg.matrix)
            lo += float(length) * d.min()
            hi += float(length) * d.max()
            continue
        f = _diag_fn(seg)
        cuts = [a, *pairwise_crossings(f, a, b), b]
        for s, e in zip(cuts[:-1], cuts[1:]):
            lo += float(gauss_legendre(lambda t: f(t).min(), s, e))
            hi += float(gauss_legendre(lambda t: f(t).max(), s, e))
    return lo, hi


def sigma_chi(model) -> tuple[float, float]:
    """Period means of the smallest and largest growth rate.

    Parameters
    ----------
    model : PatchModel or PiecewiseMatrixPath
        A model, or its growth path alone.

    Returns
    -------
    (sigma, chi) : tuple of float

    Raises
    ------
    CrossingLimitError
        If a smooth segment has more than 1024 crossings.

    Examples
    --------
    >>> from patchgrowth.catalog import get_entry
    >>> sigma_chi(get_entry("two-patch-worst").build())
    (-1.5, 1.5)
    """
    lo, hi = _extreme_integrals(_growth_path(model))
    return float(lo), float(hi)


def lambda_m_to_0(model: PatchModel) -> float:
    """Limit as ``m -> 0``: the largest mean growth rate."""
    return float(np.diag(average(_growth_path(model))).max())


def _mean_matrix(model: PatchModel, m: float) -> np.ndarray:
    return average(model.growth) + m * average(model.migration)


def _require_H2(model: PatchModel) -> None:
    Lbar = average(model.migration)
    tol = 0.0 if model.migration.is_piecewise_constant else 1e-12
    if not is_irreducible(Lbar, tol):
        raise HypothesisError(
            "average migration matrix reducible: growth rate may be patch-dependent", "H2"
        )


def lambda_T_to_0(model: PatchModel, m: float) -> float:
    """Limit as ``T -> 0``: spectral abscissa of ``R_bar + m L_bar``.

    Raises
    ------
    HypothesisError
        If ``m > 0`` and the mean migration matrix is reducible.
    """
    m = check_positive(m, "m", strict=False)
    if m > 0:
        _require_H2(model)
    return spectral_abscissa(_mean_matrix(model, m)).lambda_max


def _lambda_max_fn(seg):
    return lambda t: spectral_abscissa(seg(t)).lambda_max


def _gap_fn(seg):
    return lambda t: spectral_abscissa(seg(t)).gap


def _integrate_over_path(path: PiecewiseMatrixPath, const_value, smooth_value, smooth_split):
    total = 0.0
    for (a, b, seg), length in zip(path, path.lengths()):
        if isinstance(seg, Constant):
            total += float(length) * const_value(seg.matrix)
            continue
        cuts = [a, *smooth_split(seg, a, b), b]
        f = smooth_value(seg)
        for s, e in zip(cuts[:-1], cuts[1:]):
            total += float(gauss_legendre(f, s, e))
    return total


def average_spectral_abscissa(model: PatchModel, m: float) -> float:
    """``integral_0^1 lambda_max(R(tau) + m L(tau)) dtau``, with no hypothesis check.

    Smooth segments are split where the spectral gap nearly closes, which
    is where the dominant eigenvalue may switch branch.
    """
    m = check_positive(m, "m", strict=False)
    return _integrate_over_path(
        bind(model, m),
        lambda M: spectral_abscissa(M).lambda_max,
        _lambda_max_fn,
        lambda seg, a, b: gap_minima(_gap_fn(seg), a, b),
    )


def _kernel_vector(L: np.ndarray) -> np.ndarray:
    sr = spectral_abscissa(L)
    if sr.eigvec is None:
        raise NumericalError("migration matrix has no nonnegative kernel vector")
    return sr.eigvec


def mean_kernel_growth(model: PatchModel) -> float:
    """``sum_i integral_0^1 p_i(tau) r_i(tau) dtau``, with no hypothesis check.

    ``p(tau)`` is the nonnegative simplex vector in the kernel of ``L(tau)``
    (the canonical projection when the kernel is not one-dimensional).
    """
    combined = model.combined()
    total = 0.0
    edges = [float(b) for b in combined.breakpoints] + [1.0]
    ends = list(combined.breakpoints[1:]) + [1]
    for k, (g, l) in enumerate(combined.pairs):
        a, b = edges[k], edges[k + 1]
        if isinstance(g, Constant) and isinstance(l, Constant):
            length = float(ends[k] - combined.breakpoints[k])
            total += length * float(_kernel_vector(l.matrix) @ np.diag(g.matrix))
        else:
            def f(t, g=g, l=l):
                return float(_kernel_vector(l(t)) @ np.diag(g(t)))

            total += float(gauss_legendre(f, a, b))
    return total


@dataclass(frozen=True)
class GatedLimit:
    """A limit value together with the hypothesis check that licenses it.

    ``value`` is ``None`` when the hypothesis failed and ``force`` was not
    requested. ``forced`` marks a formula value whose hypothesis is not
    verified.
    """

    value: float | None
    requires: tuple
    report: HypothesisReport | None = None
    forced: bool = False

    @property
    def present(self) -> bool:
        return self.value is not None

    @property
    def note(self) -> str:
        if self.value is None:
            tags = ", ".join(
                f"{h} {self.report.verdict}" if self.report else f"{h} unchecked" for h in self.requires
            )
            return f"absent ({tags})"
        if self.forced:
            return FORCED_NOTE
        return "ok"

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "requires": list(self.requires),
            "verdict": None if self.report is None else self.report.verdict,
            "note": self.note,
        }


def _gate(value_fn, hypothesis: str, report: HypothesisReport, force: bool) -> GatedLimit:
    if report.verified:
        return GatedLimit(value_fn(), (hypothesis,), report)
    if force:
        return GatedLimit(value_fn(), (hypothesis,), report, forced=True)
    return GatedLimit(None, (hypothesis,), report)


def lambda_T_to_inf(
    model: PatchModel,
    m: float,
    *,
    report: HypothesisReport | None = None,
    force: bool = False,
    config: CheckConfig | None = None,
) -> GatedLimit:
    """Limit as ``T -> inf``: mean spectral abscissa, gated by H3.

    Parameters
    ----------
    model : PatchModel
    m : float
        Migration strength, ``> 0``.
    report : HypothesisReport, optional
        A precomputed H3 report at this ``m``; computed when omitted.
    force : bool
        Return the formula value even when H3 is not verified.
    config : CheckConfig, optional
        Sampling parameters for the H3 check.
    """
    m = check_positive(m, "m")
    report = report if report is not None else check_H3(model, m, config)
    return _gate(lambda: average_spectral_abscissa(model, m), "H3", report, force)


def lambda_m_to_inf(
    model: PatchModel,
    *,
    report: HypothesisReport | None = None,
    force: bool = False,
    config: CheckConfig | None = None,
) -> GatedLimit:
    """Limit as ``m -> inf``: kernel-weighted mean growth, gated by H4."""
    report = report if report is not None else check_H4(model, config)
    return _gate(lambda: mean_kernel_growth(model), "H4", report, force)


def lambda_inf0(model: PatchModel) -> float:
    """Corner ``m -> inf, T -> 0``: ``sum_i q_i r_bar_i`` with ``L_bar q = 0``."""
    _require_H2(model)
    q = _kernel_vector(average(model.migration))
    return float(q @ model.growth_means())


@dataclass(frozen=True)
class CornerLimits:
    lambda_00: float
    lambda_0inf: GatedLimit
    lambda_inf0: float


def corner_limits(
    model: PatchModel,
    *,
    h3_report: HypothesisReport | None = None,
    m_probe: float = 1e-2,
    force: bool = False,
    config: CheckConfig | None = None,
) -> CornerLimits:
    """The three corner limits.

    ``lambda_0inf = chi`` requires H3 for small ``m``; it is probed at
    ``m_probe`` unless an H3 report is passed in.
    """
    report = h3_report if h3_report is not None else check_H3(model, m_probe, config)
    chi = sigma_chi(model)[1]
    return CornerLimits(
        lambda_m_to_0(model),
        _gate(lambda: chi, "H3", report, force),
        lambda_inf0(model),
    )


@dataclass(frozen=True, eq=False)
class M0Profile:
    """``lambda_m0`` on a grid of ``m`` with finite-difference diagnostics.

    ``slopes`` are divided first differences between neighbours and
    ``curvatures`` divided second differences on consecutive triples.
    """

    m: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    curvatures: np.ndarray
    equal_means: bool
    decreasing: bool
    convex: bool
    constant: bool
    threshold: float = 1e-10

    def to_dict(self) -> dict:
        return {
            "m": self.m.tolist(),
            "values": self.values.tolist(),
            "slopes": self.slopes.tolist(),
            "curvatures": self.curvatures.tolist(),
            "equal_means": self.equal_means,
            "decreasing": self.decreasing,
            "convex": self.convex,
            "constant": self.constant,
        }


def lambda_m0_profile(model: PatchModel, m_grid, threshold: float = 1e-10) -> M0Profile:
    """Evaluate ``lambda_m0`` on ``m_grid`` and test monotonicity and convexity.

    With unequal mean growth rates the profile should be strictly
    decreasing and strictly convex; with equal means it is constant.
    """
    m = np.array(sorted(float(x) for x in m_grid))
    if m.size == 0 or m[0] <= 0:
        raise ValueError("m_grid must be nonempty and positive")
    vals = np.array([lambda_T_to_0(model, x) for x in m])
    slopes = np.diff(vals) / np.diff(m)
    curv = (
        2.0 * np.diff(slopes) / (m[2:] - m[:-2]) if m.size >= 3 else np.zeros(0)
    )
    rbar = model.growth_means()
    equal = bool(np.ptp(rbar) <= 1e-12)
    return M0Profile(
        m,
        vals,
        slopes,
        curv,
        equal,
        decreasing=bool(np.all(slopes < -threshold)),
        convex=bool(np.all(curv > threshold)),
        constant=bool(np.all(np.abs(vals - rbar[0]) <= threshold)) if equal else False,
        threshold=threshold,
    )


@dataclass(frozen=True, eq=False)
class LimitReport:
    """All limits of a model at one migration strength, with hypothesis flags."""

    m: float
    sigma: float
    chi: float
    lambda_0T: float
    lambda_m0: float
    lambda_mInf: GatedLimit
    lambda_infT: GatedLimit
    lambda_00: float
    lambda_0inf: GatedLimit
    lambda_inf0: float
    reports: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.sigma > self.chi + BOUND_TOL:
            raise NumericalError("sigma exceeds chi")
        for name, val in self.values().items():
            if val is not None and not (self.sigma - BOUND_TOL <= val <= self.chi + BOUND_TOL):
                raise NumericalError(f"{name} = {val} lies outside [sigma, chi]")

    def values(self) -> dict:
        """Plain values keyed by quantity name; ``None`` for absent ones."""
        return {
            "sigma": self.sigma,
            "chi": self.chi,
            "lambda_0T": self.lambda_0T,
            "lambda_m0": self.lambda_m0,
            "lambda_mInf": self.lambda_mInf.value,
            "lambda_infT": self.lambda_infT.value,
            "lambda_00": self.lambda_00,
            "lambda_0inf": self.lambda_0inf.value,
            "lambda_inf0": self.lambda_inf0,
        }

    def flags(self) -> dict:
        return {
            "lambda_mInf": self.lambda_mInf.to_dict(),
            "lambda_infT": self.lambda_infT.to_dict(),
            "lambda_0inf": self.lambda_0inf.to_dict(),
            "lambda_m0": {"requires": ["H2"], "note": "ok"},
            "lambda_inf0": {"requires": ["H2"], "note": "ok"},
        }

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "values": self.values(),
            "flags": self.flags(),
            "reports": {k: v.to_dict() for k, v in self.reports.items()},
        }


def limit_report(
    model: PatchModel,
    m: float,
    *,
    force: bool = False,
    config: CheckConfig | None = None,
    m_probe: float = 1e-2,
) -> LimitReport:
    """Compute every limit at migration strength ``m`` with hypothesis checks.

    Raises
    ------
    HypothesisError
        If the mean migration matrix is reducible.
    """
    from .monodromy import check_H2

    m = check_positive(m, "m")
    h2 = check_H2(model)
    if not h2.verified:
        raise HypothesisError(
            "average migration matrix reducible: growth rate may be patch-dependent", "H2", h2
        )
    h3 = check_H3(model, m, config)
    h4 = check_H4(model, config)
    h3_small = h3 if m == m_probe else check_H3(model, m_probe, config)
    sigma, chi = sigma_chi(model)
    corners = corner_limits(model, h3_report=h3_small, force=force)
    return LimitReport(
        m=m,
        sigma=sigma,
        chi=chi,
        lambda_0T=lambda_m_to_0(model),
        lambda_m0=lambda_T_to_0(model, m),
        lambda_mInf=lambda_T_to_inf(model, m, report=h3, force=force),
        lambda_infT=lambda_m_to_inf(model, report=h4, force=force),
        lambda_00=corners.lambda_00,
        lambda_0inf=corners.lambda_0inf,
        lambda_inf0=corners.lambda_inf0,
        reports={"H2": h2, "H3": h3, f"H3@m={m_probe:g}": h3_small, "H4": h4},
    )
