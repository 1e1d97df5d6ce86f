"""Monodromy matrix, Perron root and growth rate of a periodic patch model.

For ``x' = A(t/T) x`` the state after one period is ``X(T) x(0)``, with
``X(T)`` the ordered product of the segment propagators. The growth rate is
``Lambda = ln(mu) / T`` where ``mu`` is the Perron root of ``X(T)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from ._validation import check_positive, check_vector
from .errors import HypothesisError, ModelError, NumericalError, PeriodicityError, SpectralError
from .integrate import dopri45, rk4_fixed
from .matrixcore import PerronResult, is_irreducible, matrix_exponential, perron_root, spectral_abscissa
from .pathmodel import (
    Constant,
    ModelParameters,
    PatchModel,
    PiecewiseMatrixPath,
    average,
    bind,
)

__all__ = [
    "MonodromyResult",
    "LyapunovEstimate",
    "PeriodicOrbit",
    "fundamental_matrix",
    "propagator",
    "rk4_fundamental_matrix",
    "growth_rate",
    "check_H2",
    "trajectory_lyapunov",
    "iterate_periods",
    "periodic_simplex_orbit",
]

OVERFLOW_EXPONENT = 600.0
SMOOTH_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class MonodromyResult:
    """Monodromy data at one ``(m, T)``.

    Attributes
    ----------
    X : ndarray
        Monodromy matrix divided by ``exp(log_scale)``. ``log_scale`` is 0
        unless the overflow policy was engaged.
    mu : float
        Perron root of the monodromy matrix (``inf`` if it overflows a
        double; ``log_mu`` stays finite).
    pi : ndarray
        Perron vector on the unit simplex.
    Lambda : float
        Growth rate ``ln(mu) / T``.
    decoupled : bool
        True at ``m = 0``, where ``Lambda = max_i r_bar_i`` and ``pi`` is
        the indicator of the best patch.
    """

    X: np.ndarray
    mu: float
    pi: np.ndarray
    Lambda: float
    m: float
    T: float
    log_mu: float
    log_scale: float = 0.0
    decoupled: bool = False

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "T": self.T,
            "Lambda": self.Lambda,
            "mu": self.mu,
            "log_mu": self.log_mu,
            "pi": self.pi.tolist(),
            "decoupled": self.decoupled,
        }


def _max_abs_growth(model: PatchModel) -> float:
    vals = [np.abs(np.diag(model.growth(t))).max() for t in model.growth.sample_points()]
    return float(max(vals))


def _segment_propagator(seg, a: float, b: float, length, T: float, shift: float, rtol: float):
    n = seg.n if isinstance(seg, Constant) else seg(a).shape[0]
    eye = np.eye(n)
    if isinstance(seg, Constant):
        return matrix_exponential(seg.matrix - shift * eye, T * float(length))

    def rhs(tau, Y):
        return T * ((seg(tau) - shift * eye) @ Y)

    h0 = None
    if getattr(seg, "lipschitz", None) is not None:
        scale = T * (np.abs(seg(a)).max() + seg.lipschitz + abs(shift)) + 1e-300
        h0 = min(b - a, 0.05 / scale)
    sol = dopri45(rhs, a, b, eye, rtol=rtol, atol=1e-14, h0=h0)
    if not np.all(np.isfinite(sol.y)):
        raise NumericalError("propagator overflowed; rescale time or shift the growth rates")
    return sol.y


def _segment_shift(seg, lo: float, hi: float) -> float:
    """Growth exponent of a segment: its spectral abscissa (sampled for Smooth)."""
    if isinstance(seg, Constant):
        return spectral_abscissa(seg.matrix).lambda_max
    return float(max(spectral_abscissa(seg(t)).lambda_max for t in np.linspace(lo, hi, 5)))


def _pieces(path: PiecewiseMatrixPath, start: float, stop: float):
    """Segments clipped to ``[start, stop]`` with exact lengths when possible."""
    for (a, b, seg), length in zip(path, path.lengths()):
        lo, hi = max(a, start), min(b, stop)
        if hi <= lo:
            continue
        if lo != a or hi != b:
            length = hi - lo
        yield seg, lo, hi, length


def _product(path, T, start, stop, *, shift_per_segment, rtol):
    """Return ``(Xhat, log_scale)`` with the propagator equal to ``exp(log_scale) Xhat``."""
    X = np.eye(path.n)
    log_scale = 0.0
    for seg, lo, hi, length in _pieces(path, start, stop):
        if shift_per_segment:
            c = _segment_shift(seg, lo, hi)
        else:
            c = 0.0
        E = _segment_propagator(seg, lo, hi, length, T, c, rtol)
        X = E @ X
        log_scale += c * T * float(length)
        if shift_per_segment:
            s = np.abs(X).max()
            if s == 0.0:
                raise NumericalError("propagator underflowed to zero")
            X = X / s
            log_scale += float(np.log(s))
    if not np.all(np.isfinite(X)):
        raise NumericalError("monodromy matrix overflowed; rescale time or shift the growth rates")
    return X, log_scale


def propagator(path: PiecewiseMatrixPath, T: float, start: float = 0.0, stop: float = 1.0,
               *, rtol: float = SMOOTH_RTOL) -> np.ndarray:
    """Solution operator of ``dY/dtau = T A(tau) Y`` from ``start`` to ``stop``.

    ``0 <= start <= stop <= 1``. Constant segments use the matrix
    exponential; Smooth segments use adaptive Dormand-Prince steps that
    never cross a breakpoint.
    """
    T = check_positive(T, "T")
    if not 0.0 <= start <= stop <= 1.0:
        raise ModelError("propagator requires 0 <= start <= stop <= 1")
    X, _ = _product(path, T, start, stop, shift_per_segment=False, rtol=rtol)
    return X


def fundamental_matrix(path: PiecewiseMatrixPath, T: float, *, rtol: float = SMOOTH_RTOL) -> np.ndarray:
    """Monodromy matrix ``X(T)`` of the bound path over one period.

    Parameters
    ----------
    path : PiecewiseMatrixPath
        Bound path ``A(tau)`` (see :func:`patchgrowth.pathmodel.bind`).
    T : float
        Period.

    Raises
    ------
    NumericalError
        On overflow or integrator failure.

    Examples
    --------
    >>> P = PiecewiseMatrixPath([0], [[[0.5]]])
    >>> float(fundamental_matrix(P, 2.0)[0, 0]) == float(np.exp(1.0))
    True
    """
    return propagator(path, T, 0.0, 1.0, rtol=rtol)


def rk4_fundamental_matrix(path: PiecewiseMatrixPath, T: float, step: float = 1e-5) -> np.ndarray:
    """Reference monodromy matrix by fixed-step classical RK4.

    ``step`` is measured in ``tau`` (so the time step is ``T * step``).
    For a Constant segment one RK4 step is the linear map
    ``I + hA + (hA)^2/2 + (hA)^3/6 + (hA)^4/24`` which is applied step by
    step; Smooth segments are stepped through the general RK4 formula.
    """
    T = check_positive(T, "T")
    n = path.n
    X = np.eye(n)
    for seg, lo, hi, length in _pieces(path, 0.0, 1.0):
        span = float(length)
        if isinstance(seg, Constant):
            steps = max(1, int(np.ceil(span / step - 1e-9)))
            hA = (T * span / steps) * seg.matrix
            hA2 = hA @ hA
            P = np.eye(n) + hA + hA2 / 2 + hA2 @ hA / 6 + hA2 @ hA2 / 24
            Y = X
            for _ in range(steps):
                Y = P @ Y
            X = Y
        else:
            X = rk4_fixed(lambda tau, Y, seg=seg: T * (seg(tau) @ Y), lo, hi, X, step)
    return X


def check_H2(model: PatchModel):
    """Irreducibility of the mean migration matrix.

    Returns
    -------
    HypothesisReport
    """
    from .simplexflow import HypothesisReport, Witness

    Lbar = average(model.migration)
    tol = 0.0 if model.migration.is_piecewise_constant else 1e-12
    sampling = {"method": "reachability on the support of the mean migration", "threshold": tol}
    if is_irreducible(Lbar, tol):
        return HypothesisReport("H2", "verified-sampled", [], sampling)
    adj = Lbar > tol
    np.fill_diagonal(adj, False)
    witness = Witness(
        tau=None,
        reason="average migration matrix reducible",
        data={"support": adj.astype(int).tolist()},
    )
    return HypothesisReport("H2", "violated", [witness], sampling)


def _require_H2(model: PatchModel):
    report = check_H2(model)
    if report.verdict != "verified-sampled":
        raise HypothesisError(
            "average migration matrix reducible: growth rate may be patch-dependent",
            "H2",
            report,
        )


def _underflow_fallback(X: np.ndarray) -> PerronResult:
    """Spectral radius of a monodromy matrix whose small entries underflowed.

    The exact matrix is irreducible but some entries are below the double
    range; the spectral radius is continuous in the entries, so the
    dominant eigenpair of the stored nonnegative matrix is used.
    """
    if not np.all(np.isfinite(X)) or X.min() < 0 or not np.any(X > 0):
        raise NumericalError("monodromy matrix is not a finite nonnegative matrix")
    res = spectral_abscissa(X)
    if not res.lambda_max > 0 or res.eigvec is None:
        raise NumericalError("monodromy matrix underflowed; reduce T or m")
    return PerronResult(float(res.lambda_max), res.eigvec)


def growth_rate(model: PatchModel, params: ModelParameters, *, rtol: float = SMOOTH_RTOL) -> MonodromyResult:
    """Growth rate ``Lambda(m, T)`` from the Perron root of the monodromy matrix.

    Parameters
    ----------
    model : PatchModel
    params : ModelParameters
        ``m = 0`` is accepted and handled as the decoupled system.

    Returns
    -------
    MonodromyResult

    Raises
    ------
    HypothesisError
        If ``m > 0`` and the mean migration matrix is reducible.
    NumericalError
        If the propagator overflows or underflows to a matrix without a
        positive dominant eigenvalue.

    Notes
    -----
    When ``T * max|r_i| > 600`` the product is formed with every segment
    shifted by its own spectral abscissa and renormalized, and the
    accumulated log-scale is added back. If entries of the monodromy
    matrix underflow so that it is no longer numerically irreducible, the
    dominant eigenpair of the stored nonnegative matrix is used.
    """
    T, m = params.T, params.m
    rbar = model.growth_means()
    big = T * _max_abs_growth(model) > OVERFLOW_EXPONENT
    if m == 0.0:
        path = bind(model, params)
        X, log_scale = _product(path, T, 0.0, 1.0, shift_per_segment=big, rtol=rtol)
        i = int(np.argmax(rbar))
        Lam = float(rbar[i])
        pi = np.zeros(model.n)
        pi[i] = 1.0
        with np.errstate(over="ignore"):
            mu = float(np.exp(Lam * T))
        return MonodromyResult(X, mu, pi, Lam, m, T, Lam * T, log_scale, decoupled=True)

    _require_H2(model)
    path = bind(model, params)
    X, log_scale = _product(path, T, 0.0, 1.0, shift_per_segment=big, rtol=rtol)
    try:
        pr = perron_root(X)
    except SpectralError:
        pr = _underflow_fallback(X)
    log_mu = float(np.log(pr.mu)) + log_scale
    with np.errstate(over="ignore"):
        mu = float(pr.mu * np.exp(log_scale)) if log_scale else pr.mu
    return MonodromyResult(X, mu, pr.pi, log_mu / T, m, T, log_mu, log_scale)


@dataclass(frozen=True, eq=False)
class LyapunovEstimate:
    """Trajectory-based growth estimates.

    Attributes
    ----------
    per_patch : ndarray
        ``(ln x_i(t1) - ln x_i(t0)) / (t1 - t0)`` per patch.
    shared : float
        Same quantity for the total population.
    horizon, burn_in : int
        Number of periods integrated and discarded.
    """

    per_patch: np.ndarray
    shared: float
    horizon: int
    burn_in: int
    T: float


def _period_maps(model: PatchModel, params: ModelParameters):
    """Per-segment propagators and their log-scales."""
    path = bind(model, params)
    big = params.T * _max_abs_growth(model) > OVERFLOW_EXPONENT
    maps = []
    for seg, lo, hi, length in _pieces(path, 0.0, 1.0):
        c = 0.0
        if big:
            c = _segment_shift(seg, lo, hi)
        E = _segment_propagator(seg, lo, hi, length, params.T, c, SMOOTH_RTOL)
        maps.append((E, c * params.T * float(length)))
    return maps, big


def iterate_periods(model: PatchModel, params: ModelParameters, x0, periods: int) -> Iterator[tuple]:
    """Yield ``(k, theta_k, log_norm_k)`` at the end of every period ``k = 0..periods``.

    ``theta`` is the population distribution on the simplex and
    ``log_norm`` the logarithm of the total population. The state is
    renormalized once per period (every segment under the overflow policy).
    """
    x = check_vector(x0, model.n, "x0")
    if np.any(x < 0) or not np.any(x > 0):
        raise ModelError("x0 must be nonnegative with at least one positive entry")
    maps, per_segment = _period_maps(model, params)
    s = x.sum()
    x = x / s
    log_norm = float(np.log(s))
    yield 0, x.copy(), log_norm
    for k in range(1, periods + 1):
        for E, shift in maps:
            x = E @ x
            log_norm += shift
            if per_segment:
                s = x.sum()
                x = x / s
                log_norm += float(np.log(s))
        s = x.sum()
        if not np.isfinite(s) or s <= 0.0:
            raise NumericalError("trajectory left the representable range")
        x = x / s
        log_norm += float(np.log(s))
        yield k, x.copy(), log_norm


def trajectory_lyapunov(
    model: PatchModel,
    params: ModelParameters,
    x0,
    horizon: int = 500,
    burn_in: int | None = None,
) -> LyapunovEstimate:
    """Estimate the growth rate by iterating the population over many periods.

    Parameters
    ----------
    model, params
        Model and ``(m, T)``.
    x0 : array_like
        Nonnegative, nonzero initial population.
    horizon : int, default 500
        Number of periods.
    burn_in : int, optional
        Periods discarded before measuring; defaults to ``horizon // 2``.
        Measuring from ``t = 0`` carries an ``O(1/t)`` bias from the initial
        distribution.

    Returns
    -------
    LyapunovEstimate
    """
    if int(horizon) != horizon or horizon < 1:
        raise ModelError("horizon must be a positive integer")
    horizon = int(horizon)
    burn_in = horizon // 2 if burn_in is None else int(burn_in)
    if not 0 <= burn_in < horizon:
        raise ModelError("burn_in must satisfy 0 <= burn_in < horizon")
    start = end = None
    for k, theta, log_norm in iterate_periods(model, params, x0, horizon):
        if k == burn_in:
            start = (theta, log_norm)
        end = (theta, log_norm)
    span = (horizon - burn_in) * params.T
    with np.errstate(divide="ignore", invalid="ignore"):
        per = (np.log(end[0]) + end[1] - np.log(start[0]) - start[1]) / span
    shared = (end[1] - start[1]) / span
    return LyapunovEstimate(per, float(shared), horizon, burn_in, params.T)


@dataclass(frozen=True, eq=False)
class PeriodicOrbit:
    """Periodic distribution ``theta*(t)`` over one period.

    Attributes
    ----------
    t : ndarray
        Sample times in ``[0, T]``.
    theta : ndarray
        Samples, one row per time.
    integral : float
        ``(1/T) * integral_0^T <A(t/T) theta*(t), 1> dt``.
    drift : float
        ``max |theta*(T) - theta*(0)|``.
    """

    t: np.ndarray
    theta: np.ndarray
    integral: float
    drift: float
    pi: np.ndarray = field(repr=False)


def periodic_simplex_orbit(
    model: PatchModel,
    params: ModelParameters,
    result: MonodromyResult | None = None,
    *,
    rtol: float = 1e-12,
    drift_tol: float = 1e-7,
) -> PeriodicOrbit:
    """Integrate the distribution dynamics from the Perron vector over one period.

    The distribution obeys ``theta' = A theta - <A theta, 1> theta``; the
    mean of ``<A theta, 1>`` along the periodic orbit equals the growth
    rate.

    Raises
    ------
    PeriodicityError
        If the orbit fails to close within ``drift_tol``.
    """
    if result is None:
        result = growth_rate(model, params)
    path = bind(model, params)
    T = params.T
    n = model.n
    y = np.concatenate([result.pi, [0.0]])
    ts, thetas = [0.0], [result.pi.copy()]
    for seg, lo, hi, _ in _pieces(path, 0.0, 1.0):
        def rhs(tau, z, seg=seg):
            th = z[:n]
            v = seg(tau) @ th
            g = v.sum()
            return T * np.concatenate([v - g * th, [g]])

        sol = dopri45(rhs, lo, hi, y, rtol=rtol, atol=1e-15, record=True)
        y = sol.y
        ts.extend(T * t for t in sol.ts[1:])
        thetas.extend(z[:n] for z in sol.ys[1:])
    drift = float(np.abs(y[:n] - result.pi).max())
    if drift > drift_tol:
        raise PeriodicityError(
            f"periodicity violated: integrator tolerance insufficient (drift {drift:.3g})"
        )
    return PeriodicOrbit(np.array(ts), np.array(thetas), float(y[n] / T), drift, result.pi)
