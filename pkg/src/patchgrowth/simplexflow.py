"""Frozen-time dynamics on the simplex and sampled checks of basin hypotheses.

With ``tau`` frozen, the distribution ``theta`` of the population follows

    theta' = A theta - <A theta, 1> theta

whose equilibria are the nonnegative eigenvectors of ``A``. H3 asks that
the dominant one, ``v(tau)``, attract uniformly and that every left-limit
equilibrium ``v(tau_k - 0)`` lie in the basin of ``v(tau_k)``. H4 asks the
same of the migration flow ``eta' = L(tau) eta`` and its kernel vector
``p(tau)``.

The checks here are sampled sufficient tests. A ``violated`` verdict always
comes with a constructive witness (a point whose trajectory demonstrably
ends elsewhere, or a failed spectral condition).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from ._validation import check_positive, check_simplex, check_square
from .errors import IntegratorError, ModelError, PatchGrowthError
from .integrate import dopri45
from .matrixcore import nonnegative_eigenvectors, spectral_abscissa
from .pathmodel import Constant, PatchModel, PiecewiseMatrixPath, bind

__all__ = [
    "Witness",
    "HypothesisReport",
    "FlowResult",
    "CheckConfig",
    "simplex_field",
    "tangent_jacobian",
    "frozen_flow",
    "check_H3",
    "check_H4",
    "check_matrix",
]

VERIFIED = "verified-sampled"
VIOLATED = "violated"
INCONCLUSIVE = "inconclusive"
STABILITY_TOL = 1e-9


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


@dataclass(frozen=True)
class Witness:
    """Evidence attached to a hypothesis report.

    ``kind`` is ``"violated"`` for constructive counterexamples and
    ``"inconclusive"`` when the test could not decide.
    """

    tau: float | None
    reason: str
    data: dict = field(default_factory=dict)
    kind: str = VIOLATED

    def to_dict(self) -> dict:
        return {"tau": self.tau, "kind": self.kind, "reason": self.reason, "data": _jsonable(self.data)}


@dataclass
class HypothesisReport:
    """Outcome of a hypothesis check.

    Attributes
    ----------
    hypothesis : str
        ``"H2"``, ``"H3"`` or ``"H4"``.
    verdict : str
        ``"verified-sampled"``, ``"violated"`` or ``"inconclusive"``.
    witnesses : list of Witness
    sampling : dict
        Parameters and counts used, for reproducibility.
    """

    hypothesis: str
    verdict: str
    witnesses: list
    sampling: dict

    def __post_init__(self):
        if self.verdict not in (VERIFIED, VIOLATED, INCONCLUSIVE):
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if self.verdict == VIOLATED and not any(w.kind == VIOLATED for w in self.witnesses):
            raise ValueError("violated verdict requires a witness")

    @property
    def verified(self) -> bool:
        return self.verdict == VERIFIED

    def to_dict(self) -> dict:
        return {
            "hypothesis": self.hypothesis,
            "verdict": self.verdict,
            "witnesses": [w.to_dict() for w in self.witnesses],
            "sampling": _jsonable(self.sampling),
        }


def simplex_field(A, theta) -> np.ndarray:
    """Velocity ``A theta - <A theta, 1> theta`` of the frozen simplex flow."""
    M = np.asarray(A, dtype=float)
    th = np.asarray(theta, dtype=float)
    v = M @ th
    return v - v.sum() * th


def _tangent_basis(n: int) -> np.ndarray:
    Q, _ = np.linalg.qr(np.column_stack([np.ones(n), np.eye(n)[:, : n - 1]]))
    return Q[:, 1:]


def tangent_jacobian(A, theta) -> np.ndarray:
    """Jacobian of :func:`simplex_field` restricted to the simplex tangent space.

    Expressed in an orthonormal basis of ``{x : sum(x) = 0}``; its size is
    ``(n-1) x (n-1)``. At an eigenvector equilibrium with eigenvalue
    ``lambda_j`` its eigenvalues are ``lambda_i - lambda_j`` for ``i != j``.
    """
    M = check_square(A)
    th = np.asarray(theta, dtype=float)
    n = M.shape[0]
    D = M - (M @ th).sum() * np.eye(n) - np.outer(th, M.sum(axis=0))
    Q = _tangent_basis(n)
    return Q.T @ D @ Q


@dataclass(frozen=True, eq=False)
class FlowResult:
    """Frozen-flow trajectory: endpoint plus the accepted steps when recorded."""

    final: np.ndarray
    s: np.ndarray | None = None
    theta: np.ndarray | None = None


def _project(y: np.ndarray) -> np.ndarray:
    lo = y.min()
    if lo < -1e-9:
        raise IntegratorError(f"simplex flow left the simplex (component {lo:.3g})")
    if lo < 0.0:
        y = np.clip(y, 0.0, None)
    return y / y.sum()


def frozen_flow(A, theta0, horizon: float, *, rtol: float = 1e-9, atol: float = 1e-12,
                record: bool = False) -> FlowResult:
    """Integrate the frozen simplex flow of ``A`` for ``horizon`` time units.

    Tiny negative components are clipped and the state renormalized after
    every accepted step.

    Raises
    ------
    IntegratorError
        If a component drops below ``-1e-9`` or the step size collapses.

    Examples
    --------
    >>> A = [[0.0, 1.0, 0.0], [1.0, -2.0, 0.0], [0.0, 0.0, -1.0]]
    >>> out = frozen_flow(A, [1 / 3, 1 / 3, 1 / 3], 40.0)
    >>> bool(out.final[2] < 1e-8)
    True
    """
    M = check_square(A)
    th = check_simplex(theta0, M.shape[0])
    S = check_positive(horizon, "horizon")
    sol = dopri45(lambda s, y: simplex_field(M, y), 0.0, S, th, rtol=rtol, atol=atol,
                  project=_project, record=record)
    if record:
        return FlowResult(sol.y, np.array(sol.ts), np.array(sol.ys))
    return FlowResult(sol.y)


@dataclass(frozen=True)
class CheckConfig:
    """Sampling parameters for the H3/H4 checks.

    Attributes
    ----------
    samples : int
        Chebyshev-Lobatto samples per non-constant segment (constant
        segments use one).
    perturbations : int
        Random perturbations of each sampled equilibrium.
    radius : float
        Perturbation size ``delta``: starts are ``v + delta (u - v)`` with
        ``u`` uniform on the simplex.
    seed : int
        Base seed; every sample uses the stream ``[seed, segment, sample]``.
    horizon_scale, horizon_min, horizon_max : float
        Flow horizon ``clip(horizon_scale / gap, horizon_min, horizon_max)``.
    tol : float
        Convergence distance (max norm).
    n_jobs : int
        Worker threads for independent samples.
    """

    samples: int = 33
    perturbations: int = 16
    radius: float = 1e-3
    seed: int = 0
    horizon_scale: float = 50.0
    horizon_min: float = 10.0
    horizon_max: float = 1e4
    tol: float = 1e-6
    n_jobs: int = 1

    def __post_init__(self):
        if self.samples < 2 or self.perturbations < 0:
            raise ModelError("samples must be >= 2 and perturbations >= 0")
        if not 0 < self.radius < 1:
            raise ModelError("radius must lie in (0, 1)")
        if not 0 < self.horizon_min <= self.horizon_max:
            raise ModelError("need 0 < horizon_min <= horizon_max")

    def horizon(self, gap: float) -> float:
        if not gap > 0 or not math.isfinite(gap):
            return self.horizon_max if not gap > 0 else self.horizon_min
        return float(min(max(self.horizon_scale / gap, self.horizon_min), self.horizon_max))

    def as_dict(self) -> dict:
        return {
            "samples_per_segment": self.samples,
            "perturbations": self.perturbations,
            "radius": self.radius,
            "seed": self.seed,
            "horizon_scale": self.horizon_scale,
            "horizon_min": self.horizon_min,
            "horizon_max": self.horizon_max,
            "convergence_tol": self.tol,
            "stability_tol": STABILITY_TOL,
        }


def _lobatto(a: float, b: float, K: int) -> np.ndarray:
    j = np.arange(K)
    return 0.5 * (a + b) - 0.5 * (b - a) * np.cos(np.pi * j / (K - 1))


def _classify_endpoint(M: np.ndarray, v: np.ndarray, end: np.ndarray, tol: float):
    """Decide where a non-converged trajectory ended.

    Returns ``(kind, info)`` with ``kind`` in {violated, inconclusive}.
    """
    for lam, w in nonnegative_eigenvectors(M):
        if np.abs(end - w).max() <= tol and np.abs(w - v).max() > tol:
            return VIOLATED, {"captured_by": w, "captured_eigenvalue": lam}
    resid = float(np.abs(simplex_field(M, end)).max())
    if resid <= 1e-8 * (1.0 + np.abs(M).max()):
        return VIOLATED, {"captured_by": end, "captured_eigenvalue": float((M @ end).sum())}
    return INCONCLUSIVE, {"residual": resid}


def _settle(M: np.ndarray, v: np.ndarray, start: np.ndarray, S: float, cfg: CheckConfig):
    """Flow from ``start`` and classify the endpoint.

    Returns ``(endpoint, horizon_used, kind, info)`` with ``kind`` None on
    convergence to ``v``. An undecided endpoint is flowed on up to
    ``horizon_max``: approach to a saddle runs on time scales that the
    dominant gap does not bound.
    """
    end = frozen_flow(M, start, S).final
    used = S
    while True:
        if np.abs(end - v).max() <= cfg.tol:
            return end, used, None, {}
        kind, info = _classify_endpoint(M, v, end, cfg.tol)
        if kind == VIOLATED or used >= cfg.horizon_max:
            return end, used, kind, info
        end = frozen_flow(M, end, cfg.horizon_max - used).final
        used = cfg.horizon_max


def _equilibrium(M: np.ndarray, kernel: bool):
    """Spectral data plus a list of failed spectral conditions."""
    sr = spectral_abscissa(M)
    problems = []
    scale = 1.0 + np.abs(M).max()
    if kernel and abs(sr.lambda_max) > 1e-9 * scale:
        problems.append(("dominant eigenvalue of L is not 0", {"lambda_max": sr.lambda_max}))
    if not sr.simple:
        reason = "0 is not a simple eigenvalue of L" if kernel else "dominant eigenvalue is not simple"
        problems.append((reason, {"lambda_max": sr.lambda_max, "gap": sr.gap,
                                  "eigenvalues": sr.eigenvalues.real}))
    elif sr.eigvec is None:
        problems.append(("no nonnegative dominant eigenvector", {"lambda_max": sr.lambda_max}))
    return sr, problems


def _sample_task(M, tau, key, cfg: CheckConfig, kernel: bool):
    witnesses = []
    flows = 0
    sr, problems = _equilibrium(M, kernel)
    for reason, data in problems:
        witnesses.append(Witness(tau, reason, data))
    if problems:
        return witnesses, flows
    v = sr.eigvec
    n = M.shape[0]
    if n == 1:
        return witnesses, flows
    jac = np.linalg.eigvals(tangent_jacobian(M, v))
    if jac.real.max() >= -STABILITY_TOL:
        witnesses.append(Witness(tau, "equilibrium not locally asymptotically stable",
                                 {"equilibrium": v, "jacobian_eigenvalues": jac.real}))
        return witnesses, flows
    rng = np.random.default_rng([cfg.seed, *key])
    S = cfg.horizon(sr.gap)
    for j in range(cfg.perturbations):
        u = rng.dirichlet(np.ones(n))
        start = v + cfg.radius * (u - v)
        flows += 1
        try:
            end, used, kind, info = _settle(M, v, start, S, cfg)
        except IntegratorError as exc:
            witnesses.append(Witness(tau, f"integrator failure: {exc}", {"start": start},
                                     kind=INCONCLUSIVE))
            continue
        if kind is None:
            continue
        reason = ("perturbed equilibrium converges elsewhere" if kind == VIOLATED
                  else "perturbation did not converge within horizon")
        witnesses.append(Witness(tau, reason, {"equilibrium": v, "start": start, "endpoint": end,
                                               "horizon": used, **info}, kind=kind))
    return witnesses, flows


def _handoff_task(path: PiecewiseMatrixPath, k: int, cfg: CheckConfig, kernel: bool):
    tau = float(path.breakpoints[k])
    M_left = path.left_limit(tau)
    M_right = path(tau)
    sl, pl = _equilibrium(M_left, kernel)
    sr, pr = _equilibrium(M_right, kernel)
    if pl or pr:
        # spectral failures are reported by the sampling step
        return [], 0
    S = cfg.horizon(sr.gap)
    try:
        end, used, kind, info = _settle(M_right, sr.eigvec, sl.eigvec, S, cfg)
    except IntegratorError as exc:
        return [Witness(tau, f"integrator failure in handoff: {exc}", {}, kind=INCONCLUSIVE)], 1
    if kind is None:
        return [], 1
    reason = ("left-limit equilibrium lies outside the basin of the new equilibrium"
              if kind == VIOLATED else "handoff trajectory did not converge within horizon")
    data = {"start": sl.eigvec, "target": sr.eigvec, "endpoint": end, "horizon": used, **info}
    return [Witness(tau, reason, data, kind=kind)], 1


def _run_protocol(path: PiecewiseMatrixPath, hypothesis: str, cfg: CheckConfig, kernel: bool,
                  extra: dict) -> HypothesisReport:
    tasks = []
    for k, (a, b, seg) in enumerate(path):
        if isinstance(seg, Constant):
            tasks.append(("sample", (seg.matrix, a, (k, 0))))
        else:
            for i, tau in enumerate(_lobatto(a, b, cfg.samples)):
                tasks.append(("sample", (seg(float(tau)), float(tau), (k, i))))
    for k in range(len(path)):
        tasks.append(("handoff", k))

    def run(task):
        kind, arg = task
        try:
            if kind == "sample":
                M, tau, key = arg
                return _sample_task(M, tau, key, cfg, kernel)
            return _handoff_task(path, arg, cfg, kernel)
        except PatchGrowthError as exc:
            tau = arg[1] if kind == "sample" else float(path.breakpoints[arg])
            return [Witness(tau, f"numerical failure: {exc}", {}, kind=INCONCLUSIVE)], 0

    if cfg.n_jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.n_jobs) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]

    witnesses = []
    flows = 0
    for w, f in results:
        witnesses.extend(w)
        flows += f
    witnesses.sort(key=lambda w: (w.tau if w.tau is not None else -1.0))
    if any(w.kind == VIOLATED for w in witnesses):
        verdict = VIOLATED
    elif witnesses:
        verdict = INCONCLUSIVE
    else:
        verdict = VERIFIED
    sampling = cfg.as_dict()
    sampling.update(extra)
    sampling["tau_samples"] = sum(1 for t in tasks if t[0] == "sample")
    sampling["breakpoints_checked"] = len(path)
    sampling["flows"] = flows
    return HypothesisReport(hypothesis, verdict, witnesses, sampling)


def _config(config: CheckConfig | None, overrides: dict) -> CheckConfig:
    cfg = config or CheckConfig()
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg


def check_H3(model: PatchModel, m: float, config: CheckConfig | None = None, **overrides) -> HypothesisReport:
    """Sampled check of the uniform-basin hypothesis for ``A(tau) = R + m L``.

    Steps, per segment of the combined path:

    (a) at every sample ``tau`` the dominant eigenvalue of ``A(tau)`` is
        simple with a nonnegative eigenvector ``v(tau)``;
    (b) the simplex Jacobian at ``v(tau)`` is stable;
    (c) at every breakpoint the flow of ``A(tau_k)`` started from
        ``v(tau_k - 0)`` reaches ``v(tau_k)``;
    (d) random perturbations of ``v(tau)`` flow back to it.

    Parameters
    ----------
    model : PatchModel
    m : float
        Migration strength, ``> 0``.
    config : CheckConfig, optional
    **overrides
        Fields of :class:`CheckConfig`.

    Returns
    -------
    HypothesisReport
    """
    m = check_positive(m, "m")
    cfg = _config(config, overrides)
    return _run_protocol(bind(model, m), "H3", cfg, kernel=False, extra={"m": m})


def check_H4(model: PatchModel, config: CheckConfig | None = None, **overrides) -> HypothesisReport:
    """Sampled check of the stability hypothesis for the migration flow ``eta' = L(tau) eta``.

    Same protocol as :func:`check_H3` applied to ``L(tau)``, whose
    equilibrium is the kernel vector ``p(tau)``; additionally fails when 0
    is not a simple eigenvalue.
    """
    cfg = _config(config, overrides)
    return _run_protocol(model.migration, "H4", cfg, kernel=True, extra={})


def check_matrix(A, hypothesis: str = "H3", config: CheckConfig | None = None, **overrides) -> HypothesisReport:
    """Run the protocol on a single time-independent matrix."""
    M = check_square(A)
    cfg = _config(config, overrides)
    path = PiecewiseMatrixPath([0], [M])
    return _run_protocol(path, hypothesis, cfg, kernel=(hypothesis == "H4"), extra={})


def report_summary(report: HypothesisReport) -> dict[str, Any]:
    """Counts of witnesses by kind, for compact display."""
    out = {VIOLATED: 0, INCONCLUSIVE: 0}
    for w in report.witnesses:
        out[w.kind] += 1
    return out
