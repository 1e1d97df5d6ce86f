"""Explicit Runge-Kutta integrators.

``dopri45`` is an adaptive Dormand-Prince 5(4) pair that accepts array
states of any shape (vectors or matrices) and an optional projection hook
applied after each accepted step. ``rk4_fixed`` is a classical fixed-step
RK4 used as an independent reference.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import IntegratorError

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_E = _B5 - _B4


@dataclass
class Solution:
    """Endpoint of an integration plus optional accepted-step history."""

    t: float
    y: np.ndarray
    ts: list | None = None
    ys: list | None = None
    steps: int = 0
    rejected: int = 0


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(x))))


def dopri45(
    f: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    t1: float,
    y0,
    *,
    rtol: float = 1e-10,
    atol: float = 1e-13,
    h0: float | None = None,
    max_steps: int = 1_000_000,
    project: Callable[[np.ndarray], np.ndarray] | None = None,
    record: bool = False,
) -> Solution:
    """Integrate ``y' = f(t, y)`` from ``t0`` to ``t1`` with adaptive steps.

    Parameters
    ----------
    f : callable
        Right-hand side returning an array shaped like ``y``.
    t0, t1 : float
        Integration interval, ``t1 > t0``. Steps never pass ``t1``.
    y0 : array_like
        Initial state.
    rtol, atol : float
        Mixed error tolerance per component.
    h0 : float, optional
        Initial step. Chosen from the derivative scale when omitted.
    project : callable, optional
        Applied to every accepted state; may raise to abort.
    record : bool
        Keep all accepted ``(t, y)`` pairs.

    Returns
    -------
    Solution
    """
    y = np.array(y0, dtype=float)
    t = float(t0)
    t1 = float(t1)
    span = t1 - t
    if span < 0:
        raise IntegratorError("dopri45 requires t1 >= t0")
    ts = [t] if record else None
    ys = [y.copy()] if record else None
    if span == 0:
        return Solution(t, y, ts, ys)
    k1 = f(t, y)
    if h0 is None:
        d0 = _rms(y / (atol + rtol * np.abs(y)))
        d1 = _rms(k1 / (atol + rtol * np.abs(y)))
        h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6 * span
        h = min(h, span)
    else:
        h = min(float(h0), span)
    hmin = 1e-14 * max(abs(t0), abs(t1), span)
    steps = rejected = 0
    k = [None] * 7
    while t < t1:
        if steps + rejected >= max_steps:
            raise IntegratorError(f"step budget of {max_steps} exhausted at t={t:.6g}")
        last = t + h >= t1 - 1e-15 * span
        if last:
            h = t1 - t
        k[0] = k1
        for s in range(1, 7):
            acc = _A[s][0] * k[0]
            for j in range(1, s):
                if _A[s][j] != 0.0:
                    acc = acc + _A[s][j] * k[j]
            k[s] = f(t + _C[s] * h, y + h * acc)
        y_new = y + h * sum(_B5[s] * k[s] for s in range(7) if _B5[s] != 0.0)
        err_vec = h * sum(_E[s] * k[s] for s in range(7) if _E[s] != 0.0)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = _rms(err_vec / scale)
        if not np.isfinite(err):
            raise IntegratorError(f"non-finite state at t={t:.6g}")
        if err <= 1.0:
            t = t1 if last else t + h
            y = y_new
            k1 = k[6]
            if project is not None:
                y = project(y)
                k1 = f(t, y)
            steps += 1
            if record:
                ts.append(t)
                ys.append(y.copy())
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        else:
            rejected += 1
            fac = max(0.2, 0.9 * err ** -0.2)
        h = h * fac
        if h < hmin and t < t1:
            raise IntegratorError(f"step size underflow at t={t:.6g}; tolerance unattainable")
    return Solution(t, y, ts, ys, steps, rejected)


def rk4_fixed(
    f: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    t1: float,
    y0,
    h: float,
) -> np.ndarray:
    """Classical RK4 with ``ceil((t1 - t0) / h)`` equal steps."""
    y = np.array(y0, dtype=float)
    span = float(t1) - float(t0)
    if span <= 0:
        return y
    steps = max(1, int(np.ceil(span / h - 1e-9)))
    dt = span / steps
    t = float(t0)
    for i in range(steps):
        s1 = f(t, y)
        s2 = f(t + 0.5 * dt, y + 0.5 * dt * s1)
        s3 = f(t + 0.5 * dt, y + 0.5 * dt * s2)
        s4 = f(t + dt, y + dt * s3)
        y = y + (dt / 6.0) * (s1 + 2.0 * s2 + 2.0 * s3 + s4)
        t = float(t0) + (i + 1) * dt
    return y
