"""Adaptive Dormand-Prince 5(4) integrator for matrix-valued ODEs.

Works on complex arrays of any shape.  Step control is the PI controller of
Hairer, Norsett & Wanner (Solving ODEs I, II.4) with FSAL reuse of the last
stage.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import StiffnessError

C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
# fifth-order weights minus embedded fourth-order weights
E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

SAFETY = 0.9
BETA = 0.04
ALPHA = 0.2 - 0.75 * BETA
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0


@dataclass
class StepStats:
    nfev: int = 0
    accepted: int = 0
    rejected: int = 0
    last_step: float = 0.0


@dataclass
class Solution:
    y: np.ndarray
    t: float
    samples: list = field(default_factory=list)  # (t, y) pairs at requested times
    stats: StepStats = field(default_factory=StepStats)


def _err_norm(err, y, y_new, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    r = np.abs(err) / scale
    return float(np.sqrt(np.mean(r * r)))


def _initial_step(f, t0, y0, f0, rtol, atol, max_step):
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((np.abs(y0) / scale) ** 2))
    d1 = np.sqrt(np.mean((np.abs(f0) / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, max_step)
    y1 = y0 + h0 * f0
    d2 = np.sqrt(np.mean((np.abs(f(t0 + h0, y1) - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, max_step)


def dopri5(f, y0, t0, t1, rtol=1e-8, atol=1e-10, max_step=np.inf, sample_times=(),
           on_accept=None, first_step=None):
    """Integrate ``dy/dt = f(t, y)`` from ``t0`` to ``t1``.

    ``sample_times`` (ascending, inside [t0, t1]) are hit exactly and a copy
    of the state is stored for each.  ``on_accept(t, y, n_accepted)`` runs
    after every accepted step; if it returns an array that array replaces
    the state (used for integrity guards) and the FSAL stage is recomputed.
    """
    y = np.array(y0, dtype=np.complex128, copy=True)
    t = float(t0)
    stats = StepStats()
    samples = []
    stops = [s for s in sorted(sample_times) if t0 <= s <= t1]
    while stops and stops[0] <= t:
        samples.append((stops.pop(0), y.copy()))
    if t1 <= t0:
        return Solution(y, t, samples, stats)

    k = [None] * 7
    k[0] = f(t, y)
    stats.nfev += 1
    h = first_step if first_step else _initial_step(f, t, y, k[0], rtol, atol, max_step)
    stats.nfev += 0 if first_step else 1
    h = min(h, max_step)
    err_old = 1e-4
    while t < t1:
        target = stops[0] if stops else t1
        h_try = min(h, target - t)
        clipped = h_try < h
        if h_try <= 16 * np.finfo(float).eps * max(1.0, abs(t)):
            if target - t <= 16 * np.finfo(float).eps * max(1.0, abs(t)):
                t = target  # absorb roundoff gap
                if stops and t >= stops[0]:
                    samples.append((stops.pop(0), y.copy()))
                continue
            raise StiffnessError(f"step size underflow at t={t:.6g} (h={h_try:.3e})")
        for s in range(1, 7):
            acc = y.copy()
            for j, a in enumerate(A[s]):
                if a:
                    acc += (h_try * a) * k[j]
            k[s] = f(t + C[s] * h_try, acc)
        stats.nfev += 6
        y_new = acc  # stage 7 input is the fifth-order solution
        err = sum(e * kk for e, kk in zip(E, k) if e) * h_try
        en = _err_norm(err, y, y_new, rtol, atol)
        if en <= 1.0:
            fac = SAFETY * max(en, 1e-10) ** -ALPHA * err_old ** BETA
            fac = min(MAX_FACTOR, max(MIN_FACTOR, fac))
            err_old = max(en, 1e-4)
            t = t + h_try if not clipped else target
            y = y_new
            k[0] = k[6]
            stats.accepted += 1
            stats.last_step = h_try
            if on_accept is not None:
                replaced = on_accept(t, y, stats.accepted)
                if replaced is not None:
                    y = replaced
                    k[0] = f(t, y)
                    stats.nfev += 1
            if stops and t >= stops[0]:
                samples.append((stops.pop(0), y.copy()))
            h_new = h_try * fac
            # a step shortened to land on a stop should not shrink the next one
            h = min(max(h_new, h) if clipped else h_new, max_step)
        else:
            stats.rejected += 1
            fac = max(MIN_FACTOR, SAFETY * en ** -ALPHA)
            h = h_try * fac
            if h <= 16 * np.finfo(float).eps * max(1.0, abs(t)):
                raise StiffnessError(f"step size underflow at t={t:.6g} (h={h:.3e})")
    return Solution(y, t, samples, stats)
