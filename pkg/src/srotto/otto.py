"""Effective temperatures and four-stroke quantum Otto cycle bookkeeping.

Energies are in units of the high frequency omega_H (k_B = hbar = 1).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import UndefinedTemperatureError
from .hilbert import bose_occupation  # noqa: F401  (re-exported)


def effective_temperature(mean_n: float, omega: float = 1.0) -> float:
    """Temperature whose Bose-Einstein occupation at ``omega`` equals ``mean_n``."""
    if not mean_n > 0:
        raise UndefinedTemperatureError(f"effective temperature undefined for <n> = {mean_n}")
    return omega / math.log1p(1.0 / mean_n)


def thermal_distribution(temperature: float, omega: float, n_levels: int) -> np.ndarray:
    """Truncated, renormalized Gibbs occupation probabilities P_n."""
    n = np.arange(n_levels)
    w = np.exp(-omega * n / temperature)
    return w / w.sum()


@dataclass(frozen=True)
class OttoCycleSpec:
    omega_L: float
    T_H: float
    T_c: float = 0.5
    omega_H: float = 1.0
    n_levels: int = 41

    def __post_init__(self):
        if not 0 < self.omega_L < self.omega_H:
            raise ValueError(f"need 0 < omega_L < omega_H, got omega_L={self.omega_L}")
        if self.T_H <= 0 or self.T_c <= 0:
            raise ValueError("temperatures must be positive")

    @property
    def T_L(self) -> float:
        # occupations of (T_c, omega_H) survive the compression adiabat
        return self.omega_L * self.T_c / self.omega_H


@dataclass(frozen=True)
class OttoResult:
    omega_L: float
    q_in: float
    q_out: float
    work: float
    efficiency: float  # nan when q_in <= 0
    positive_work: bool


def otto_quantities(spec: OttoCycleSpec, p_high, p_low) -> OttoResult:
    """Heat and work of the cycle from the two isochore occupation vectors."""
    p_high = np.asarray(p_high, dtype=float)
    p_low = np.asarray(p_low, dtype=float)
    if p_high.shape != p_low.shape or p_high.ndim != 1:
        raise ValueError(f"distribution length mismatch {p_high.shape} vs {p_low.shape}")
    for name, p in (("P_H", p_high), ("P_L", p_low)):
        if np.any(p < -1e-12):
            raise ValueError(f"{name} has negative entries")
        if abs(p.sum() - 1.0) > 1e-6:
            raise ValueError(f"{name} sums to {p.sum():.9f}, not 1")
    n = np.arange(p_high.size)
    e_high = n * spec.omega_H
    e_low = n * spec.omega_L
    dp = p_high - p_low
    q_in = float(np.dot(e_high, dp))
    q_out = float(np.dot(e_low, -dp))
    work = q_in + q_out
    eff = work / q_in if q_in > 0 else math.nan
    return OttoResult(spec.omega_L, q_in, q_out, work, eff, bool(q_in > -q_out > 0))


def work_from_photon_numbers(spec: OttoCycleSpec, mean_n_ss: float, mean_n_L: float | None = None):
    """(work, efficiency) from the photon-number difference across the cycle.

    ``mean_n_L`` defaults to the initial cavity occupation at T_c.
    """
    if mean_n_L is None:
        mean_n_L = bose_occupation(spec.T_c, spec.omega_H)
    if mean_n_ss < 0 or mean_n_L < 0:
        raise ValueError("photon numbers must be >= 0")
    eta = 1.0 - spec.omega_L / spec.omega_H
    return eta * (mean_n_ss - mean_n_L) * spec.omega_H, eta


def work_curve(mean_n_ss: float, omega_L_grid, T_c: float = 0.5, n_levels: int = 41,
               omega_H: float = 1.0, p_high=None) -> list:
    """Cycle results across ``omega_L_grid``.

    The hot isochore ends in the thermal state at T_H = T_eff(mean_n_ss)
    unless ``p_high`` (e.g. the raw steady-state photon distribution) is
    given.  The cold isochore ends thermal at T_L = omega_L T_c.
    """
    t_high = effective_temperature(mean_n_ss, omega_H)
    results = []
    for w_low in omega_L_grid:
        spec = OttoCycleSpec(float(w_low), t_high, T_c, omega_H, n_levels)
        ph = thermal_distribution(t_high, omega_H, n_levels) if p_high is None else p_high
        pl = thermal_distribution(spec.T_L, spec.omega_L, len(ph))
        results.append(otto_quantities(spec, ph, pl))
    return results


OTTO_COLUMNS = ("omega_L", "q_in", "q_out", "work", "efficiency", "positive_work")


def write_otto_csv(path, results) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(OTTO_COLUMNS)
        for r in results:
            w.writerow([f"{r.omega_L:.12g}", f"{r.q_in:.12g}", f"{r.q_out:.12g}",
                        f"{r.work:.12g}", f"{r.efficiency:.12g}", int(r.positive_work)])
