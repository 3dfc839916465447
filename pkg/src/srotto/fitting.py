"""Scaling-law fits, thermal-coherent-state fits and the xi parameter study."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.optimize import least_squares, minimize

from .errors import FitError
from .hilbert import (FOCK, DensityMatrix, ThermalParams, displaced_thermal_state,
                      fidelity, make_boson_ops)
from .otto import bose_occupation, effective_temperature


@dataclass(frozen=True)
class ScalingFit:
    """value = offset + coefficient * N^2, plus a free-exponent companion fit.

    ``exponent`` and ``power_amplitude`` describe value = power_offset + b N^p.
    """
    offset: float
    coefficient: float
    exponent: float
    residual: float
    points: tuple
    pinned: bool = False
    power_amplitude: float = math.nan
    power_offset: float = math.nan
    power_residual: float = math.nan

    def to_dict(self) -> dict:
        d = asdict(self)
        d["points"] = [list(p) for p in self.points]
        d["model"] = "offset + coefficient*N^2; power_offset + power_amplitude*N^exponent"
        return d


def _rms(r) -> float:
    r = np.asarray(r, dtype=float)
    return float(np.sqrt(np.mean(r * r)))


def fit_quadratic_scaling(points, pin_offset: float | None = None) -> ScalingFit:
    """Least-squares N^2 law with an optional pinned intercept."""
    pts = tuple((float(n), float(v)) for n, v in points)
    ns = np.array([p[0] for p in pts])
    vs = np.array([p[1] for p in pts])
    if len(pts) < 3 or len(np.unique(ns)) < 3:
        raise FitError(f"need >= 3 distinct N values, got {sorted(set(ns.tolist()))}")
    n2 = ns ** 2
    if pin_offset is None:
        design = np.column_stack([np.ones_like(n2), n2])
        if np.linalg.matrix_rank(design) < 2:
            raise FitError("degenerate design matrix")
        (offset, xi), *_ = np.linalg.lstsq(design, vs, rcond=None)
    else:
        offset = float(pin_offset)
        xi = float(np.dot(n2, vs - offset) / np.dot(n2, n2))
    resid = _rms(vs - offset - xi * n2)

    # free exponent, seeded at the quadratic solution
    if pin_offset is None:
        def model(p):
            return p[0] + p[1] * ns ** p[2]
        x0 = [offset, xi, 2.0]
    else:
        def model(p):
            return offset + p[0] * ns ** p[1]
        x0 = [xi, 2.0]
    sol = least_squares(lambda p: model(p) - vs, x0, method="lm" if len(pts) > len(x0) else "trf")
    if pin_offset is None:
        p_off, b, p = sol.x
    else:
        p_off, (b, p) = offset, sol.x
    return ScalingFit(float(offset), float(xi), float(p), resid, pts, pin_offset is not None,
                      float(b), float(p_off), _rms(sol.fun))


@dataclass(frozen=True)
class TCSFit:
    alpha: complex
    temperature: float
    fidelity_value: float
    mean_n: float
    mean_n_thermal: float

    @property
    def alpha_sq(self) -> float:
        return abs(self.alpha) ** 2

    def to_dict(self) -> dict:
        return {"alpha_re": self.alpha.real, "alpha_im": self.alpha.imag,
                "alpha_sq": self.alpha_sq, "temperature": self.temperature,
                "fidelity": self.fidelity_value, "mean_n": self.mean_n,
                "mean_n_thermal": self.mean_n_thermal}


def _tcs(space, temperature, alpha):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return displaced_thermal_state(space, ThermalParams(temperature), alpha)


def fit_thermal_coherent_state(rho_f: DensityMatrix, refine: bool = False) -> TCSFit:
    """Match D(alpha) rho_th(T) D^dag(alpha) to a field state by its first moments.

    alpha = <a>, <n>_th = <a^dag a> - |alpha|^2, T from Bose-Einstein
    inversion.  ``refine`` runs a local Nelder-Mead search on (T, alpha)
    for higher fidelity and keeps it only if it improves.
    """
    if rho_f.space.kind != FOCK:
        raise FitError("thermal coherent state fit needs a field-only state")
    a, _, n_op = make_boson_ops(rho_f.space)
    alpha = rho_f.expect(a)
    mean_n = rho_f.expect(n_op).real
    n_th = mean_n - abs(alpha) ** 2
    if n_th < -1e-9:
        raise FitError(f"thermal occupation {n_th:.3e} < 0: state is sub-Poissonian")
    temp = effective_temperature(max(n_th, 1e-300))
    fid = fidelity(rho_f, _tcs(rho_f.space, temp, alpha))
    if refine:
        def loss(x):
            t = abs(x[0]) + 1e-9
            return -fidelity(rho_f, _tcs(rho_f.space, t, complex(x[1], x[2])))
        res = minimize(loss, [temp, alpha.real, alpha.imag], method="Nelder-Mead",
                       options={"xatol": 1e-7, "fatol": 1e-12, "maxiter": 400})
        if -res.fun > fid:
            temp, alpha, fid = abs(res.x[0]) + 1e-9, complex(res.x[1], res.x[2]), -res.fun
            n_th = bose_occupation(temp)
    return TCSFit(complex(alpha), float(temp), float(fid), float(mean_n), float(n_th))


def micromaser_intensity(r: float, g: float, t_int: float, p_e: float, kappa: float) -> float:
    """Single-atom micromaser emission intensity r g^2 t_int^2 P_e / kappa."""
    if min(r, g, t_int, p_e, kappa) < 0:
        raise ValueError("all arguments must be nonnegative")
    if kappa == 0:
        raise ValueError("intensity undefined for kappa = 0")
    return r * g * g * t_int * t_int * p_e / kappa


@dataclass(frozen=True)
class PowerLawFit:
    amplitude: float
    exponent: float
    residual: float  # RMS in log space
    points: tuple

    def to_dict(self) -> dict:
        return {"model": "amplitude*x^exponent", "amplitude": self.amplitude,
                "exponent": self.exponent, "residual": self.residual,
                "points": [list(p) for p in self.points]}


def power_law_fit(xs, ys) -> PowerLawFit:
    """Unweighted least squares of log y = log A + p log x."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 2 or np.any(xs <= 0) or np.any(ys <= 0):
        raise FitError("power-law fit needs >= 2 strictly positive points")
    lx, ly = np.log(xs), np.log(ys)
    p, c = np.polyfit(lx, ly, 1)
    return PowerLawFit(float(math.exp(c)), float(p), _rms(ly - (c + p * lx)),
                       tuple(zip(xs.tolist(), ys.tolist())))


@dataclass
class XiStudy:
    g_fit: PowerLawFit
    kappa_fit: PowerLawFit
    g_scaling: list = field(default_factory=list)      # ScalingFit per g
    kappa_scaling: list = field(default_factory=list)  # ScalingFit per kappa

    def to_dict(self) -> dict:
        return {"xi_vs_g": self.g_fit.to_dict(), "xi_vs_kappa": self.kappa_fit.to_dict(),
                "g_scaling": [s.to_dict() for s in self.g_scaling],
                "kappa_scaling": [s.to_dict() for s in self.kappa_scaling]}


def scaling_from_runs(ns, stats, T_c: float, quantity: str = "mean_n") -> ScalingFit:
    """N^2 fit of steady-state <n> (or T_eff) with the intercept pinned at the initial value."""
    if quantity == "mean_n":
        pts = [(n, s.mean_n_ss) for n, s in zip(ns, stats)]
        return fit_quadratic_scaling(pts, pin_offset=bose_occupation(T_c))
    pts = [(n, s.T_eff_ss) for n, s in zip(ns, stats)]
    return fit_quadratic_scaling(pts, pin_offset=T_c)


def xi_parameter_study(base, g_grid, kappa_grid, ns=(2, 3, 4), jobs: int = 1,
                       quantity: str = "mean_n") -> XiStudy:
    """Fit xi at each g (kappa fixed) and each kappa (g fixed), then xi vs parameter power laws."""
    from .protocol import _ignite_and_average, run_many

    def sweep(param, grid):
        cfgs = []
        for v in grid:
            model = replace(base.model, **{param: float(v)})
            cfgs.extend(replace(base, model=model, N=n) for n in ns)
        stats = run_many(cfgs, jobs, _ignite_and_average)
        fits = []
        for i, _ in enumerate(grid):
            chunk = stats[i * len(ns):(i + 1) * len(ns)]
            fits.append(scaling_from_runs(ns, chunk, base.T_c, quantity))
        return fits

    g_fits = sweep("g", g_grid)
    k_fits = sweep("kappa", kappa_grid)
    return XiStudy(power_law_fit(g_grid, [f.coefficient for f in g_fits]),
                   power_law_fit(kappa_grid, [f.coefficient for f in k_fits]),
                   g_fits, k_fits)


def write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"cannot serialize {type(obj).__name__}")
