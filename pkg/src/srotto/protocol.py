"""Repeated injection of coherent atomic clusters into the cavity.

Each cycle: couple a freshly prepared cluster to the field for ``t_int``,
trace the atoms out, let the field decay freely for ``period - t_int``.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, InsufficientDataError, IntegrityError, StiffnessError
from .hilbert import (PRODUCT_SPIN_CAP, DensityMatrix, HilbertSpace, RotationParams,
                      ThermalParams, make_boson_ops, partial_trace, rotate_cluster, tensor,
                      thermal_state)
from .lindblad import (DissipatorSpec, IntegratorConfig, LindbladGenerator, SystemModel,
                       build_hamiltonian, collapse_operators, evolve, free_field_hamiltonian,
                       system_space)
from .otto import bose_occupation, effective_temperature

COLLECTIVE_REP = "collective"
PRODUCT_REP = "product"

MIN_STEADY_CYCLES = 50
TOP_LEVEL_LIMIT = 1e-7


@dataclass(frozen=True)
class ProtocolConfig:
    N: int = 2
    num_injections: int = 100
    t_int: float = 1.0
    period: float = 6.0
    T_h: float = 0.001
    T_c: float = 0.5
    rotation: RotationParams = RotationParams()
    model: SystemModel = SystemModel()
    burn_in_fraction: float = 0.4
    n_max: int = 40
    representation: str = COLLECTIVE_REP
    samples_per_cycle: int = 10
    integrator: IntegratorConfig = IntegratorConfig()

    def __post_init__(self):
        if self.N < 1:
            raise ConfigError("protocol.N", "need at least one atom per cluster")
        if self.num_injections < 1:
            raise ConfigError("protocol.num_injections", "must be >= 1")
        if not self.t_int > 0:
            raise ConfigError("protocol.t_int", "must be > 0")
        if self.period < self.t_int:
            raise ConfigError("protocol.period", "injection period must be >= t_int")
        if not 0 <= self.burn_in_fraction < 1:
            raise ConfigError("protocol.burn_in_fraction", "must lie in [0, 1)")
        if self.T_h <= 0 or self.T_c <= 0:
            raise ConfigError("protocol.T_h" if self.T_h <= 0 else "protocol.T_c", "must be > 0")
        if self.n_max < 1:
            raise ConfigError("protocol.n_max", "must be >= 1")
        if self.samples_per_cycle < 1:
            raise ConfigError("protocol.samples_per_cycle", "must be >= 1")
        if self.representation not in (COLLECTIVE_REP, PRODUCT_REP):
            raise ConfigError("protocol.representation", f"unknown {self.representation!r}")
        if self.model.needs_product_space and self.representation != PRODUCT_REP:
            object.__setattr__(self, "representation", PRODUCT_REP)

    @property
    def rate(self) -> float:
        return 1.0 / self.period

    @property
    def gamma(self) -> float:
        return max((d.gamma for d in self.model.atomic_dissipators), default=0.0)

    def atom_space(self) -> HilbertSpace:
        if self.representation == PRODUCT_REP:
            return HilbertSpace.product(self.N, PRODUCT_SPIN_CAP)
        return HilbertSpace.collective(self.N)

    def run_name(self) -> str:
        m = self.model
        return f"ignition_N{self.N}_g{m.g:g}_k{m.kappa:g}_gam{self.gamma:g}"


@dataclass
class TimeSeries:
    t: np.ndarray
    mean_n: np.ndarray
    T_eff: np.ndarray
    per_cycle: list  # (cycle index, end-of-cycle <n>)
    final_field_state: DensityMatrix | None = None
    max_top_population: float = 0.0  # largest weight seen on the two highest Fock levels

    @property
    def truncation_flag(self) -> bool:
        return self.max_top_population >= TOP_LEVEL_LIMIT

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("t", "mean_n", "T_eff"))
            for row in zip(self.t, self.mean_n, self.T_eff):
                w.writerow([f"{v:.12g}" for v in row])

    @property
    def cycle_end_n(self) -> np.ndarray:
        return np.array([n for _, n in self.per_cycle])


@dataclass(frozen=True)
class SteadyStateStats:
    mean_n_ss: float
    T_eff_ss: float
    std_n: float
    cycles_used: int


def _t_eff(n):
    return effective_temperature(n) if n > 0 else math.nan


def _symmetric_weight(n_atoms, omega, temperature):
    # share of the thermal product state lying in the j = N/2 multiplet
    x = math.exp(-omega / temperature)
    sym = sum(x ** k for k in range(n_atoms + 1))
    return sym / (1.0 + x) ** n_atoms


def prepare_cluster(config: ProtocolConfig) -> DensityMatrix:
    """Thermal cluster at T_h rotated by R(zeta); reused for every injection.

    In the collective representation the Gibbs state is restricted to the
    symmetric multiplet; the discarded weight is ~N exp(-omega_a/T_h) and the
    result is flagged when it exceeds 1e-10.
    """
    atoms = config.atom_space()
    omega_a = config.model.omega_a
    if atoms.kind == "product":
        single = thermal_state(HilbertSpace.collective(1), ThermalParams(config.T_h, omega_a))
        data = single.data
        for _ in range(config.N - 1):
            data = np.kron(data, single.data)
        rho = DensityMatrix(atoms, data)
    else:
        rho = thermal_state(atoms, ThermalParams(config.T_h, omega_a))
        lost = 1.0 - _symmetric_weight(config.N, omega_a, config.T_h)
        if lost > 1e-10:
            rho = DensityMatrix(atoms, rho.data, truncation_warning=True)
    return rotate_cluster(rho, config.rotation)


def _chk(err, cycle):
    return type(err)(f"cycle {cycle}: {err}")


def run_ignition(config: ProtocolConfig, monitor=None) -> TimeSeries:
    """Simulate ``config.num_injections`` cycles and sample <n>, T_eff.

    Samples lie on a fixed grid of ``samples_per_cycle`` points per period,
    starting at t = 0 with the initial thermal field.  ``monitor(t, rho)``,
    if given, is called with the field state after every cycle.
    """
    model = config.model
    atoms = config.atom_space()
    space = system_space(atoms, config.n_max)
    fock = HilbertSpace.fock(config.n_max)
    h_sys = build_hamiltonian(model, space)
    gen_sys = LindbladGenerator(h_sys, collapse_operators(model, space))
    h_f = free_field_hamiltonian(model, fock)
    gen_f = LindbladGenerator(h_f, collapse_operators(model, fock))
    n_f = make_boson_ops(fock)[2]
    n_sys = np.kron(np.eye(atoms.dim), n_f)

    rho_a = prepare_cluster(config)
    rho_f = thermal_state(fock, ThermalParams(config.T_c, model.omega_f))
    grid = np.arange(config.samples_per_cycle) * (config.period / config.samples_per_cycle)
    in_int = [float(s) for s in grid if s < config.t_int]
    in_free = [float(s - config.t_int) for s in grid if s >= config.t_int]

    ts, ns = [], []
    per_cycle = []
    h_int = h_free = None
    top = 0.0
    cfg = config.integrator
    for k in range(config.num_injections):
        t0 = k * config.period
        rho_sys = tensor(rho_a, rho_f)
        try:
            ev = evolve(model, h_sys, rho_sys, config.t_int, cfg, in_int, gen_sys, h_int)
            h_int = ev.last_step or h_int
            for s, st in zip(ev.sample_times, ev.samples):
                ts.append(t0 + s)
                ns.append(st.expect(n_sys).real)
            rho_f = partial_trace(ev.state, 1)
            free = config.period - config.t_int
            ev = evolve(model, h_f, rho_f, free, cfg, in_free, gen_f, h_free)
            h_free = ev.last_step or h_free
        except (IntegrityError, StiffnessError) as err:
            raise _chk(err, k) from err
        for s, st in zip(ev.sample_times, ev.samples):
            ts.append(t0 + config.t_int + s)
            ns.append(st.expect(n_f).real)
        rho_f = ev.state
        per_cycle.append((k, rho_f.expect(n_f).real))
        top = max(top, float(rho_f.populations[-2:].sum()))
        if monitor is not None:
            monitor((k + 1) * config.period, rho_f)

    ns = np.array(ns)
    return TimeSeries(np.array(ts), ns, np.array([_t_eff(n) for n in ns]), per_cycle, rho_f, top)


def steady_state_stats(series: TimeSeries, config: ProtocolConfig,
                       burn_in_fraction: float | None = None) -> SteadyStateStats:
    """Time averages of <n> and T_eff after discarding the burn-in cycles."""
    n_cycles = len(series.per_cycle)
    if n_cycles < MIN_STEADY_CYCLES:
        raise InsufficientDataError(
            f"{n_cycles} cycles recorded; steady-state averaging needs >= {MIN_STEADY_CYCLES}")
    frac = config.burn_in_fraction if burn_in_fraction is None else burn_in_fraction
    skip = int(math.floor(frac * n_cycles))
    mask = series.t >= skip * config.period - 1e-9
    n = series.mean_n[mask]
    temps = series.T_eff[mask]
    return SteadyStateStats(float(np.mean(n)), float(np.mean(temps)), float(np.std(n)),
                            n_cycles - skip)


def cycles_to_saturation(series: TimeSeries, steady_n: float, fraction: float = 0.9,
                         initial_n: float | None = None) -> int:
    """First cycle whose end-of-cycle <n> covers ``fraction`` of the rise to steady state."""
    n0 = series.mean_n[0] if initial_n is None else initial_n
    target = n0 + fraction * (steady_n - n0)
    for k, n in series.per_cycle:
        if (n - target) * np.sign(steady_n - n0) >= 0:
            return k + 1
    return len(series.per_cycle) + 1


def run_many(configs, jobs: int = 1, fn=run_ignition) -> list:
    """Map ``fn`` over independent configs, optionally on a process pool."""
    configs = list(configs)
    if jobs <= 1 or len(configs) <= 1:
        return [fn(c) for c in configs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, configs))


def _ignite_and_average(config):
    return steady_state_stats(run_ignition(config), config)


def with_dissipator(config: ProtocolConfig, channel: str, gamma: float) -> ProtocolConfig:
    model = replace(config.model, atomic_dissipators=(DissipatorSpec(channel, gamma),))
    rep = PRODUCT_REP if model.needs_product_space else config.representation
    return replace(config, model=model, representation=rep)


def decoherence_sweep(config: ProtocolConfig, gammas, channels, jobs: int = 1) -> list:
    """Steady-state stats for every (channel, gamma) pair.

    Returns ``(channel, gamma, SteadyStateStats)`` triples in input order.
    """
    pairs = [(ch, float(gm)) for ch in channels for gm in gammas]
    cfgs = [with_dissipator(config, ch, gm) for ch, gm in pairs]
    stats = run_many(cfgs, jobs, _ignite_and_average)
    return [(ch, gm, st) for (ch, gm), st in zip(pairs, stats)]


def predicted_mean_n(N: int, T_c: float = 0.5, xi: float = 0.095) -> float:
    """Rough steady <n> used to sanity-check the Fock truncation."""
    return bose_occupation(T_c) + xi * N * N
