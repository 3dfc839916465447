"""Run configuration: nested YAML sections mirroring the protocol types.

Defaults reproduce the reference parameters (g=0.19, kappa=0.03, T_h=0.001,
T_c=0.5, t_int=1, period=6, N=2, n_max=40).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields, replace

import yaml

from .errors import ConfigError
from .hilbert import RotationParams
from .lindblad import CHANNELS, DissipatorSpec, IntegratorConfig, SystemModel
from .protocol import ProtocolConfig


@dataclass
class PhysicsSection:
    omega_f: float = 1.0
    omega_a: float = 1.0
    g: float = 0.19
    kappa: float = 0.03
    hamiltonian_kind: str = "tavis-cummings"


@dataclass
class ProtocolSection:
    N: list = field(default_factory=lambda: [2])
    num_injections: int = 250
    t_int: float = 1.0
    period: float = 6.0
    T_h: float = 0.001
    T_c: float = 0.5
    phi: float = -1.5707963267948966
    varphi: float = 0.0
    burn_in: float = 0.4
    n_max: int = 40
    samples_per_cycle: int = 10
    representation: str = "collective"


@dataclass
class OttoSection:
    omega_L_grid: list = field(default_factory=lambda: [0.01] + [round(0.05 * k, 2) for k in range(1, 20)])


@dataclass
class SweepSection:
    N: list = field(default_factory=lambda: [2, 3, 4, 5, 6])
    gamma_grid: list = field(default_factory=lambda: [0.0, 0.03, 0.09, 0.18])
    channels: list = field(default_factory=lambda: ["collective-lowering", "collective-dephasing"])
    decoherence_N: list = field(default_factory=lambda: [2, 3, 4])
    g_grid: list = field(default_factory=lambda: [0.1, 0.15, 0.19, 0.25, 0.3])
    kappa_grid: list = field(default_factory=lambda: [0.01, 0.02, 0.03, 0.05, 0.1])
    xi_N: list = field(default_factory=lambda: [2, 3, 4])
    dicke_g: float = 0.36
    dicke_N: list = field(default_factory=lambda: [1, 2, 3])
    dicke_n_max: int = 100


@dataclass
class IntegratorSection:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = 0.05
    guard_every: int = 50


@dataclass
class CostSection:
    inv_tau_gamma: float = 2.0
    divergence: float = 0.5
    omega: float = 2 * 3.141592653589793 * 5e9
    gamma_sp: float = 1e4
    clusters: int | None = None  # defaults to protocol.num_injections


@dataclass
class RunConfig:
    physics: PhysicsSection = field(default_factory=PhysicsSection)
    protocol: ProtocolSection = field(default_factory=ProtocolSection)
    otto: OttoSection = field(default_factory=OttoSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    integrator: IntegratorSection = field(default_factory=IntegratorSection)
    cost: CostSection = field(default_factory=CostSection)
    output_dir: str = "results"
    jobs: int = 1

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    # -- derived objects ---------------------------------------------------
    def model(self, **overrides) -> SystemModel:
        p = self.physics
        base = SystemModel(p.omega_f, p.omega_a, p.g, p.kappa, p.hamiltonian_kind)
        return replace(base, **overrides)

    def integrator_config(self) -> IntegratorConfig:
        i = self.integrator
        return IntegratorConfig(i.rel_tol, i.abs_tol, i.max_step, i.guard_every)

    def protocol_config(self, N: int, model: SystemModel | None = None, **overrides) -> ProtocolConfig:
        p = self.protocol
        cfg = ProtocolConfig(
            N=int(N), num_injections=p.num_injections, t_int=p.t_int, period=p.period,
            T_h=p.T_h, T_c=p.T_c, rotation=RotationParams(p.phi, p.varphi),
            model=model or self.model(), burn_in_fraction=p.burn_in, n_max=p.n_max,
            representation=p.representation, samples_per_cycle=p.samples_per_cycle,
            integrator=self.integrator_config())
        return replace(cfg, **overrides) if overrides else cfg

    def validate(self) -> "RunConfig":
        if self.jobs < 1:
            raise ConfigError("jobs", "must be >= 1")
        for sec, key in ((self.protocol, "protocol.N"), (self.sweep, "sweep.N")):
            if not sec.N:
                raise ConfigError(key, "empty atom-count list")
        try:
            model = self.model()
        except ValueError as err:
            raise ConfigError("physics", str(err)) from err
        for n in self.protocol.N:
            self.protocol_config(n, model)
        try:
            self.integrator_config()
            for ch in self.sweep.channels:
                DissipatorSpec(ch, 0.0)
        except ValueError as err:
            raise ConfigError("sweep.channels", f"{err}; choose from {', '.join(CHANNELS)}") from err
        for w in self.otto.omega_L_grid:
            if not 0 < w < 1:
                raise ConfigError("otto.omega_L_grid", f"value {w} outside (0, 1)")
        for g in self.sweep.gamma_grid:
            if g < 0:
                raise ConfigError("sweep.gamma_grid", f"negative rate {g}")
        i = self.integrator
        if i.rel_tol <= 0 or i.abs_tol <= 0 or i.max_step <= 0 or i.guard_every < 1:
            raise ConfigError("integrator", "tolerances, max_step and guard_every must be positive")
        return self


_SECTIONS = {f.name: f for f in fields(RunConfig)}


def _build_section(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigError(path, "expected a mapping")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"{path}.{sorted(unknown)[0]}", "unknown field")
    return cls(**data)


def from_dict(data: dict) -> RunConfig:
    data = dict(data or {})
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown section")
    kwargs = {}
    for name, f in _SECTIONS.items():
        if name not in data:
            continue
        if dataclasses.is_dataclass(f.default_factory() if f.default_factory is not dataclasses.MISSING else None):
            kwargs[name] = _build_section(type(f.default_factory()), data[name], name)
        else:
            kwargs[name] = data[name]
    return RunConfig(**kwargs)


def parse(text: str) -> RunConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as err:
        raise ConfigError("<file>", f"not valid YAML: {err}") from err
    return from_dict(data or {})


def load(path) -> RunConfig:
    with open(path) as fh:
        return parse(fh.read())
