"""Energy cost of preparing coherent clusters with pi/2 pulses.

A square pi/2 pulse of duration tau_p on a two-level atom with spontaneous
emission rate gamma and transition frequency omega needs a field amplitude
fixed by the dipole moment.  The chain is

    d^2   = 3 pi eps0 hbar c^3 gamma / omega^3
    E_p   = (pi/2) hbar / (d tau_p)
    I_p   = (c eps0 / 2) E_p^2 = pi hbar omega^3 / (24 c^2 tau_p^2 gamma)
    U_p   = I_p pi (delta/2)^2 tau_p
          = hbar omega (pi^2/24) / (tau_p gamma) / div^2,   div = lambda/(pi delta)

Pulse energies are reported in units of hbar*omega and in joules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.constants import c as C_LIGHT
from scipy.constants import epsilon_0 as EPS0
from scipy.constants import hbar as HBAR


@dataclass(frozen=True)
class CostParams:
    omega: float      # rad/s
    gamma_sp: float   # 1/s
    tau_p: float      # s
    delta: float      # beam width, m

    def __post_init__(self):
        if min(self.omega, self.gamma_sp, self.tau_p, self.delta) <= 0:
            raise ValueError("all cost parameters must be positive")
        if not 0 < self.divergence <= 1:
            raise ValueError(f"beam divergence {self.divergence:.3g} outside (0, 1]")

    @classmethod
    def from_dimensionless(cls, inv_tau_gamma: float, divergence: float,
                           omega: float = 2 * math.pi * 5e9, gamma_sp: float = 1e4):
        """Build parameters from 1/(tau_p gamma) and the beam divergence."""
        if inv_tau_gamma <= 0:
            raise ValueError("1/(tau_p gamma) must be positive")
        tau_p = 1.0 / (inv_tau_gamma * gamma_sp)
        delta = 2 * C_LIGHT / (omega * divergence)
        return cls(omega, gamma_sp, tau_p, delta)

    @property
    def wavelength(self) -> float:
        return 2 * math.pi * C_LIGHT / self.omega

    @property
    def divergence(self) -> float:
        return self.wavelength / (math.pi * self.delta)

    @property
    def inv_tau_gamma(self) -> float:
        return 1.0 / (self.tau_p * self.gamma_sp)


def dipole_moment_sq(omega: float, gamma_sp: float) -> float:
    """Squared transition dipole (C^2 m^2) from the spontaneous emission rate."""
    return 3 * math.pi * EPS0 * HBAR * C_LIGHT ** 3 * gamma_sp / omega ** 3


def pulse_amplitude(params: CostParams) -> float:
    """Field amplitude (V/m) of a square pi/2 pulse."""
    d = math.sqrt(dipole_moment_sq(params.omega, params.gamma_sp))
    return HBAR * (math.pi / 2) / (d * params.tau_p)


def pulse_intensity(params: CostParams) -> float:
    """Pulse intensity (W/m^2) via the dipole moment and amplitude."""
    return 0.5 * C_LIGHT * EPS0 * pulse_amplitude(params) ** 2


def pulse_intensity_closed_form(omega: float, tau_p: float, gamma_sp: float) -> float:
    return math.pi * HBAR * omega ** 3 / (24 * C_LIGHT ** 2 * tau_p ** 2 * gamma_sp)


def pulse_energy_reduced(inv_tau_gamma: float, divergence: float) -> float:
    """Pulse energy in units of hbar*omega."""
    if divergence <= 0:
        raise ValueError("divergence must be positive")
    return (math.pi ** 2 / 24) * inv_tau_gamma / divergence ** 2


def pulse_energy(params: CostParams) -> float:
    """Pulse energy in units of hbar*omega."""
    return pulse_energy_reduced(params.inv_tau_gamma, params.divergence)


def pulse_energy_joules(params: CostParams) -> float:
    """U_p = I_p * pi (delta/2)^2 * tau_p, straight from the intensity chain."""
    return pulse_intensity(params) * math.pi * (params.delta / 2) ** 2 * params.tau_p


@dataclass(frozen=True)
class CostReport:
    pulse_energy: float           # hbar*omega
    pulse_energy_joules: float
    per_cluster: float            # hbar*omega
    total: float                  # hbar*omega
    total_joules: float
    work_output: float            # hbar*omega
    ratio: float                  # nan if work_output <= 0
    n_atoms: int
    n_clusters: int

    @property
    def ratio_defined(self) -> bool:
        return not math.isnan(self.ratio)

    def to_dict(self) -> dict:
        return {
            "pulse_energy_in_hbar_omega": self.pulse_energy,
            "pulse_energy_in_joules": self.pulse_energy_joules,
            "per_cluster_in_hbar_omega": self.per_cluster,
            "total_cost_in_hbar_omega": self.total,
            "total_cost_in_joules": self.total_joules,
            "work_output_in_hbar_omega": self.work_output,
            "cost_to_work_ratio": None if math.isnan(self.ratio) else self.ratio,
            "N": self.n_atoms,
            "clusters": self.n_clusters,
        }

    def table(self) -> str:
        rows = [
            ("pulse energy U_p [hbar w]", f"{self.pulse_energy:.6g}"),
            ("pulse energy U_p [J]", f"{self.pulse_energy_joules:.6g}"),
            (f"per cluster N*U_p (N={self.n_atoms}) [hbar w]", f"{self.per_cluster:.6g}"),
            (f"total m*N*U_p (m={self.n_clusters}) [hbar w]", f"{self.total:.6g}"),
            ("engine work output [hbar w]", f"{self.work_output:.6g}"),
            ("cost / work", "undefined" if math.isnan(self.ratio) else f"{self.ratio:.6g}"),
        ]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)


def total_cost_report(params: CostParams, n_atoms: int, n_clusters: int,
                      work_output: float, pulse_energy_hbar_omega: float | None = None) -> CostReport:
    """Coherence cost of ``n_clusters`` clusters of ``n_atoms`` against engine work.

    ``pulse_energy_hbar_omega`` overrides the computed U_p (e.g. the rounded
    3 hbar*omega estimate).
    """
    if n_atoms < 1:
        raise ValueError("N must be >= 1")
    if n_clusters < 0:
        raise ValueError("cluster count must be >= 0")
    u_p = pulse_energy(params) if pulse_energy_hbar_omega is None else pulse_energy_hbar_omega
    quantum = HBAR * params.omega
    per = n_atoms * u_p
    total = n_clusters * per
    ratio = total / work_output if work_output > 0 else math.nan
    return CostReport(u_p, u_p * quantum, per, total, total * quantum, work_output, ratio,
                      n_atoms, n_clusters)
