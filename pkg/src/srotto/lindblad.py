"""Hamiltonians, dissipators and Lindblad time evolution.

The generator is applied matrix-free (see :mod:`srotto._kernels`); no
superoperator is ever assembled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import IntegrityError, RepresentationError
from .hilbert import (COMPOSITE, FOCK, PRODUCT, POSITIVITY_TOL, DensityMatrix,
                      HilbertSpace, make_boson_ops, make_product_spin_ops, spin_ops)
from .integrate import dopri5

TAVIS_CUMMINGS = "tavis-cummings"
DICKE = "dicke"
HAMILTONIAN_KINDS = (TAVIS_CUMMINGS, DICKE)

COLLECTIVE_LOWERING = "collective-lowering"
COLLECTIVE_DEPHASING = "collective-dephasing"
INDIVIDUAL_LOWERING = "individual-lowering"
INDIVIDUAL_DEPHASING = "individual-dephasing"
CHANNELS = (COLLECTIVE_LOWERING, COLLECTIVE_DEPHASING, INDIVIDUAL_LOWERING, INDIVIDUAL_DEPHASING)
INDIVIDUAL_CHANNELS = (INDIVIDUAL_LOWERING, INDIVIDUAL_DEPHASING)


@dataclass(frozen=True)
class DissipatorSpec:
    channel: str
    gamma: float

    def __post_init__(self):
        if self.channel not in CHANNELS:
            raise ValueError(f"unknown dissipator channel {self.channel!r}")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")

    @property
    def individual(self) -> bool:
        return self.channel in INDIVIDUAL_CHANNELS


@dataclass(frozen=True)
class SystemModel:
    omega_f: float = 1.0
    omega_a: float = 1.0
    g: float = 0.19
    kappa: float = 0.03
    hamiltonian_kind: str = TAVIS_CUMMINGS
    atomic_dissipators: tuple = ()

    def __post_init__(self):
        if self.g < 0 or self.kappa < 0:
            raise ValueError("g and kappa must be >= 0")
        if self.hamiltonian_kind not in HAMILTONIAN_KINDS:
            raise ValueError(f"unknown hamiltonian kind {self.hamiltonian_kind!r}")
        object.__setattr__(self, "atomic_dissipators", tuple(self.atomic_dissipators))

    @property
    def needs_product_space(self) -> bool:
        return any(d.individual and d.gamma > 0 for d in self.atomic_dissipators)


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = 0.05
    guard_every: int = 50


def _split_system(space: HilbertSpace):
    if space.kind != COMPOSITE or len(space.factors) != 2:
        raise RepresentationError("system space must be composite (atoms, field)")
    atoms, fld = space.factors
    if not atoms.is_spin or fld.kind != FOCK:
        raise RepresentationError(
            f"system factors must be (spin, fock), got ({atoms.kind}, {fld.kind})")
    return atoms, fld


def system_space(atoms: HilbertSpace, n_max: int) -> HilbertSpace:
    return HilbertSpace.composite(atoms, HilbertSpace.fock(n_max))


def build_hamiltonian(model: SystemModel, space: HilbertSpace) -> np.ndarray:
    """Tavis-Cummings or Dicke Hamiltonian on the (atoms, field) space."""
    atoms, fld = _split_system(space)
    s_plus, s_minus, s_z = spin_ops(atoms)
    a, a_dag, n_op = make_boson_ops(fld)
    i_a = np.eye(atoms.dim)
    i_f = np.eye(fld.dim)
    h = model.omega_f * np.kron(i_a, n_op) + model.omega_a * np.kron(s_z, i_f)
    if model.hamiltonian_kind == TAVIS_CUMMINGS:
        h = h + model.g * (np.kron(s_plus, a) + np.kron(s_minus, a_dag))
    else:
        h = h + model.g * np.kron(s_plus + s_minus, a + a_dag)
    return h


def free_field_hamiltonian(model: SystemModel, space: HilbertSpace) -> np.ndarray:
    if space.kind != FOCK:
        raise RepresentationError("free field Hamiltonian needs a Fock space")
    return model.omega_f * make_boson_ops(space)[2]


def _atomic_jump_ops(spec: DissipatorSpec, atoms: HilbertSpace):
    if spec.individual:
        if atoms.kind != PRODUCT:
            raise RepresentationError(f"{spec.channel} requires the product-spin representation")
        ops = make_product_spin_ops(atoms)
        return ops.sigma_minus if spec.channel == INDIVIDUAL_LOWERING else ops.sigma_z
    _, s_minus, s_z = spin_ops(atoms)
    return [s_minus] if spec.channel == COLLECTIVE_LOWERING else [s_z]


def collapse_operators(model: SystemModel, space: HilbertSpace) -> list:
    """Jump operators with rates folded in (sqrt(rate) * x)."""
    if space.kind == FOCK:
        a = make_boson_ops(space)[0]
        return [np.sqrt(model.kappa) * a] if model.kappa > 0 else []
    atoms, fld = _split_system(space)
    ops = []
    if model.kappa > 0:
        ops.append(np.sqrt(model.kappa) * np.kron(np.eye(atoms.dim), make_boson_ops(fld)[0]))
    i_f = np.eye(fld.dim)
    for spec in model.atomic_dissipators:
        if spec.gamma == 0:
            continue
        for x in _atomic_jump_ops(spec, atoms):
            ops.append(np.sqrt(spec.gamma) * np.kron(x, i_f))
    return ops


def exact_frame(hamiltonian, collapse_ops=(), tol=1e-12):
    """Diagonal of H if it defines an exact rotating frame, else None.

    The frame H0 = diag(H) is usable when the off-diagonal part of H only
    couples states with equal H0 energy and every jump operator shifts the
    H0 energy by a fixed amount.  Then the evolution factorizes as
    exp(-i H0 t) rho_rot(t) exp(i H0 t), which removes the fast optical
    phases from the integrated equation (Tavis-Cummings, free field).
    """
    h = np.asarray(hamiltonian)
    d = np.real(np.diag(h)).copy()
    scale = tol * max(1.0, float(np.max(np.abs(d))) if d.size else 1.0)
    gap = d[:, None] - d[None, :]
    off = h - np.diag(np.diag(h))
    if np.any(np.abs(gap[np.abs(off) > 0]) > scale):
        return None
    for c in collapse_ops:
        shifts = gap[np.abs(np.asarray(c)) > 0]
        if shifts.size and np.ptp(shifts) > scale:
            return None
    return d


def rotate_frame(data, frame, t):
    """Map a rotating-frame matrix at time ``t`` back to the lab frame."""
    ph = np.exp(-1j * frame * t)
    return data * np.outer(ph, ph.conj())


class LindbladGenerator:
    """Callable L(rho) for fixed H and jump operators.

    With ``frame="auto"`` the generator works in the exact rotating frame
    found by :func:`exact_frame` when one exists (``self.frame`` is then the
    diagonal frame energies, otherwise ``None``).
    """

    def __init__(self, hamiltonian, collapse_ops=(), backend=None, frame="auto"):
        h = np.asarray(hamiltonian, dtype=np.complex128)
        self.dim = h.shape[0]
        self.collapse_ops = [np.asarray(c, dtype=np.complex128) for c in collapse_ops]
        if isinstance(frame, str):
            if frame != "auto":
                raise ValueError(f"unknown frame {frame!r}")
            frame = exact_frame(h, self.collapse_ops)
        self.frame = None if frame is None else np.asarray(frame, dtype=float)
        k = h.copy() if self.frame is None else h - np.diag(self.frame)
        for c in self.collapse_ops:
            k -= 0.5j * (c.conj().T @ c)
        self.k = k
        self.backend = backend or _kernels.BACKEND
        if self.backend == "numba":
            if _kernels.rhs_numba is None:
                raise RuntimeError("numba backend requested but numba is unavailable")
            self._k_csr = _kernels.to_csr(k)
            self._c_csr = _kernels.stack_csr(self.collapse_ops, self.dim)
        elif self.backend != "numpy":
            raise ValueError(f"unknown backend {self.backend!r}")

    def __call__(self, rho, hermitian=False):
        """L(rho); ``hermitian=True`` assumes rho = rho^dag and returns an exactly Hermitian result."""
        if self.backend == "numba":
            return _kernels.rhs_numba(self._k_csr, self._c_csr, len(self.collapse_ops), rho,
                                      hermitian)
        return _kernels.rhs_numpy(self.k, self.collapse_ops, rho, hermitian)

    def to_lab(self, data, t):
        return data if self.frame is None else rotate_frame(data, self.frame, t)


def lindblad_rhs(model: SystemModel, hamiltonian, rho: DensityMatrix) -> np.ndarray:
    """d rho / dt for the model's cavity and atomic dissipators (lab frame)."""
    gen = LindbladGenerator(hamiltonian, collapse_operators(model, rho.space), frame=None)
    return gen(rho.data)


@dataclass
class Evolution:
    state: DensityMatrix
    sample_times: list = field(default_factory=list)
    samples: list = field(default_factory=list)
    last_step: float = 0.0
    nfev: int = 0


def _guard(space, config, monitor):
    def on_accept(t, y, n):
        if monitor is not None:
            monitor(t, y)
        if n % config.guard_every:
            return None
        return _sanitize(y, t, space)
    return on_accept


def _sanitize(y, t, space):
    y = 0.5 * (y + y.conj().T)
    tr = np.trace(y).real
    if not np.isfinite(tr) or tr <= 0:
        raise IntegrityError(f"trace collapsed to {tr!r} at t={t:.6g}")
    y /= tr
    lam = np.linalg.eigvalsh(y)[0]
    if lam < POSITIVITY_TOL:
        raise IntegrityError(
            f"positivity breach at t={t:.6g}: min eigenvalue {lam:.3e} < {POSITIVITY_TOL:g} "
            f"(space dim {space.dim})")
    return y


def evolve(model: SystemModel, hamiltonian, rho0: DensityMatrix, duration: float,
           config: IntegratorConfig = IntegratorConfig(), sample_times=(),
           generator: LindbladGenerator | None = None, first_step=None,
           monitor=None) -> Evolution:
    """Integrate the master equation for ``duration`` starting at t = 0.

    Every ``config.guard_every`` accepted steps, and on the returned state,
    the matrix is re-Hermitized, renormalized to unit trace and checked for
    positivity.  ``sample_times`` are relative to the start.  ``monitor(t, y)``
    sees every accepted step (in the generator's frame).
    """
    if duration < 0:
        raise ValueError("duration must be >= 0")
    if generator is None:
        generator = LindbladGenerator(hamiltonian, collapse_operators(model, rho0.space))
    space = rho0.space
    y0 = 0.5 * (rho0.data + rho0.data.conj().T)
    sol = dopri5(lambda t, y: generator(y, hermitian=True), y0, 0.0, float(duration),
                 rtol=config.rel_tol, atol=config.abs_tol, max_step=config.max_step,
                 sample_times=sample_times, on_accept=_guard(space, config, monitor),
                 first_step=first_step)
    final = sol.y if duration == 0 else _sanitize(sol.y, sol.t, space)
    warn = rho0.truncation_warning
    return Evolution(
        state=DensityMatrix(space, generator.to_lab(final, sol.t), warn),
        sample_times=[t for t, _ in sol.samples],
        samples=[DensityMatrix(space, generator.to_lab(y, t), warn) for t, y in sol.samples],
        last_step=sol.stats.last_step,
        nfev=sol.stats.nfev,
    )


def evolve_free_field(model: SystemModel, rho_f: DensityMatrix, duration: float,
                      config: IntegratorConfig = IntegratorConfig(), sample_times=(),
                      generator: LindbladGenerator | None = None, first_step=None,
                      monitor=None) -> Evolution:
    """Cavity-only evolution with H = omega_f a^dag a and photon loss."""
    if rho_f.space.kind != FOCK:
        raise RepresentationError("evolve_free_field needs a field-only state")
    h = free_field_hamiltonian(model, rho_f.space)
    return evolve(model, h, rho_f, duration, config, sample_times, generator,
                  first_step, monitor)
