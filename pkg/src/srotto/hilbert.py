"""Hilbert spaces, operators and initial states for the atom-cavity system.

Conventions
-----------
* Fock basis |0>, |1>, ..., |n_max>.
* Collective spin basis |j, m> with j = N/2, ordered m = -j, ..., +j, so
  index 0 is the cluster ground state.
* Single atom basis (|g>, |e>); sigma_z = diag(-1, 1) and sigma^+ = |e><g|.
  Atom 0 is the leftmost Kronecker factor of a product-spin space.
* Composite spaces keep their factor order; the pipeline always uses
  (atoms, field).

Operators are plain complex ``numpy`` arrays.  States are wrapped in
:class:`DensityMatrix` so that partial traces know the factor layout.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import reduce
from itertools import combinations

import numpy as np

from .errors import InvalidStateError, RepresentationError, ResourceLimitError

FOCK = "fock"
COLLECTIVE = "collective"
PRODUCT = "product"
COMPOSITE = "composite"

PRODUCT_SPIN_CAP = 4

TRACE_TOL = 1e-8
HERMITIAN_TOL = 1e-10
POSITIVITY_TOL = -1e-8


@dataclass(frozen=True)
class HilbertSpace:
    kind: str
    size: int = 0
    factors: tuple = ()

    @classmethod
    def fock(cls, n_max: int) -> "HilbertSpace":
        if n_max < 0:
            raise ValueError("n_max must be >= 0")
        return cls(FOCK, int(n_max))

    @classmethod
    def collective(cls, n_atoms: int) -> "HilbertSpace":
        if n_atoms < 1:
            raise ValueError("collective spin needs N >= 1")
        return cls(COLLECTIVE, int(n_atoms))

    @classmethod
    def product(cls, n_atoms: int, cap: int = PRODUCT_SPIN_CAP) -> "HilbertSpace":
        if n_atoms < 1:
            raise ValueError("product spin needs N >= 1")
        if n_atoms > cap:
            raise ResourceLimitError(
                f"product-spin space with N={n_atoms} needs 2^{n_atoms}="
                f"{2 ** n_atoms} atomic states (cap N<={cap})")
        return cls(PRODUCT, int(n_atoms))

    @classmethod
    def composite(cls, *factors: "HilbertSpace") -> "HilbertSpace":
        flat = []
        for f in factors:
            flat.extend(f.factors if f.kind == COMPOSITE else (f,))
        return cls(COMPOSITE, 0, tuple(flat))

    @property
    def dim(self) -> int:
        if self.kind == FOCK:
            return self.size + 1
        if self.kind == COLLECTIVE:
            return self.size + 1
        if self.kind == PRODUCT:
            return 2 ** self.size
        return math.prod(f.dim for f in self.factors)

    @property
    def dims(self) -> tuple:
        return tuple(f.dim for f in self.factors) if self.kind == COMPOSITE else (self.dim,)

    @property
    def is_spin(self) -> bool:
        return self.kind in (COLLECTIVE, PRODUCT)

    @property
    def n_atoms(self) -> int:
        if not self.is_spin:
            raise RepresentationError(f"{self.kind} space has no atom count")
        return self.size


def density_matrix_violations(data, trace_tol=TRACE_TOL, herm_tol=HERMITIAN_TOL,
                              pos_tol=POSITIVITY_TOL):
    """Return human-readable reasons ``data`` is not a density matrix."""
    problems = []
    tr = np.trace(data)
    if abs(tr - 1.0) > trace_tol:
        problems.append(f"trace {tr.real:.3e}{tr.imag:+.3e}j deviates from 1")
    herm = np.max(np.abs(data - data.conj().T)) if data.size else 0.0
    if herm > herm_tol:
        problems.append(f"non-Hermitian part {herm:.3e} > {herm_tol:g}")
    lam = np.linalg.eigvalsh(0.5 * (data + data.conj().T))[0]
    if lam < pos_tol:
        problems.append(f"min eigenvalue {lam:.3e} < {pos_tol:g}")
    return problems


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    space: HilbertSpace
    data: np.ndarray
    truncation_warning: bool = False

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.complex128)
        if data.shape != (self.space.dim, self.space.dim):
            raise RepresentationError(
                f"matrix shape {data.shape} does not match space dim {self.space.dim}")
        object.__setattr__(self, "data", data)

    def expect(self, op) -> complex:
        # Tr(rho op) without forming the product
        return complex(np.sum(self.data * np.asarray(op).T))

    def validate(self, **tols) -> "DensityMatrix":
        problems = density_matrix_violations(self.data, **tols)
        if problems:
            raise InvalidStateError("; ".join(problems))
        return self

    @property
    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.data)).copy()


@dataclass(frozen=True)
class RotationParams:
    phi: float = -math.pi / 2
    varphi: float = 0.0

    @property
    def zeta(self) -> complex:
        return (self.phi / 2) * complex(math.cos(self.varphi), math.sin(self.varphi))


@dataclass(frozen=True)
class ThermalParams:
    temperature: float
    frequency: float = 1.0

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")
        if not self.frequency > 0:
            raise ValueError(f"frequency must be > 0, got {self.frequency}")


# --------------------------------------------------------------------------
# operators

def make_boson_ops(space: HilbertSpace):
    """Truncated annihilation, creation and number operators."""
    if space.kind != FOCK:
        raise RepresentationError(f"boson operators need a Fock space, got {space.kind}")
    a = np.diag(np.sqrt(np.arange(1, space.dim, dtype=float)), 1).astype(np.complex128)
    a_dag = a.conj().T.copy()
    n_op = np.diag(np.arange(space.dim, dtype=float)).astype(np.complex128)
    return a, a_dag, n_op


def make_collective_spin_ops(space: HilbertSpace):
    """S+, S-, Sz on the j = N/2 multiplet."""
    if space.kind != COLLECTIVE:
        raise RepresentationError(f"collective spin operators need a collective space, got {space.kind}")
    if space.size < 1:
        raise ValueError("collective spin needs N >= 1")
    j = space.size / 2
    m = np.arange(-j, j + 1)
    ladder = np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1))
    s_plus = np.diag(ladder, -1).astype(np.complex128)
    return s_plus, s_plus.conj().T.copy(), np.diag(m).astype(np.complex128)


_SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=np.complex128)
_SIGMA_Z = np.array([[-1, 0], [0, 1]], dtype=np.complex128)


def _embed(single, site, n_atoms):
    mats = [np.eye(2, dtype=np.complex128)] * n_atoms
    mats[site] = single
    return reduce(np.kron, mats)


@dataclass(frozen=True)
class ProductSpinOps:
    sigma_plus: list
    sigma_minus: list
    sigma_z: list
    s_plus: np.ndarray = field(repr=False)
    s_minus: np.ndarray = field(repr=False)
    s_z: np.ndarray = field(repr=False)


def make_product_spin_ops(space: HilbertSpace, cap: int = PRODUCT_SPIN_CAP) -> ProductSpinOps:
    """Per-atom Pauli operators on 2^N and their collective sums."""
    if space.kind != PRODUCT:
        raise RepresentationError(f"product spin operators need a product space, got {space.kind}")
    if space.size > cap:
        raise ResourceLimitError(
            f"product-spin space with N={space.size} needs 2^{space.size} states (cap N<={cap})")
    n = space.size
    sp = [_embed(_SIGMA_PLUS, i, n) for i in range(n)]
    sm = [s.conj().T.copy() for s in sp]
    sz = [_embed(_SIGMA_Z, i, n) for i in range(n)]
    return ProductSpinOps(sp, sm, sz, sum(sp), sum(sm), 0.5 * sum(sz))


def spin_ops(space: HilbertSpace):
    """Collective (S+, S-, Sz) for either spin representation."""
    if space.kind == COLLECTIVE:
        return make_collective_spin_ops(space)
    if space.kind == PRODUCT:
        ops = make_product_spin_ops(space)
        return ops.s_plus, ops.s_minus, ops.s_z
    raise RepresentationError(f"no spin operators on a {space.kind} space")


def dicke_isometry(n_atoms: int) -> np.ndarray:
    """Columns are the symmetric Dicke states |N/2, m>, m ascending, in the product basis.

    Maps collective-spin vectors into the 2^N product space.
    """
    iso = np.zeros((2 ** n_atoms, n_atoms + 1), dtype=np.complex128)
    for k in range(n_atoms + 1):  # k excited atoms, m = k - N/2
        for excited in combinations(range(n_atoms), k):
            idx = sum(1 << (n_atoms - 1 - i) for i in excited)
            iso[idx, k] = 1.0
        iso[:, k] /= math.sqrt(math.comb(n_atoms, k))
    return iso


def tensor(a, b):
    """Kronecker product; density matrices get a composite space (a first)."""
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(HilbertSpace.composite(a.space, b.space),
                             np.kron(a.data, b.data),
                             a.truncation_warning or b.truncation_warning)
    return np.kron(np.asarray(a), np.asarray(b))


def partial_trace(rho: DensityMatrix, keep: int) -> DensityMatrix:
    """Reduced state on factor ``keep`` of a composite space."""
    space = rho.space
    if space.kind != COMPOSITE or len(space.factors) < 2:
        raise ValueError("partial_trace needs a composite space with >= 2 factors")
    n = len(space.factors)
    if not -n <= keep < n:
        raise ValueError(f"factor index {keep} out of range for {n} factors")
    keep %= n
    dims = space.dims
    t = rho.data.reshape(dims + dims)
    rows = list(range(n))
    cols = [i if i != keep else n + i for i in range(n)]
    out = np.einsum(t, rows + cols, [keep, n + keep])
    return DensityMatrix(space.factors[keep], out, rho.truncation_warning)


def expm_antihermitian(gen: np.ndarray) -> np.ndarray:
    """exp(G) for anti-Hermitian G via eigendecomposition of iG."""
    herm = 1j * gen
    lam, vec = np.linalg.eigh(0.5 * (herm + herm.conj().T))
    return (vec * np.exp(-1j * lam)) @ vec.conj().T


def default_hamiltonian(space: HilbertSpace, frequency: float = 1.0) -> np.ndarray:
    if space.kind == FOCK:
        return frequency * make_boson_ops(space)[2]
    if space.is_spin:
        return frequency * spin_ops(space)[2]
    raise RepresentationError("no default Hamiltonian for a composite space")


def thermal_state(space: HilbertSpace, params: ThermalParams, hamiltonian=None) -> DensityMatrix:
    """Gibbs state exp(-H/T)/Z.

    Without an explicit ``hamiltonian`` the mode/atom energy operator of the
    space is used (omega a^dag a, or omega S_z for spins).
    """
    if not params.temperature > 0:
        raise ValueError("temperature must be > 0")
    h = default_hamiltonian(space, params.frequency) if hamiltonian is None else np.asarray(hamiltonian)
    lam, vec = np.linalg.eigh(0.5 * (h + h.conj().T))
    w = np.exp(-(lam - lam[0]) / params.temperature)
    w /= w.sum()
    return DensityMatrix(space, (vec * w) @ vec.conj().T)


def rotation_operator(space: HilbertSpace, params: RotationParams) -> np.ndarray:
    s_plus, s_minus, _ = spin_ops(space)
    z = params.zeta
    r = expm_antihermitian(z * s_plus - np.conj(z) * s_minus)
    unitarity = np.max(np.abs(r @ r.conj().T - np.eye(space.dim)))
    if unitarity > 1e-10:
        raise ArithmeticError(f"rotation not unitary to 1e-10 (deviation {unitarity:.2e})")
    return r


def rotate_cluster(rho_prime: DensityMatrix, params: RotationParams) -> DensityMatrix:
    """R rho R^dag with R = exp(zeta S+ - zeta* S-).

    With phi = -pi/2, varphi = 0 a ground-state cluster lands on the equator
    with <S-> = -N/2 (real, negative); only |<S->| is physical.
    """
    if not rho_prime.space.is_spin:
        raise RepresentationError("rotate_cluster needs a spin space")
    r = rotation_operator(rho_prime.space, params)
    return DensityMatrix(rho_prime.space, r @ rho_prime.data @ r.conj().T,
                         rho_prime.truncation_warning)


def displacement_operator(space: HilbertSpace, alpha: complex) -> np.ndarray:
    a, a_dag, _ = make_boson_ops(space)
    return expm_antihermitian(alpha * a_dag - np.conj(alpha) * a)


def bose_occupation(temperature: float, frequency: float = 1.0) -> float:
    x = frequency / temperature
    return math.exp(-x) / -math.expm1(-x)  # no overflow as T -> 0


def displaced_thermal_state(space: HilbertSpace, params: ThermalParams, alpha: complex) -> DensityMatrix:
    """Thermal coherent state D(alpha) rho_th D(alpha)^dag on a truncated mode.

    ``truncation_warning`` is set when |alpha|^2 + <n>_th exceeds n_max/3.
    """
    if space.kind != FOCK:
        raise RepresentationError("displaced_thermal_state needs a Fock space")
    rho_th = thermal_state(space, params)
    d = displacement_operator(space, alpha)
    load = abs(alpha) ** 2 + bose_occupation(params.temperature, params.frequency)
    flag = load > space.size / 3
    if flag:
        warnings.warn(f"|alpha|^2 + <n>_th = {load:.3g} exceeds n_max/3 = {space.size / 3:.3g}",
                      RuntimeWarning, stacklevel=2)
    return DensityMatrix(space, d @ rho_th.data @ d.conj().T, flag)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    lam, vec = np.linalg.eigh(0.5 * (m + m.conj().T))
    return (vec * np.sqrt(np.clip(lam, 0.0, None))) @ vec.conj().T


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.

    Evaluated as the squared trace norm of sqrt(rho) sqrt(sigma): square
    roots of roundoff-level eigenvalues then enter as products of two small
    factors instead of being amplified by a final square root.
    """
    r = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=np.complex128)
    s = sigma.data if isinstance(sigma, DensityMatrix) else np.asarray(sigma, dtype=np.complex128)
    if r.shape != s.shape:
        raise RepresentationError(f"shape mismatch {r.shape} vs {s.shape}")
    for name, m in (("rho", r), ("sigma", s)):
        lam = np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0]
        if lam < POSITIVITY_TOL:
            raise InvalidStateError(f"{name} has negative eigenvalue {lam:.3e}")
    sv = np.linalg.svd(_psd_sqrt(r) @ _psd_sqrt(s), compute_uv=False)
    f = float(np.sum(sv) ** 2)
    return min(max(f, 0.0), 1.0)
