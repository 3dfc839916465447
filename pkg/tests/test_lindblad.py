import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from srotto import _kernels
from srotto.errors import IntegrityError, RepresentationError
from srotto.hilbert import (DensityMatrix, HilbertSpace, ThermalParams, displaced_thermal_state,
                            make_boson_ops, make_collective_spin_ops, thermal_state)
from srotto.lindblad import (COLLECTIVE_DEPHASING, COLLECTIVE_LOWERING, DICKE,
                             INDIVIDUAL_DEPHASING, INDIVIDUAL_LOWERING, DissipatorSpec,
                             IntegratorConfig, LindbladGenerator, SystemModel, _sanitize,
                             build_hamiltonian, collapse_operators, evolve, evolve_free_field,
                             exact_frame, lindblad_rhs, system_space)

from conftest import random_density

BACKENDS = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])


def lindblad_reference(h, cops, rho):
    out = -1j * (h @ rho - rho @ h)
    for c in cops:
        cd = c.conj().T
        out += c @ rho @ cd - 0.5 * (cd @ c @ rho + rho @ cd @ c)
    return out


def _tc_space(n, n_max):
    return system_space(HilbertSpace.collective(n), n_max)


# -- Hamiltonians -----------------------------------------------------------

def test_uncoupled_spectrum():
    space = _tc_space(2, 3)
    h = build_hamiltonian(SystemModel(g=0.0, omega_f=1.0, omega_a=0.7), space)
    expected = sorted(k + 0.7 * m for m in (-1, 0, 1) for k in range(4))
    assert np.allclose(np.linalg.eigvalsh(h), expected)


def test_jaynes_cummings_doublet():
    g = 0.19
    h = build_hamiltonian(SystemModel(g=g), _tc_space(1, 4))
    # one-excitation manifold: |e,0> (index 4+... ) and |g,1>
    # basis index = atom * 5 + n ; |g,1> = 1, |e,0> = 5
    block = h[np.ix_([1, 5], [1, 5])]
    lam = np.linalg.eigvalsh(block)
    assert lam[1] - lam[0] == pytest.approx(2 * g, abs=1e-12)


@pytest.mark.parametrize("kind", ["tavis-cummings", "dicke"])
def test_hamiltonian_hermitian(kind):
    h = build_hamiltonian(SystemModel(hamiltonian_kind=kind), _tc_space(3, 6))
    assert np.max(np.abs(h - h.conj().T)) <= 1e-12


def test_excitation_number_conservation():
    n_atoms, n_max = 2, 4
    space = _tc_space(n_atoms, n_max)
    sz = make_collective_spin_ops(HilbertSpace.collective(n_atoms))[2]
    n = make_boson_ops(HilbertSpace.fock(n_max))[2]
    exc = np.kron(np.eye(3), n) + np.kron(sz, np.eye(n_max + 1)) + n_atoms / 2 * np.eye(space.dim)
    h_tc = build_hamiltonian(SystemModel(), space)
    h_d = build_hamiltonian(SystemModel(hamiltonian_kind=DICKE), space)
    assert np.linalg.norm(h_tc @ exc - exc @ h_tc) < 1e-12
    assert np.linalg.norm(h_d @ exc - exc @ h_d) > 0.1


def test_dicke_and_tc_agree_without_coupling():
    space = _tc_space(2, 5)
    h_tc = build_hamiltonian(SystemModel(g=0.0), space)
    h_d = build_hamiltonian(SystemModel(g=0.0, hamiltonian_kind=DICKE), space)
    assert np.array_equal(h_tc, h_d)


def test_hamiltonian_needs_composite():
    with pytest.raises(RepresentationError):
        build_hamiltonian(SystemModel(), HilbertSpace.fock(3))
    bad = HilbertSpace.composite(HilbertSpace.fock(2), HilbertSpace.collective(1))
    with pytest.raises(RepresentationError):
        build_hamiltonian(SystemModel(), bad)


def test_model_validation():
    with pytest.raises(ValueError):
        SystemModel(g=-0.1)
    with pytest.raises(ValueError):
        SystemModel(hamiltonian_kind="rabi")
    with pytest.raises(ValueError):
        DissipatorSpec("collective-lowering", -1.0)


# -- dissipators ------------------------------------------------------------

def test_individual_channel_needs_product_space():
    model = SystemModel(atomic_dissipators=(DissipatorSpec(INDIVIDUAL_LOWERING, 0.1),))
    assert model.needs_product_space
    with pytest.raises(RepresentationError):
        collapse_operators(model, _tc_space(2, 3))
    ops = collapse_operators(model, system_space(HilbertSpace.product(2), 3))
    assert len(ops) == 3  # cavity + two atoms


def test_collective_channel_operators():
    model = SystemModel(kappa=0.03, atomic_dissipators=(
        DissipatorSpec(COLLECTIVE_LOWERING, 0.04), DissipatorSpec(COLLECTIVE_DEPHASING, 0.0)))
    ops = collapse_operators(model, _tc_space(2, 3))
    sm = make_collective_spin_ops(HilbertSpace.collective(2))[1]
    assert len(ops) == 2
    assert np.allclose(ops[1], 0.2 * np.kron(sm, np.eye(4)))


# -- right-hand side ---------------------------------------------------------

@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("kind", ["tavis-cummings", "dicke"])
def test_rhs_matches_reference(backend, kind, rng):
    model = SystemModel(hamiltonian_kind=kind, atomic_dissipators=(
        DissipatorSpec(COLLECTIVE_DEPHASING, 0.05), DissipatorSpec(COLLECTIVE_LOWERING, 0.02)))
    space = _tc_space(3, 6)
    h = build_hamiltonian(model, space)
    cops = collapse_operators(model, space)
    rho = random_density(space.dim, rng)
    ref = lindblad_reference(h, cops, rho)
    gen = LindbladGenerator(h, cops, backend=backend, frame=None)
    assert np.allclose(gen(rho), ref, atol=1e-13)
    assert np.allclose(gen(rho, hermitian=True), ref, atol=1e-13)


@pytest.mark.parametrize("backend", BACKENDS)
def test_rhs_product_space_individual(backend, rng):
    model = SystemModel(atomic_dissipators=(DissipatorSpec(INDIVIDUAL_DEPHASING, 0.05),
                                            DissipatorSpec(INDIVIDUAL_LOWERING, 0.03)))
    space = system_space(HilbertSpace.product(2), 4)
    h = build_hamiltonian(model, space)
    cops = collapse_operators(model, space)
    rho = random_density(space.dim, rng)
    gen = LindbladGenerator(h, cops, backend=backend, frame=None)
    assert np.allclose(gen(rho, hermitian=True), lindblad_reference(h, cops, rho), atol=1e-13)


def test_rhs_trace_and_hermiticity(rng):
    model = SystemModel(atomic_dissipators=(DissipatorSpec(COLLECTIVE_LOWERING, 0.1),))
    space = _tc_space(2, 5)
    rho = DensityMatrix(space, random_density(space.dim, rng))
    d = lindblad_rhs(model, build_hamiltonian(model, space), rho)
    assert abs(np.trace(d)) < 1e-12
    assert np.allclose(d, d.conj().T, atol=1e-14)


def test_single_photon_decay_rate():
    model = SystemModel(kappa=0.03)
    space = HilbertSpace.fock(4)
    rho = np.zeros((5, 5), dtype=complex)
    rho[1, 1] = 1
    n = make_boson_ops(space)[2]
    d = lindblad_rhs(model, np.zeros((5, 5)), DensityMatrix(space, rho))
    assert np.trace(d @ n).real == pytest.approx(-0.03, abs=1e-15)


# -- rotating frame ----------------------------------------------------------

def test_exact_frame_detection():
    space = _tc_space(2, 5)
    m = SystemModel()
    assert exact_frame(build_hamiltonian(m, space), collapse_operators(m, space)) is not None
    md = SystemModel(hamiltonian_kind=DICKE)
    assert exact_frame(build_hamiltonian(md, space), collapse_operators(md, space)) is None


def test_frame_and_lab_give_same_state():
    model = SystemModel()
    space = _tc_space(2, 12)
    h = build_hamiltonian(model, space)
    cops = collapse_operators(model, space)
    psi = np.zeros(space.dim, dtype=complex)
    psi[0] = psi[space.dim - 1] = 1 / math.sqrt(2)
    rho = DensityMatrix(space, np.outer(psi, psi.conj()))
    cfg = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12)
    lab = evolve(model, h, rho, 2.0, cfg, generator=LindbladGenerator(h, cops, frame=None))
    rot = evolve(model, h, rho, 2.0, cfg, generator=LindbladGenerator(h, cops))
    assert np.allclose(lab.state.data, rot.state.data, atol=1e-8)


# -- evolution oracles --------------------------------------------------------

def test_zero_duration_returns_input(rng):
    space = _tc_space(1, 3)
    rho = DensityMatrix(space, random_density(space.dim, rng))
    model = SystemModel()
    ev = evolve(model, build_hamiltonian(model, space), rho, 0.0)
    assert np.allclose(ev.state.data, rho.data, atol=1e-15)


def test_negative_duration_rejected():
    space = HilbertSpace.fock(2)
    rho = thermal_state(space, ThermalParams(0.5))
    with pytest.raises(ValueError):
        evolve_free_field(SystemModel(), rho, -1.0)


def test_free_field_decay_oracle():
    model = SystemModel(kappa=0.03)
    space = HilbertSpace.fock(40)
    rho = displaced_thermal_state(space, ThermalParams(0.7), 0.8 + 0.3j)
    n = make_boson_ops(space)[2]
    n0 = rho.expect(n).real
    times = [1.0, 5.0, 20.0, 50.0]
    ev = evolve_free_field(model, rho, 50.0, sample_times=times)
    for t, st_ in zip(ev.sample_times, ev.samples):
        exact = n0 * math.exp(-0.03 * t)
        assert abs(st_.expect(n).real - exact) / exact < 1e-7


def test_free_field_first_moment_oracle():
    model = SystemModel(kappa=0.03)
    space = HilbertSpace.fock(30)
    alpha0 = 1.2 - 0.4j
    rho = displaced_thermal_state(space, ThermalParams(0.4), alpha0)
    a = make_boson_ops(space)[0]
    ev = evolve_free_field(model, rho, 7.3)
    exact = alpha0 * np.exp((-1j - 0.015) * 7.3)
    assert abs(ev.state.expect(a) - exact) < 1e-6


def test_free_field_thermal_stays_diagonal():
    model = SystemModel(kappa=0.03)
    rho = thermal_state(HilbertSpace.fock(20), ThermalParams(1.0))
    out = evolve_free_field(model, rho, 10.0).state
    off = out.data - np.diag(np.diag(out.data))
    assert np.max(np.abs(off)) < 1e-14
    assert out.populations[0] > rho.populations[0]


def test_long_decay_to_vacuum():
    model = SystemModel(kappa=0.03)
    space = HilbertSpace.fock(10)
    rho = np.zeros((11, 11), dtype=complex)
    rho[1, 1] = 1
    out = evolve_free_field(model, DensityMatrix(space, rho), 5 / 0.03).state
    assert out.expect(make_boson_ops(space)[2]).real == pytest.approx(math.exp(-5), rel=1e-6)


@pytest.mark.parametrize("backend", BACKENDS)
def test_vacuum_rabi_oracle(backend):
    g = 0.19
    model = SystemModel(g=g, kappa=0.0)
    space = _tc_space(1, 3)
    h = build_hamiltonian(model, space)
    psi = np.zeros(space.dim)
    psi[4] = 1.0  # |e, 0>
    rho = DensityMatrix(space, np.outer(psi, psi))
    times = list(np.linspace(0, 20, 41))
    gen = LindbladGenerator(h, collapse_operators(model, space), backend=backend)
    ev = evolve(model, h, rho, 20.0, sample_times=times, generator=gen)
    p_exc = np.kron(np.diag([0.0, 1.0]), np.eye(4))
    for t, st_ in zip(ev.sample_times, ev.samples):
        assert abs(st_.expect(p_exc).real - math.cos(g * t) ** 2) < 1e-6


def test_unitary_evolution_preserves_spectrum(rng):
    model = SystemModel(kappa=0.0, hamiltonian_kind=DICKE)
    space = _tc_space(2, 6)
    rho = DensityMatrix(space, random_density(space.dim, rng, rank=4))
    # error budget is set by the integrator tolerance; tighten it below 1e-8
    cfg = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12)
    out = evolve(model, build_hamiltonian(model, space), rho, 3.0, cfg).state
    assert np.allclose(np.linalg.eigvalsh(out.data), np.linalg.eigvalsh(rho.data), atol=1e-8)


def test_tolerance_halving_convergence():
    model = SystemModel()
    space = _tc_space(3, 20)
    h = build_hamiltonian(model, space)
    from srotto.hilbert import RotationParams, rotate_cluster, tensor
    cluster = rotate_cluster(thermal_state(HilbertSpace.collective(3), ThermalParams(0.001)),
                             RotationParams())
    rho = tensor(cluster, thermal_state(HilbertSpace.fock(20), ThermalParams(0.5)))
    n = np.kron(np.eye(4), make_boson_ops(HilbertSpace.fock(20))[2])
    coarse_tol = 1e-6
    coarse = evolve(model, h, rho, 6.0, IntegratorConfig(rel_tol=coarse_tol, abs_tol=1e-8, max_step=np.inf))
    fine = evolve(model, h, rho, 6.0, IntegratorConfig(rel_tol=coarse_tol / 2, abs_tol=5e-9, max_step=np.inf))
    assert abs(coarse.state.expect(n) - fine.state.expect(n)) < coarse_tol


def test_sanitize_flags_positivity_breach():
    space = HilbertSpace.fock(1)
    with pytest.raises(IntegrityError, match="positivity"):
        _sanitize(np.diag([1.2, -0.2]).astype(complex), 0.0, space)


def test_sanitize_renormalizes():
    space = HilbertSpace.fock(1)
    y = _sanitize(np.array([[0.6, 0.1j], [-0.1j, 0.5]]), 0.0, space)
    assert np.trace(y).real == pytest.approx(1.0)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2 ** 31), g=st.floats(0.0, 0.4), gamma=st.floats(0.0, 0.2),
       kind=st.sampled_from(["tavis-cummings", "dicke"]),
       channel=st.sampled_from([COLLECTIVE_LOWERING, COLLECTIVE_DEPHASING]))
def test_every_accepted_step_is_a_density_matrix(seed, g, gamma, kind, channel):
    rng = np.random.default_rng(seed)
    model = SystemModel(g=g, hamiltonian_kind=kind,
                        atomic_dissipators=(DissipatorSpec(channel, gamma),))
    space = _tc_space(2, 8)
    rho = DensityMatrix(space, random_density(space.dim, rng, rank=2))
    worst = {"trace": 0.0, "herm": 0.0, "eig": 0.0}

    def monitor(t, y):
        worst["trace"] = max(worst["trace"], abs(np.trace(y) - 1))
        worst["herm"] = max(worst["herm"], np.max(np.abs(y - y.conj().T)))
        worst["eig"] = min(worst["eig"], np.linalg.eigvalsh(y)[0])

    evolve(model, build_hamiltonian(model, space), rho, 2.0, monitor=monitor)
    assert worst["trace"] <= 1e-8
    assert worst["herm"] <= 1e-10
    assert worst["eig"] >= -1e-8


def test_backend_results_identical_within_tolerance():
    if "numba" not in BACKENDS:
        pytest.skip("numba unavailable")
    model = SystemModel()
    space = _tc_space(2, 10)
    h = build_hamiltonian(model, space)
    cops = collapse_operators(model, space)
    rho = DensityMatrix(space, random_density(space.dim, np.random.default_rng(3)))
    states = [evolve(model, h, rho, 1.0, generator=LindbladGenerator(h, cops, backend=b)).state
              for b in BACKENDS]
    assert np.allclose(states[0].data, states[1].data, atol=1e-12)


def test_generator_rejects_unknown_backend():
    with pytest.raises(ValueError):
        LindbladGenerator(np.eye(2), backend="cuda")
