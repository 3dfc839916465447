import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.constants import hbar

from srotto.cost import (CostParams, dipole_moment_sq, pulse_energy, pulse_energy_joules,
                         pulse_energy_reduced, pulse_intensity, pulse_intensity_closed_form,
                         total_cost_report)

OMEGA = 2 * math.pi * 5e9
GAMMA = 1e4


def test_dipole_frozen_value():
    # 3 pi eps0 hbar c^3 gamma / omega^3, CODATA 2018, 30-digit arithmetic
    assert dipole_moment_sq(OMEGA, GAMMA) == pytest.approx(7.647306710919301e-47, rel=1e-12)


def test_dipole_linear_in_rate():
    assert dipole_moment_sq(OMEGA, 2 * GAMMA) == pytest.approx(2 * dipole_moment_sq(OMEGA, GAMMA))


def test_intensity_chain_matches_closed_form():
    p = CostParams.from_dimensionless(2.0, 0.5, OMEGA, GAMMA)
    chain = pulse_intensity(p)
    assert chain == pytest.approx(pulse_intensity_closed_form(OMEGA, p.tau_p, GAMMA), rel=1e-12)
    assert chain == pytest.approx(1.904947430890359e-16, rel=1e-12)


def test_intensity_cubic_in_frequency():
    tau = 5e-5
    ratio = pulse_intensity_closed_form(2 * OMEGA, tau, GAMMA) / pulse_intensity_closed_form(OMEGA, tau, GAMMA)
    assert ratio == pytest.approx(8.0)
    p1 = CostParams(OMEGA, GAMMA, tau, 1.0)
    p2 = CostParams(2 * OMEGA, GAMMA, tau, 1.0)
    assert pulse_intensity(p2) / pulse_intensity(p1) == pytest.approx(8.0)


def test_reference_pulse_energy():
    p = CostParams.from_dimensionless(2.0, 0.5, OMEGA, GAMMA)
    assert p.divergence == pytest.approx(0.5) and p.inv_tau_gamma == pytest.approx(2.0)
    assert pulse_energy(p) == pytest.approx(math.pi ** 2 / 3, rel=1e-12)
    assert pulse_energy_joules(p) == pytest.approx(1.0899448512382836e-23, rel=1e-9)
    assert pulse_energy_joules(p) == pytest.approx(pulse_energy(p) * hbar * OMEGA, rel=1e-9)


def test_pulse_energy_limits():
    assert pulse_energy_reduced(0.0, 0.5) == 0.0
    assert pulse_energy_reduced(2.0, 0.25) == pytest.approx(4 * pulse_energy_reduced(2.0, 0.5))


def test_params_validation():
    with pytest.raises(ValueError):
        CostParams(OMEGA, GAMMA, -1.0, 0.1)
    with pytest.raises(ValueError, match="divergence"):
        CostParams.from_dimensionless(2.0, 1.5, OMEGA, GAMMA)


def test_total_cost_reference():
    p = CostParams.from_dimensionless(2.0, 0.5, OMEGA, GAMMA)
    rep = total_cost_report(p, 2, 250, 0.35, pulse_energy_hbar_omega=3.0)
    assert rep.total == 1500.0
    assert rep.per_cluster == 6.0
    assert rep.ratio == pytest.approx(1500 / 0.35)
    assert rep.ratio > 1e3
    assert "1500" in rep.table()


def test_total_cost_edge_cases():
    p = CostParams.from_dimensionless(2.0, 0.5, OMEGA, GAMMA)
    assert total_cost_report(p, 2, 0, 0.3).total == 0
    rep = total_cost_report(p, 2, 10, 0.0)
    assert not rep.ratio_defined and rep.to_dict()["cost_to_work_ratio"] is None
    with pytest.raises(ValueError):
        total_cost_report(p, 0, 10, 0.3)


def test_report_units_in_keys():
    p = CostParams.from_dimensionless(2.0, 0.5, OMEGA, GAMMA)
    keys = total_cost_report(p, 3, 5, 1.0).to_dict()
    assert "total_cost_in_hbar_omega" in keys and "pulse_energy_in_joules" in keys


@settings(max_examples=50, deadline=None)
@given(x=st.floats(0.01, 100), div=st.floats(0.01, 1.0), s=st.floats(0.1, 10.0))
def test_pulse_energy_homogeneity(x, div, s):
    # degree -1 in tau*gamma (linear in 1/(tau gamma)), degree -2 in divergence
    assert pulse_energy_reduced(s * x, div) == pytest.approx(s * pulse_energy_reduced(x, div), rel=1e-12)
    if s * div <= 1:
        assert pulse_energy_reduced(x, s * div) == pytest.approx(pulse_energy_reduced(x, div) / s ** 2, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 10), m=st.integers(0, 1000), u=st.floats(0.1, 10))
def test_total_is_exact_product(n, m, u):
    p = CostParams.from_dimensionless(2.0, 0.5, OMEGA, GAMMA)
    rep = total_cost_report(p, n, m, 1.0, pulse_energy_hbar_omega=u)
    assert rep.total == m * (n * u)
