import numpy as np
import pytest

from src.cavity_model import (
    AU, ATOM_PRESETS, CavitySetup, DipoleMatrices, DomainError, GreenCoefficients, IntegrationError, MaterialKind,
    PopulationVector, QuadratureSpec, RateMatrix,
)
from src.constants import C, EV, HBAR, K_B, MU_B_CGS, MU_N_CGS
from src.hyperfine_atom import (
    breit_rabi_energies, cavity_rate, cavity_rates_vs_B, cavity_rates_vs_theta, diagonalize, dipole_matrices, evolve,
    free_rate, gibbs_populations, total_rate_of, total_rates, transition_frequencies, transition_frequency,
    _resolved_trace,
)

DEUTERIUM = ATOM_PRESETS["D"]
W0 = DEUTERIUM.w0_ev * EV
DRUDE = CavitySetup.symmetric(2e-6, 300.0, AU)


def _field_for(x):
    atom = DEUTERIUM
    return x * atom.w0_ev * EV * 1e7 / (atom.g_electron * MU_B_CGS + atom.g_nuclear * MU_N_CGS)


def test_zero_field_splitting():
    system = diagonalize(0.0)
    upper = [system.energies_J[system.index_of(1.5, m)] for m in (-1.5, -0.5, 0.5, 1.5)]
    lower = [system.energies_J[system.index_of(0.5, m)] for m in (-0.5, 0.5)]
    np.testing.assert_allclose(upper, upper[0], rtol=1e-12)
    np.testing.assert_allclose(lower, lower[0], rtol=1e-12)
    assert upper[0] - lower[0] == pytest.approx(W0, rel=1e-12)
    assert W0 / (2 * np.pi * HBAR) == pytest.approx(327e6, rel=1e-2)


@pytest.mark.parametrize("x", [0.0, 0.05, 0.3, 1.0, 2.5, 4.0])
def test_breit_rabi_agreement(x):
    B = _field_for(x)
    system = diagonalize(B)
    np.testing.assert_allclose(system.energies_J, breit_rabi_energies(B), rtol=0, atol=1e-10 * W0)


def test_labels_follow_adiabatic_continuation():
    system = diagonalize(_field_for(3.0))
    assert system.labels == [(0.5, -0.5), (0.5, 0.5), (1.5, -1.5), (1.5, -0.5), (1.5, 0.5), (1.5, 1.5)]
    assert system.label_strings()[3] == "(3/2,-1/2)"
    with pytest.raises(DomainError):
        system.index_of(2.5, 0.5)


@pytest.mark.parametrize("B", [0.0, 10.0, 500.0])
def test_eigenvectors_are_unitary_and_block_diagonal(B):
    system = diagonalize(B)
    V = system.eigenvectors
    np.testing.assert_allclose(V.conj().T @ V, np.eye(system.size), atol=1e-12)
    m_basis = np.array([a + b for a, b in system.basis])
    for k, (_, m) in enumerate(system.labels):
        assert np.all(V[~np.isclose(m_basis, m), k] == 0)


def test_negative_field_rejected():
    with pytest.raises(DomainError):
        diagonalize(-1.0)


@pytest.mark.parametrize("B", [0.0, 10.0, 300.0])
def test_dipole_matrices_are_hermitian(B):
    dipoles = dipole_matrices(diagonalize(B))
    for mat in (dipoles.mu_x, dipoles.mu_y, dipoles.mu_zeta):
        np.testing.assert_allclose(mat, mat.conj().T, rtol=0, atol=1e-12 * MU_B_CGS)


def test_stretched_state_moment():
    system = diagonalize(25.0)
    i = system.index_of(1.5, 1.5)
    mu = dipole_matrices(system).mu_zeta[i, i].real
    expected = DEUTERIUM.g_nuclear * MU_N_CGS - DEUTERIUM.g_electron * MU_B_CGS / 2
    assert mu == pytest.approx(expected, rel=1e-12)


def test_transverse_moments_change_m_by_one():
    system = diagonalize(20.0)
    dipoles = dipole_matrices(system)
    for f, (_, mf) in enumerate(system.labels):
        for i, (_, mi) in enumerate(system.labels):
            if abs(dipoles.mu_x[f, i]) > 0:
                assert abs(mf - mi) == pytest.approx(1.0)
            if abs(dipoles.mu_zeta[f, i]) > 0:
                assert mf == mi


def test_transition_frequencies_at_zero_field():
    system = diagonalize(0.0)
    transitions = transition_frequencies(system)
    assert len(transitions) == 15
    w0 = W0 / HBAR
    for tr in transitions:
        assert min(abs(tr.omega_rad_s), abs(abs(tr.omega_rad_s) - w0)) < 1e-6 * w0


def test_transition_frequency_antisymmetric():
    system = diagonalize(40.0)
    assert transition_frequency(system, 1, 4) == -transition_frequency(system, 4, 1)


@pytest.mark.parametrize("B", [10.0, 100.0, 1000.0])
def test_allowed_transitions_in_radio_band(B):
    system = diagonalize(B)
    dipoles = dipole_matrices(system)
    strength = np.abs(dipoles.mu_x) ** 2 + np.abs(dipoles.mu_y) ** 2 + np.abs(dipoles.mu_zeta) ** 2
    for i in range(system.size):
        for f in range(system.size):
            if i != f and strength[f, i] > 0:
                assert 1e7 <= abs(transition_frequency(system, i, f)) <= 1e11


def test_free_rate_of_stretched_state():
    rates = free_rate(diagonalize(10.0, np.pi / 2), 300.0)
    assert total_rate_of(rates, 1.5, 1.5) == pytest.approx(1.1e-12, rel=0.5)
    assert rates.context == "free"


def test_free_rate_is_rotation_invariant():
    a = free_rate(diagonalize(10.0, 0.0), 300.0)
    b = free_rate(diagonalize(10.0, 1.1), 300.0)
    np.testing.assert_allclose(a.gamma, b.gamma, rtol=1e-10, atol=0)


@pytest.mark.parametrize("B", [1.0, 10.0, 100.0, 400.0, 1000.0])
def test_detailed_balance(B):
    T = 0.05
    system = diagonalize(B, 0.4)
    gamma = free_rate(system, T).gamma
    E = system.energies_J
    for i in range(system.size):
        for f in range(system.size):
            if i != f and gamma[f, i] > 0 and gamma[i, f] > 0:
                assert gamma[f, i] / gamma[i, f] == pytest.approx(np.exp((E[i] - E[f]) / (K_B * T)), rel=1e-6)


def test_zero_dipoles_give_zero_rates():
    system = diagonalize(10.0)
    zero = np.zeros((system.size, system.size), dtype=complex)
    dipoles = DipoleMatrices(mu_x=zero, mu_y=zero, mu_zeta=zero)
    assert np.all(free_rate(system, 300.0, dipoles).gamma == 0)
    assert np.all(cavity_rate(system, DRUDE, 1e-6, dipoles=dipoles).gamma == 0)


def test_free_rate_rejects_non_positive_temperature():
    with pytest.raises(DomainError):
        free_rate(diagonalize(10.0), 0.0)


def test_cavity_rate_rejects_point_outside_gap():
    with pytest.raises(DomainError):
        cavity_rate(diagonalize(10.0), DRUDE, 2e-6)


def test_cavity_without_reflection_matches_free_rate():
    setup = DRUDE.with_reflection(0.0, 0.0)
    fields = [10.0, 200.0]
    for B, rates in zip(fields, cavity_rates_vs_B(setup, 1e-6, fields, 0.7)):
        free = free_rate(diagonalize(B, 0.7), setup.T_K)
        np.testing.assert_allclose(rates.gamma, free.gamma, rtol=1e-8, atol=1e-10 * free.gamma.max())


def test_cavity_rates_periodic_in_theta():
    setup = DRUDE.with_reflection(0.5, 0.5)
    first, second = cavity_rates_vs_theta(setup, 1e-6, 10.0, [0.3, 0.3 + np.pi])
    np.testing.assert_allclose(first.gamma, second.gamma, rtol=1e-10, atol=0)
    assert first.context.startswith("cavity(")


def test_evolve_identity_cases():
    system = diagonalize(10.0)
    p0 = PopulationVector.pure(system.labels, 1.5, -0.5)
    rates = free_rate(system, 300.0)
    assert np.array_equal(evolve(rates, p0, 0.0).p, p0.p)
    silent = RateMatrix(gamma=np.zeros((6, 6)), labels=system.labels)
    np.testing.assert_allclose(evolve(silent, p0, 1e3).p, p0.p)
    with pytest.raises(DomainError):
        evolve(rates, p0, -1.0)


def test_evolve_conserves_probability_and_reaches_gibbs():
    T = 0.02
    system = diagonalize(100.0)
    E = system.energies_J
    rng = np.random.default_rng(3)
    s = rng.uniform(1.0, 2.0, (6, 6))
    s = 0.5 * (s + s.T)
    gamma = s * np.exp(-(E[:, None] - E[None, :]) / (2 * K_B * T))
    np.fill_diagonal(gamma, 0.0)
    rates = RateMatrix(gamma=gamma, labels=system.labels)
    p0 = PopulationVector.pure(system.labels, 1.5, 1.5)
    short = evolve(rates, p0, 0.1)
    assert short.p.sum() == pytest.approx(1.0, abs=1e-10)
    assert np.all((short.p >= -1e-12) & (short.p <= 1))
    late = evolve(rates, p0, 200.0)
    np.testing.assert_allclose(late.p, gibbs_populations(system, T).p, atol=1e-8)


def test_evolve_rejects_negative_rates():
    system = diagonalize(10.0)
    gamma = np.zeros((6, 6))
    gamma[0, 3] = -1.0
    rates = RateMatrix(gamma=gamma, labels=system.labels)
    with pytest.raises(DomainError):
        evolve(rates, PopulationVector.pure(system.labels, 1.5, -0.5), 1.0)


def test_evolve_keeps_populations_unclipped():
    system = diagonalize(10.0)
    i, f = system.index_of(1.5, -0.5), system.index_of(0.5, 0.5)
    gamma = np.zeros((6, 6))
    gamma[f, i] = 2.0
    rates = RateMatrix(gamma=gamma, labels=system.labels)
    p = evolve(rates, PopulationVector.pure(system.labels, 1.5, -0.5), 0.5).p
    assert p[i] == pytest.approx(np.exp(-1.0), rel=1e-12)
    assert p[f] == pytest.approx(1.0 - np.exp(-1.0), rel=1e-12)


def test_total_rates_sum_columns():
    rates = free_rate(diagonalize(10.0), 300.0)
    np.testing.assert_allclose(total_rates(rates), rates.gamma.sum(axis=0))
    with pytest.raises(DomainError):
        total_rate_of(rates, 2.5, 0.5)


def test_population_vector_validation():
    with pytest.raises(ValueError):
        PopulationVector(p=np.array([0.7, 0.7]), labels=[(0.5, -0.5), (0.5, 0.5)])
    assert PopulationVector.pure([(0.5, -0.5), (0.5, 0.5)], 0.5, 0.5).as_dict() == {"(1/2,-1/2)": 0.0, "(1/2,1/2)": 1.0}


def test_population_sum_tolerance():
    labels = [(0.5, -0.5), (0.5, 0.5)]
    assert PopulationVector(p=np.array([0.5, 0.5 + 1e-12]), labels=labels).p.sum() > 1.0
    with pytest.raises(ValueError):
        PopulationVector(p=np.array([0.5, 0.5 + 1e-9]), labels=labels)


@pytest.mark.slow
def test_drude_rates_dominated_by_initial_state():
    system = diagonalize(10.0, np.pi / 2)
    totals = total_rates(cavity_rate(system, DRUDE, 1e-6))
    assert system.labels[int(np.argmax(totals))] == (1.5, -0.5)


@pytest.mark.slow
def test_drude_rate_exceeds_plasma_by_orders_of_magnitude():
    system = diagonalize(10.0, np.pi / 2)
    drude = total_rate_of(cavity_rate(system, DRUDE, 1e-6), 1.5, -0.5)
    plasma = total_rate_of(cavity_rate(system, DRUDE.with_kind(MaterialKind.PLASMA), 1e-6), 1.5, -0.5)
    assert plasma < 1e-12
    assert drude > 1e13 * plasma
    assert drude > 1.0


def _coefficients(h_perp_sc, h_par_sc, error):
    omega = 1e9
    free = 2.0 * (omega / C) ** 3 / 3.0
    return GreenCoefficients(omega_rad_s=omega, z_m=1e-6, e_perp_sc=0.0, e_par_sc=0.0,
                             h_perp_sc=h_perp_sc * free, h_par_sc=h_par_sc * free,
                             errors={"h_perp": error * free, "h_par": error * free}), free


def test_resolved_trace_keeps_positive_values():
    coeffs, free = _coefficients(-0.25, 1.5, 1e-10)
    quad = QuadratureSpec()
    assert _resolved_trace(coeffs, "h_perp", quad) == pytest.approx(0.75 * free)
    assert _resolved_trace(coeffs, "h_par", quad) == pytest.approx(2.5 * free)


def test_resolved_trace_zeroes_cancellation_noise():
    coeffs, _ = _coefficients(-1.0 - 1e-13, -1.0 + 1e-13, 1e-12)
    quad = QuadratureSpec()
    assert _resolved_trace(coeffs, "h_perp", quad) == 0.0
    assert _resolved_trace(coeffs, "h_par", quad) > 0.0


def test_resolved_trace_rejects_negative_total():
    coeffs, _ = _coefficients(-2.0, 0.0, 1e-10)
    with pytest.raises(IntegrationError) as info:
        _resolved_trace(coeffs, "h_perp", QuadratureSpec())
    assert "h_perp" in str(info.value)


@pytest.mark.slow
def test_plasma_rates_are_non_negative_and_negligible():
    system = diagonalize(10.0, np.pi / 2)
    rates = cavity_rate(system, DRUDE.with_kind(MaterialKind.PLASMA), 1e-6)
    assert np.all(rates.gamma >= 0)
    assert total_rates(rates).max() < 1e-12


@pytest.mark.slow
def test_rate_flat_near_center_and_growing_toward_mirror():
    system = diagonalize(10.0, 0.0)
    center = total_rate_of(cavity_rate(system, DRUDE, 1e-6), 1.5, -0.5)
    for z0 in (0.95e-6, 1.05e-6):
        assert total_rate_of(cavity_rate(system, DRUDE, z0), 1.5, -0.5) == pytest.approx(center, rel=1e-2)
    assert total_rate_of(cavity_rate(system, DRUDE, 0.1e-6), 1.5, -0.5) > center


@pytest.mark.slow
def test_rates_agree_at_opposite_field_directions():
    parallel, antiparallel = cavity_rates_vs_theta(DRUDE, 1e-6, 10.0, [0.0, np.pi])
    scale = parallel.gamma.max()
    assert scale > 0
    np.testing.assert_allclose(parallel.gamma, antiparallel.gamma, rtol=1e-8, atol=1e-10 * scale)


@pytest.mark.slow
@pytest.mark.parametrize("theta", [0.0, np.pi / 2])
def test_largest_rate_for_every_field(theta):
    for rates in cavity_rates_vs_B(DRUDE, 1e-6, [10.0, 30.0], theta):
        assert rates.labels[int(np.argmax(total_rates(rates)))] == (1.5, -0.5)
