import numpy as np
import pytest

from src.beam_transport import (
    NO_TRANSITION_THRESHOLD, PotentialTable, _side_width, channel_width, cp_potential, polarizability, run_experiment,
    survival_fraction, trajectory,
)
from src.cavity_model import AU, BeamConfig, CavitySetup, ConstantReflection, DomainError, MaterialKind, Mirror
from src.constants import C, HBAR

BEAM = BeamConfig()
DRUDE = CavitySetup.symmetric(2e-6, 300.0, AU)
IDEAL = DRUDE.with_reflection(-1.0, 1.0)


@pytest.fixture(scope="module")
def ideal_table():
    return PotentialTable(IDEAL, BEAM)


def _single_wall(a, T):
    wall = Mirror(material=AU, constant_reflection=ConstantReflection(r_s_re=-1.0, r_p_re=1.0))
    vacuum = Mirror(material=AU, constant_reflection=ConstantReflection())
    return CavitySetup(a_m=a, T_K=T, mirror1=wall, mirror2=vacuum)


def test_polarizability_static_and_decreasing():
    assert polarizability(BEAM, 0.0) == BEAM.alpha0_m3
    xi = np.geomspace(1e12, 1e18, 10)
    assert np.all(np.diff(polarizability(BEAM, xi)) < 0)
    assert polarizability(BEAM, BEAM.omega0_rad_s) == pytest.approx(0.5 * BEAM.alpha0_m3)


def test_beam_transit_time():
    assert BEAM.tau_s == pytest.approx(5e-4)


def test_potential_is_attractive_and_symmetric():
    left = cp_potential(DRUDE, 0.5e-6, BEAM)
    right = cp_potential(DRUDE, 1.5e-6, BEAM)
    assert left < 0
    assert right == pytest.approx(left, rel=1e-12)
    assert cp_potential(DRUDE, 0.1e-6, BEAM) < left


def test_potential_vanishes_without_reflection():
    assert cp_potential(DRUDE.with_reflection(0.0, 0.0), 1e-6, BEAM) == 0.0


def test_single_ideal_wall_retarded_limit():
    z = 1e-6
    potential = cp_potential(_single_wall(100e-6, 10.0), z, BEAM)
    expected = -3.0 * HBAR * C * BEAM.alpha0_m3 / (8.0 * np.pi * z ** 4)
    assert potential == pytest.approx(expected, rel=0.1)


@pytest.mark.parametrize("z", [0.0, 2e-6, 5e-6])
def test_potential_rejects_points_outside_gap(z):
    with pytest.raises(DomainError):
        cp_potential(DRUDE, z, BEAM)


def test_potential_table_is_mirrored(ideal_table):
    table = ideal_table
    assert table.lower == pytest.approx(BEAM.capture_distance_m)
    assert table.upper == pytest.approx(IDEAL.a_m - BEAM.capture_distance_m)
    np.testing.assert_allclose(table.values, table.values[::-1], rtol=1e-12)
    assert abs(float(table.force(IDEAL.a_m / 2))) < 1e-6 * abs(float(table.force(0.2e-6)))
    assert float(table.force(0.2e-6)) < 0


def test_coarse_table_interpolates_between_nodes():
    table = PotentialTable(IDEAL, BEAM, points_per_side=12)
    d = np.geomspace(BEAM.capture_distance_m, IDEAL.a_m / 2, 12)
    for z in np.sqrt(d[1:-2] * d[2:-1]):
        assert float(table.potential(z)) == pytest.approx(cp_potential(IDEAL, float(z), BEAM), rel=1e-3)


def test_potential_table_rejects_oversized_capture():
    beam = BeamConfig(capture_distance_m=1.5e-6)
    with pytest.raises(DomainError):
        PotentialTable(IDEAL, beam, points_per_side=4)


def test_trajectory_conserves_energy(ideal_table):
    path = trajectory(ideal_table, BEAM, IDEAL.a_m / 2 + 0.01e-6)
    assert not path.hit_wall
    assert path.t[-1] == pytest.approx(BEAM.tau_s)
    assert path.energy_drift < 1e-6


def test_trajectory_near_wall_is_captured(ideal_table):
    table = ideal_table
    path = trajectory(table, BEAM, table.lower + 20e-9)
    assert path.hit_wall
    assert path.t[-1] < BEAM.tau_s
    with pytest.raises(DomainError):
        trajectory(table, BEAM, 1e-9)


@pytest.mark.slow
def test_fast_atoms_use_whole_gap(ideal_table):
    fast = BeamConfig(v_m_s=1e6)
    assert channel_width(IDEAL, fast, ideal_table) > 0.9 * IDEAL.a_m


@pytest.mark.slow
def test_channel_width_monotone_in_velocity(ideal_table):
    widths = [channel_width(IDEAL, BeamConfig(v_m_s=v), ideal_table) for v in (10.0, 20.0, 40.0)]
    assert widths[0] <= widths[1] <= widths[2]
    assert widths[0] < widths[2]


@pytest.mark.slow
def test_gold_channel_width():
    width = channel_width(DRUDE, BEAM)
    assert 100e-9 / 3 <= width <= 300e-9
    fraction = width / DRUDE.a_m
    assert 0.02 <= fraction <= 0.10


@pytest.mark.slow
def test_survival_fraction_grows_with_velocity():
    table = PotentialTable(DRUDE, BEAM)
    slow = survival_fraction(DRUDE, BEAM, table)
    fast = survival_fraction(DRUDE, BeamConfig(v_m_s=40.0), table)
    assert fast > slow


@pytest.mark.slow
def test_gold_exit_populations():
    report = run_experiment(DRUDE, BEAM, 10.0, np.pi / 2, (1.5, -0.5))
    expected = {
        "(1/2,1/2)": 0.0057, "(1/2,-1/2)": 0.0107, "(3/2,-3/2)": 0.0157,
        "(3/2,-1/2)": 0.949, "(3/2,1/2)": 0.0184, "(3/2,3/2)": 0.0002,
    }
    for label, value in expected.items():
        assert report.populations[label] == pytest.approx(value, rel=0.3)
    assert sum(report.populations.values()) == pytest.approx(1.0, abs=1e-10)
    assert report.transition_probability == pytest.approx(0.05, rel=0.3)
    assert not report.no_measurable_transitions
    assert len(report.rate_matrix["total_s-1"]) == 6


@pytest.mark.slow
def test_plasma_mirrors_show_no_transitions():
    report = run_experiment(DRUDE.with_kind(MaterialKind.PLASMA), BEAM, 10.0, np.pi / 2, (1.5, -0.5))
    assert report.transition_probability < NO_TRANSITION_THRESHOLD
    assert report.no_measurable_transitions


@pytest.mark.slow
def test_transverse_drift_breaks_mirror_symmetry(ideal_table):
    drifting = BeamConfig(v_transverse_m_s=2e-5)
    upper = _side_width(ideal_table, drifting, +1.0, 0.5e-9)
    lower = _side_width(ideal_table, drifting, -1.0, 0.5e-9)
    assert lower > upper > 0
    assert channel_width(IDEAL, drifting, ideal_table) == pytest.approx(upper + lower)


@pytest.mark.slow
def test_longer_mirrors_narrow_the_channel(ideal_table):
    short = channel_width(IDEAL, BEAM, ideal_table)
    long = channel_width(IDEAL, BeamConfig(L_m=2 * BEAM.L_m), ideal_table)
    assert long < short
