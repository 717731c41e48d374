import numpy as np
import pytest

from src.cavity_model import IntegrationError
from src.quadrature import integrate


def test_sine_over_half_period():
    result = integrate(np.sin, [0.0, np.pi], rel_tol=1e-12)
    assert result.value[0] == pytest.approx(2.0, rel=1e-12)
    assert result.error[0] < 1e-10


def test_vector_integrand_components():
    result = integrate(lambda x: np.stack([x ** 2, np.exp(x)]), [0.0, 0.5, 1.0], rel_tol=1e-12)
    assert result.value[0] == pytest.approx(1.0 / 3.0, rel=1e-12)
    assert result.value[1] == pytest.approx(np.e - 1.0, rel=1e-12)
    assert result.panels >= 2


def test_breakpoints_are_never_evaluated():
    seen = []

    def func(x):
        seen.append(np.array(x))
        return 1.0 / np.sqrt(np.abs(x - 0.25))

    result = integrate(func, [0.0, 0.25, 1.0], rel_tol=1e-8, max_panels=10000)
    assert not np.any(np.concatenate(seen) == 0.25)
    assert result.value[0] == pytest.approx(2.0 * (np.sqrt(0.25) + np.sqrt(0.75)), rel=1e-6)


def test_peaked_integrand_needs_refinement():
    width = 1e-4
    result = integrate(lambda x: width / ((x - 0.3) ** 2 + width ** 2), [0.0, 1.0], rel_tol=1e-10)
    expected = np.arctan(0.7 / width) + np.arctan(0.3 / width)
    assert result.value[0] == pytest.approx(expected, rel=1e-9)
    assert result.panels > 10


def test_absolute_tolerance_covers_vanishing_integral():
    result = integrate(lambda x: np.stack([np.sin(2 * np.pi * x), np.ones_like(x)]), [0.0, 1.0],
                       rel_tol=1e-12, abs_tol=1e-12)
    assert abs(result.value[0]) < 1e-12
    assert result.value[1] == pytest.approx(1.0)


def test_subdivision_budget_exhausted():
    with pytest.raises(IntegrationError) as info:
        integrate(lambda x: 1.0 / np.sqrt(x), [0.0, 1.0], rel_tol=1e-14, max_panels=2, label="raíz")
    assert "raíz" in str(info.value)
    assert info.value.value is not None


def test_non_finite_integrand():
    with pytest.raises(IntegrationError):
        integrate(lambda x: np.full_like(x, np.inf), [0.0, 1.0])


def test_degenerate_interval():
    result = integrate(np.sin, [1.0, 1.0])
    assert result.value[0] == 0.0
    assert result.panels == 0
