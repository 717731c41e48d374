"""
Presión de Casimir térmica: densidad espectral a partir de las trazas
magnéticas de dispersión, su integral en frecuencia y la asíntota de gap
pequeño. Convenio de signo: positivo = repulsiva.
"""

import logging
from typing import Dict, List, Optional

import numpy as np

from .cavity_greens import DEFAULT_QUADRATURE, scattering_traces
from .cavity_model import CavitySetup, DomainError, PressureResult, QuadratureSpec, SpectralValue
from .constants import HBAR, K_B
from .quadrature import integrate
from .thermal_spectra import bose, hurwitz_zeta, omega_breakpoints, thermal_wavelength

logger = logging.getLogger(__name__)

ZETA3 = hurwitz_zeta(3.0, 1.0)
# a ≪ λ_T deja de cumplirse a partir de esta fracción
VALIDITY_FRACTION = 0.5


def _validity_warnings(a: float, T: float, lambda_p: Optional[float] = None) -> List[str]:
    out = []
    lam_t = thermal_wavelength(T)
    if a > VALIDITY_FRACTION * lam_t:
        out.append(f"a = {a:.3e} m no es << λ_T = {lam_t:.3e} m: la fórmula de gap pequeño pierde validez")
    if lambda_p is not None and lambda_p >= 0.1 * a:
        out.append(f"λ_p = {lambda_p:.3e} m no es << a = {a:.3e} m")
    for message in out:
        logger.warning(message)
    return out


def pressure_spectrum_components(setup: CavitySetup, omega: float, z: Optional[float] = None,
                                 quad: Optional[QuadratureSpec] = None) -> Dict[str, float]:
    """Partes 2H⊥ y −H∥ de T_zz(ω), en Pa/(rad/s), con sus errores."""
    quad = quad or DEFAULT_QUADRATURE
    if omega <= 0:
        raise DomainError("omega debe ser positiva")
    z = setup.a_m / 2 if z is None else z
    h = scattering_traces(setup, omega, z, quad, resonances_default=False).h_pair()
    prefactor = HBAR / (2.0 * np.pi) * float(bose(omega, setup.T_K))
    return {
        "magnetic_perp": prefactor * 2.0 * h.perp,
        "magnetic_par": -prefactor * h.par,
        "magnetic_perp_error": prefactor * 2.0 * h.perp_error,
        "magnetic_par_error": prefactor * h.par_error,
    }


def pressure_spectrum(setup: CavitySetup, omega: float, z: Optional[float] = None,
                      quad: Optional[QuadratureSpec] = None) -> SpectralValue:
    """T_zz(ω) = (ħ/2π)(2H⊥^sc − H∥^sc) n(ω), normalizada con P = ∫ dω/2π T_zz."""
    parts = pressure_spectrum_components(setup, omega, z, quad)
    return SpectralValue(
        value=parts["magnetic_perp"] + parts["magnetic_par"],
        error=parts["magnetic_perp_error"] + parts["magnetic_par_error"],
        components={"magnetic_perp": parts["magnetic_perp"], "magnetic_par": parts["magnetic_par"]},
    )


def thermal_pressure_asymptotic(a: float, T: float, lambda_p: float) -> PressureResult:
    """ΔP = (k_BT/8πa³) ζ(3) (1 − 6λ_p/a)."""
    if a <= 0 or T <= 0 or lambda_p < 0:
        raise DomainError("se requiere a > 0, T > 0 y lambda_p >= 0")
    value = K_B * T / (8.0 * np.pi * a ** 3) * ZETA3 * (1.0 - 6.0 * lambda_p / a)
    return PressureResult(value=value, error_estimate=0.0, warnings=_validity_warnings(a, T, lambda_p))


def thermal_pressure_integrated(setup: CavitySetup, quad: Optional[QuadratureSpec] = None,
                                z: Optional[float] = None) -> PressureResult:
    """∫ T_zz dω/2π con el mismo integrador en ln ω que la densidad de energía."""
    quad = quad or DEFAULT_QUADRATURE
    z = setup.a_m / 2 if z is None else z
    if not 0 < z < setup.a_m:
        raise DomainError("z fuera del gap")
    warnings = list(setup.warnings()) + _validity_warnings(setup.a_m, setup.T_K)
    scale = K_B * setup.T_K / (8.0 * np.pi * setup.a_m ** 3) * ZETA3

    def integrand(log_omega):
        out = np.empty(log_omega.size)
        for i, lw in enumerate(log_omega):
            omega = float(np.exp(lw))
            out[i] = omega / (2.0 * np.pi) * pressure_spectrum(setup, omega, z, quad).value
        return out

    breakpoints = omega_breakpoints(setup.T_K, quad)
    if breakpoints.size < 2:
        warnings.append("corte térmico por debajo de omega_min_rad_s: P = 0")
        return PressureResult(value=0.0, error_estimate=0.0, warnings=warnings)
    res = integrate(integrand, breakpoints, rel_tol=quad.omega_rel_tol,
                    abs_tol=1e-9 * scale, max_panels=quad.max_panels, label="presión")
    value = float(res.value[0])
    logger.debug("P(a=%.3e, T=%.1f) = %.6e Pa (%d paneles)", setup.a_m, setup.T_K, value, res.panels)
    # cota del error en k⊥: rel_tol sobre la escala k_BTζ(3)/8πa³
    return PressureResult(value=value,
                          error_estimate=float(res.error[0]) + quad.rel_tol * max(abs(value), scale),
                          warnings=warnings)
