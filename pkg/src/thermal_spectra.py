"""
Densidad de energía térmica de la cavidad y sus descomposiciones TE/TM,
eléctrica/magnética; referencia de Planck y fórmula universal (Hurwitz).

Cada combinación exclusiva (polarización, campo) se arma con las trazas de
dispersión y recibe un cuarto del término de espacio libre ρ_BB.
"""

import logging
from typing import Dict, Iterable, List, NamedTuple, Optional, Tuple

import numpy as np

from .cavity_greens import DEFAULT_QUADRATURE, TraceSet, scattering_traces
from .cavity_model import (
    CavitySetup, DomainError, EnergyDensityResult, FULL_FILTER, QuadratureSpec,
    SpectralFilter, SpectralValue, TE_FILTER, TM_FILTER,
)
from .constants import C, HBAR, K_B, NEAR_WALL_WARNING_M
from .materials import branch_sqrt, reflection_for
from .quadrature import integrate

logger = logging.getLogger(__name__)

COMBINATIONS = ("TE-electric", "TE-magnetic", "TM-electric", "TM-magnetic")


def thermal_wavelength(T: float) -> float:
    """λ_T = ħc/k_BT."""
    if T <= 0:
        raise DomainError("T debe ser positiva")
    return HBAR * C / (K_B * T)


def bose(omega, T: float):
    return 1.0 / np.expm1(HBAR * np.asarray(omega, dtype=float) / (K_B * T))


def planck_density(T: float) -> float:
    """u_BB = (π²/15)(k_BT)⁴/(ħc)³ en J/m³."""
    if T < 0:
        raise DomainError("T no puede ser negativa")
    return np.pi ** 2 / 15.0 * (K_B * T) ** 4 / (HBAR * C) ** 3


def planck_spectrum(omega, T: float):
    """ρ_BB(ω) = 2ħω³/(πc³) n(ω), tal que u_BB = ∫ dω/2π ρ_BB."""
    omega = np.asarray(omega, dtype=float)
    return 2.0 * HBAR * omega ** 3 / (np.pi * C ** 3) * bose(omega, T)


def hurwitz_zeta(s: float, x: float, n_direct: int = 12) -> float:
    """ζ(s, x) por Euler–Maclaurin: suma directa y cola con B₂, B₄, B₆."""
    if s <= 1:
        raise DomainError("hurwitz_zeta requiere s > 1")
    if x <= 0:
        raise DomainError("hurwitz_zeta requiere x > 0")
    n = np.arange(n_direct)
    head = np.sum((n + x) ** (-s))
    t = n_direct + x
    tail = (t ** (1.0 - s) / (s - 1.0) + 0.5 * t ** (-s)
            + s * t ** (-s - 1.0) / 12.0
            - s * (s + 1) * (s + 2) * t ** (-s - 3.0) / 720.0
            + s * (s + 1) * (s + 2) * (s + 3) * (s + 4) * t ** (-s - 5.0) / 30240.0)
    return float(head + tail)


def universal_te_density(a: float, z: float, T: float) -> float:
    """ũ_TE(z) = (k_BT/16πa³)[ζ(3, z/a) + ζ(3, 1 − z/a)] en J/m³."""
    if not 0 < z < a:
        raise DomainError("universal_te_density requiere 0 < z < a")
    if T <= 0:
        raise DomainError("T debe ser positiva")
    return K_B * T / (16.0 * np.pi * a ** 3) * (hurwitz_zeta(3.0, z / a) + hurwitz_zeta(3.0, 1.0 - z / a))


class GKernel(NamedTuple):
    te: np.ndarray
    tm: np.ndarray
    total: np.ndarray


def g_function(setup: CavitySetup, omega: float, k_perp, z: float) -> GKernel:
    """Núcleo espectral g(ω, k⊥; z) por polarización.

    El factor 1/k_z multiplica también al término de reflexión múltiple; con esa
    agrupación (1/4π)Σ(2E⊥ + E∥ + 2H⊥ + H∥) = (1/2π) k⊥ g por unidad de k⊥.
    """
    if not 0 < z < setup.a_m:
        raise DomainError("g_function requiere 0 < z < a")
    k = np.atleast_1d(np.asarray(k_perp, dtype=float))
    q2 = (omega / C) ** 2
    kz = branch_sqrt(q2 - k * k)
    R1 = reflection_for(setup.mirror1, omega, k, setup.T_K)
    R2 = reflection_for(setup.mirror2, omega, k, setup.T_K)
    e1 = np.exp(2j * kz * z)
    e2 = np.exp(2j * kz * (setup.a_m - z))
    ea = np.exp(2j * kz * setup.a_m)
    out = []
    for r1, r2 in ((R1.r_s, R2.r_s), (R1.r_p, R2.r_p)):
        A = 1.0 - r1 * r2 * ea
        bracket = r1 * e1 + r2 * e2 + 2.0 * q2 / (k * k) * r1 * r2 * ea
        out.append(k * k * (bracket / (kz * A)).real)
    return GKernel(out[0], out[1], out[0] + out[1])


def combination_traces(traces: TraceSet) -> Tuple[Dict[str, float], Dict[str, float]]:
    """Suma de trazas de cada combinación (polarización-campo) y su error."""
    v, e = traces.values, traces.errors
    values = {
        "TE-electric": 2.0 * v["e_perp_s"],
        "TE-magnetic": 2.0 * v["h_perp_s"] + v["h_par_s"],
        "TM-electric": 2.0 * v["e_perp_p"] + v["e_par_p"],
        "TM-magnetic": 2.0 * v["h_perp_p"],
    }
    errors = {
        "TE-electric": 2.0 * e["e_perp_s"],
        "TE-magnetic": 2.0 * e["h_perp_s"] + e["h_par_s"],
        "TM-electric": 2.0 * e["e_perp_p"] + e["e_par_p"],
        "TM-magnetic": 2.0 * e["h_perp_p"],
    }
    return values, errors


def _spectral_components(setup: CavitySetup, omega: float, z: float, quad: QuadratureSpec,
                         scattering_only: bool = False):
    traces = scattering_traces(setup, omega, z, quad, resonances_default=True)
    values, errors = combination_traces(traces)
    prefactor = HBAR * bose(omega, setup.T_K) / (2.0 * np.pi)
    free = 0.0 if scattering_only else planck_spectrum(omega, setup.T_K) / 4.0
    rho = {key: prefactor * values[key] + free for key in COMBINATIONS}
    err = {key: prefactor * errors[key] for key in COMBINATIONS}
    return rho, err


def spectral_energy_density(setup: CavitySetup, omega: float, z: float,
                            filter: SpectralFilter = FULL_FILTER,
                            quad: Optional[QuadratureSpec] = None,
                            scattering_only: bool = False) -> SpectralValue:
    """ρ^(cav)(ω; z) filtrado, en J/(m³·rad/s), con u = ∫ dω/2π ρ."""
    quad = quad or DEFAULT_QUADRATURE
    if omega <= 0:
        raise DomainError("omega debe ser positiva")
    rho, err = _spectral_components(setup, omega, z, quad, scattering_only)
    keys = filter.components()
    return SpectralValue(
        value=float(sum(rho[k] for k in keys)),
        error=float(sum(err[k] for k in keys)),
        components={k: float(rho[k]) for k in keys},
    )


def _warnings(setup: CavitySetup, z: float) -> List[str]:
    out = list(setup.warnings())
    if min(z, setup.a_m - z) < NEAR_WALL_WARNING_M:
        out.append(f"z = {z:.3e} m a menos de 50 nm de un espejo: la teoría macroscópica puede fallar")
    for message in out:
        logger.warning(message)
    return out


def omega_breakpoints(T: float, quad: QuadratureSpec) -> np.ndarray:
    """Puntos de corte en ln ω: uno por década entre omega_min y omega_max_x·k_BT/ħ.

    Vacío si el corte térmico queda por debajo de omega_min: el espectro es
    despreciable en todo el rango y la integral vale cero.
    """
    lo = quad.omega_min_rad_s
    hi = quad.omega_max_x * K_B * T / HBAR
    if hi <= lo:
        logger.info("corte térmico %.3e rad/s por debajo de omega_min %.3e rad/s", hi, lo)
        return np.empty(0)
    n = max(2, int(np.ceil(np.log10(hi / lo))) + 1)
    return np.linspace(np.log(lo), np.log(hi), n)


def thermal_energy_density(setup: CavitySetup, z: float,
                           filter: SpectralFilter = FULL_FILTER,
                           quad: Optional[QuadratureSpec] = None) -> EnergyDensityResult:
    """u^(cav)(z) filtrada: integral en ln ω de ρ^(cav) hasta ħω/k_BT = omega_max_x."""
    quad = quad or DEFAULT_QUADRATURE
    if not 0 < z < setup.a_m:
        raise DomainError("thermal_energy_density requiere 0 < z < a")
    warnings = _warnings(setup, z)
    u_bb = planck_density(setup.T_K)

    def integrand(log_omega):
        columns = []
        for lw in log_omega:
            omega = float(np.exp(lw))
            rho, _ = _spectral_components(setup, omega, z, quad)
            factor = omega / (2.0 * np.pi)
            columns.append([factor * rho[k] for k in COMBINATIONS])
        return np.array(columns).T

    breakpoints = omega_breakpoints(setup.T_K, quad)
    if breakpoints.size < 2:
        warnings.append("corte térmico por debajo de omega_min_rad_s: u = 0")
        keys = filter.components()
        return EnergyDensityResult(value=0.0, error_estimate=0.0, components={k: 0.0 for k in keys},
                                   warnings=warnings)
    res = integrate(integrand, breakpoints, rel_tol=quad.omega_rel_tol,
                    abs_tol=1e-9 * u_bb, max_panels=quad.max_panels, label="ω")
    components = dict(zip(COMBINATIONS, res.value))
    outer_err = dict(zip(COMBINATIONS, res.error))
    keys = filter.components()
    value = float(sum(components[k] for k in keys))
    # cota del error en k⊥: rel_tol sobre la parte de dispersión, |u_k| + u_BB/4
    inner_err = {k: quad.rel_tol * (abs(components[k]) + u_bb / 4.0) for k in keys}
    error = float(sum(inner_err[k] + outer_err[k] for k in keys))
    logger.debug("u(z=%.3e) %s = %.6e ± %.1e J/m³ (%d paneles)", z, keys, value, error, res.panels)
    return EnergyDensityResult(
        value=value, error_estimate=error,
        components={k: float(components[k]) for k in keys},
        warnings=warnings,
    )


def energy_density_profile(setup: CavitySetup, z_values: Iterable[float],
                           filter: SpectralFilter = FULL_FILTER,
                           quad: Optional[QuadratureSpec] = None) -> List[EnergyDensityResult]:
    """Barrido u^(cav)(z) sobre varias posiciones."""
    return [thermal_energy_density(setup, float(z), filter, quad) for z in z_values]


class TemperatureSweep(NamedTuple):
    temperatures: np.ndarray
    te: List[EnergyDensityResult]
    tm: List[EnergyDensityResult]
    te_exponent: float


def temperature_sweep(setup: CavitySetup, temperatures: Iterable[float],
                      z: Optional[float] = None,
                      quad: Optional[QuadratureSpec] = None) -> TemperatureSweep:
    """u_TE(T), u_TM(T) en z (centro por defecto) y exponente β de u_TE ∝ T^β."""
    temps = np.asarray(list(temperatures), dtype=float)
    z = setup.a_m / 2 if z is None else z
    te, tm = [], []
    for T in temps:
        current = setup.model_copy(update={"T_K": float(T)})
        te.append(thermal_energy_density(current, z, TE_FILTER, quad))
        tm.append(thermal_energy_density(current, z, TM_FILTER, quad))
    beta = float("nan")
    if temps.size >= 2:
        beta = float(np.polyfit(np.log(temps), np.log([r.value for r in te]), 1)[0])
    return TemperatureSweep(temps, te, tm, beta)
