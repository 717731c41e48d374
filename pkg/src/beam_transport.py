"""
Desviación Casimir–Polder de los átomos que cruzan la cavidad: potencial
por suma de Matsubara, trayectorias transversales, ancho del canal de
supervivencia y la cadena completa hasta las poblaciones de salida.
"""

import logging
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .cavity_greens import DEFAULT_QUADRATURE
from .cavity_model import (
    AtomConstants, BeamConfig, CavitySetup, DomainError, ExperimentReport, IntegrationError,
    PopulationVector, QuadratureSpec, state_label,
)
from .constants import C, HBAR, K_B
from .hyperfine_atom import cavity_rate, diagonalize, evolve, total_rates
from .materials import reflection_imag_axis
from .quadrature import integrate

logger = logging.getLogger(__name__)

MAX_MATSUBARA_TERMS = 100_000
NO_TRANSITION_THRESHOLD = 1e-10
_T_CHUNK = 256


def polarizability(beam: BeamConfig, xi):
    """α(iξ) = α₀ / (1 + ξ²/ω₀²), volumen de polarizabilidad en m³."""
    return beam.alpha0_m3 / (1.0 + (np.asarray(xi, dtype=float) / beam.omega0_rad_s) ** 2)


def _matsubara_terms(setup: CavitySetup, d: float, quad: QuadratureSpec):
    xi1 = 2.0 * np.pi * K_B * setup.T_K / HBAR
    n_max = int(np.ceil(quad.tail_exponent * C / (2.0 * xi1 * d))) + 1
    if n_max > MAX_MATSUBARA_TERMS:
        logger.warning("suma de Matsubara truncada en %d términos (se pedían %d)", MAX_MATSUBARA_TERMS, n_max)
        n_max = MAX_MATSUBARA_TERMS
    xi = xi1 * np.arange(n_max + 1)
    weights = np.ones(xi.size)
    weights[0] = 0.5
    return xi, weights


def imaginary_trace_density(setup: CavitySetup, z: float, xi: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Integrando de Tr ℰ^sc(iξ; z) en t = κ − ξ/c, filas por ξ; real y suave."""
    xi_c = (xi / C)[:, None]
    kappa = xi_c + t[None, :]
    xi_col = xi[:, None]
    R1 = reflection_imag_axis(setup.mirror1, xi_col, kappa, setup.T_K)
    R2 = reflection_imag_axis(setup.mirror2, xi_col, kappa, setup.T_K)
    e1 = np.exp(-2.0 * kappa * z)
    e2 = np.exp(-2.0 * kappa * (setup.a_m - z))
    ea = np.exp(-2.0 * kappa * setup.a_m)
    xc2 = xi_c ** 2
    out = np.zeros(kappa.shape)
    for r1, r2, is_s in ((R1.r_s, R2.r_s, True), (R1.r_p, R2.r_p, False)):
        D = r1 * r2 * ea
        S = 0.5 * (r1 * e1 + r2 * e2)
        if is_s:
            out += -2.0 * xc2 * (D + S) / (1.0 - D)
        else:
            out += 2.0 * ((2.0 * kappa ** 2 - xc2) * S - xc2 * D) / (1.0 - D)
    return out


def cp_potential(setup: CavitySetup, z: float, beam: BeamConfig,
                 quad: Optional[QuadratureSpec] = None) -> float:
    """U(z) = −k_BT Σ'_n α(iξ_n) Tr ℰ^sc(iξ_n; z), en J."""
    quad = quad or DEFAULT_QUADRATURE
    if not 0 < z < setup.a_m:
        raise DomainError("cp_potential requiere 0 < z < a")
    d = min(z, setup.a_m - z)
    xi, weights = _matsubara_terms(setup, d, quad)
    coeff = weights * polarizability(beam, xi)

    def integrand(t):
        out = np.empty(t.size)
        for s in range(0, t.size, _T_CHUNK):
            chunk = t[s:s + _T_CHUNK]
            out[s:s + chunk.size] = coeff @ imaginary_trace_density(setup, z, xi, chunk)
        return out

    t_max = quad.tail_exponent / (2.0 * d)
    breakpoints = np.concatenate([[0.0], np.geomspace(1e-3 / d, t_max, 8)])
    res = integrate(integrand, breakpoints, rel_tol=max(quad.rel_tol, 1e-10),
                    max_panels=quad.max_panels, label="U_CP")
    return float(-K_B * setup.T_K * res.value[0])


class PotentialTable:
    """U(z) tabulado en una malla geométrica cerca de cada espejo.

    Se interpola ln(−U) con un spline cúbico en u = ln(z/(a − z)): cerca de
    cada pared U sigue una ley de potencias en la distancia y ln(−U) es casi
    lineal en u. Si U no es negativa en toda la malla se interpola U.
    """

    def __init__(self, setup: CavitySetup, beam: BeamConfig, points_per_side: int = 40,
                 quad: Optional[QuadratureSpec] = None):
        a = setup.a_m
        cap = beam.capture_distance_m
        if 2 * cap >= a:
            raise DomainError("capture_distance_m deja el gap vacío")
        self.setup = setup
        self.a_m = a
        self.lower = cap
        self.upper = a - cap
        d = np.geomspace(cap, a / 2, points_per_side)
        left = [cp_potential(setup, float(x), beam, quad) for x in d]
        if setup.identical_mirrors:
            right = left[::-1][1:]
        else:
            right = [cp_potential(setup, float(a - x), beam, quad) for x in d[::-1][1:]]
        self.z = np.concatenate([d, a - d[::-1][1:]])
        self.values = np.array(left + right)
        self.log_depth = bool(np.all(self.values < 0))
        target = np.log(-self.values) if self.log_depth else self.values
        self.spline = CubicSpline(self._coordinate(self.z), target)
        self._derivative = self.spline.derivative()
        logger.debug("tabla U_CP: %d puntos, U(a/2) = %.3e J", self.z.size, float(self.potential(a / 2)))

    def _coordinate(self, z):
        z = np.asarray(z, dtype=float)
        return np.log(z / (self.a_m - z))

    def potential(self, z):
        s = self.spline(self._coordinate(z))
        return -np.exp(s) if self.log_depth else s

    def force(self, z):
        z = np.asarray(z, dtype=float)
        u = self._coordinate(z)
        slope = self._derivative(u) * (1.0 / z + 1.0 / (self.a_m - z))
        return np.exp(self.spline(u)) * slope if self.log_depth else -slope


class Trajectory(NamedTuple):
    t: np.ndarray
    z: np.ndarray
    v: np.ndarray
    energy: np.ndarray
    hit_wall: bool

    @property
    def energy_drift(self) -> float:
        scale = max(np.abs(self.energy).max(), np.finfo(float).tiny)
        return float(np.abs(self.energy - self.energy[0]).max() / scale)


def trajectory(table: PotentialTable, beam: BeamConfig, z0: float, tau: Optional[float] = None) -> Trajectory:
    """Integra m z'' = −dU/dz durante τ = L/v; termina si el átomo alcanza la distancia de captura."""
    tau = beam.tau_s if tau is None else tau
    if not table.lower <= z0 <= table.upper:
        raise DomainError("z0 fuera de la región tabulada")
    mass = beam.mass_kg

    def rhs(_, y):
        return [y[1], float(table.force(y[0])) / mass]

    def lower_wall(_, y):
        return y[0] - table.lower

    def upper_wall(_, y):
        return table.upper - y[0]

    for event in (lower_wall, upper_wall):
        event.terminal = True
        event.direction = -1

    sol = solve_ivp(rhs, (0.0, tau), [z0, beam.v_transverse_m_s], method="RK45",
                    max_step=tau / 1e4, rtol=1e-10, atol=[1e-16, 1e-14], events=[lower_wall, upper_wall])
    if not sol.success:
        raise IntegrationError(f"trayectoria z0 = {z0:.4e} m: {sol.message}")
    z, v = sol.y
    energy = 0.5 * mass * v ** 2 + table.potential(z)
    hit = any(len(ev) > 0 for ev in sol.t_events)
    return Trajectory(sol.t, z, v, energy, hit)


def _survives(table: PotentialTable, beam: BeamConfig, z0: float) -> bool:
    return not trajectory(table, beam, z0).hit_wall


def _side_width(table: PotentialTable, beam: BeamConfig, sign: float, tol: float) -> float:
    center = table.a_m / 2
    h_max = (table.a_m / 2 - table.lower) * (1 - 1e-9)
    if _survives(table, beam, center + sign * h_max):
        return table.a_m / 2
    if not _survives(table, beam, center):
        return 0.0
    lo, hi = 0.0, h_max
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _survives(table, beam, center + sign * mid):
            lo = mid
        else:
            hi = mid
    return lo


def channel_width(setup: CavitySetup, beam: BeamConfig, table: Optional[PotentialTable] = None,
                  tol_m: float = 0.5e-9, quad: Optional[QuadratureSpec] = None) -> float:
    """Ancho H de la franja central de lanzamiento que atraviesa la cavidad sin capturarse."""
    table = table or PotentialTable(setup, beam, quad=quad)
    upper = _side_width(table, beam, +1.0, tol_m)
    # la simetría z ↔ a − z sólo vale sin velocidad transversal
    mirrored = setup.identical_mirrors and beam.v_transverse_m_s == 0.0
    lower = upper if mirrored else _side_width(table, beam, -1.0, tol_m)
    width = min(upper + lower, setup.a_m)
    logger.debug("canal: H = %.3e m (v = %.2f m/s, L = %.3e m)", width, beam.v_m_s, beam.L_m)
    return width


def survival_fraction(setup: CavitySetup, beam: BeamConfig, table: Optional[PotentialTable] = None,
                      quad: Optional[QuadratureSpec] = None) -> float:
    """H/a, suponiendo iluminación uniforme de la entrada."""
    return channel_width(setup, beam, table, quad=quad) / setup.a_m


def run_experiment(setup: CavitySetup, beam: BeamConfig, B_G: float, theta_rad: float,
                   initial_state: Tuple[float, float],
                   atom: Optional[AtomConstants] = None,
                   quad: Optional[QuadratureSpec] = None) -> ExperimentReport:
    """diagonalize → tasas en a/2 → evolución durante τ → poblaciones de salida y supervivencia."""
    quad = quad or DEFAULT_QUADRATURE
    warnings = list(setup.warnings())
    system = diagonalize(B_G, theta_rad, atom)
    rates = cavity_rate(system, setup, setup.a_m / 2, quad)
    F, m = initial_state
    p0 = PopulationVector.pure(system.labels, F, m)
    p = evolve(rates, p0, beam.tau_s)
    transition = float(1.0 - p.p[system.index_of(F, m)])
    width = channel_width(setup, beam, quad=quad)
    no_transitions = transition < NO_TRANSITION_THRESHOLD
    if no_transitions:
        logger.info("probabilidad de transición %.2e: sin transiciones medibles", transition)
    rate_json = rates.to_json()
    rate_json["total_s-1"] = total_rates(rates).tolist()
    return ExperimentReport(
        populations=p.as_dict(),
        survival_fraction=width / setup.a_m,
        channel_width_m=width,
        transition_probability=max(transition, 0.0),
        no_measurable_transitions=no_transitions,
        tau_s=beam.tau_s,
        initial_state=state_label(F, m),
        rate_matrix=rate_json,
        warnings=warnings,
    )
