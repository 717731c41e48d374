"""
Estructura hiperfina-Zeeman del estado fundamental (J = 1/2), momentos
dipolares magnéticos, tasas radiativas libres y en la cavidad, y evolución
de las poblaciones con la ecuación maestra.

Energías en J; momentos y tasas en unidades gaussianas (erg/G, s⁻¹).
"""

import logging
from typing import Dict, Iterable, List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.linalg import eigh, expm

from .cavity_greens import DEFAULT_QUADRATURE, cavity_traces
from .cavity_model import (
    ATOM_PRESETS, AtomConstants, CavitySetup, DipoleMatrices, DomainError, GreenCoefficients,
    HyperfineSystem, IntegrationError, PopulationVector, QuadratureSpec, RateMatrix, state_label,
)
from .constants import C_CGS, EV_CGS, HBAR, HBAR_CGS, K_B, MU_B_CGS, MU_N_CGS, PER_M3_TO_PER_CM3

logger = logging.getLogger(__name__)

ERG_TO_J = 1e-7


class Transition(NamedTuple):
    initial: Tuple[float, float]
    final: Tuple[float, float]
    omega_rad_s: float


def spin_matrices(j: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(Jx, Jy, Jz) en la base |j, m> con m descendente."""
    m = j - np.arange(int(round(2 * j)) + 1)
    raise_ = np.diag(np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1)), k=1).astype(complex)
    jx = 0.5 * (raise_ + raise_.T)
    jy = -0.5j * (raise_ - raise_.T)
    return jx, jy, np.diag(m).astype(complex)


def _operators(atom: AtomConstants):
    ix, iy, iz = spin_matrices(atom.nuclear_spin)
    sx, sy, sz = spin_matrices(0.5)
    n_i = ix.shape[0]
    i_ops = [np.kron(op, np.eye(2)) for op in (ix, iy, iz)]
    s_ops = [np.kron(np.eye(n_i), op) for op in (sx, sy, sz)]
    m_i = np.repeat(atom.nuclear_spin - np.arange(n_i), 2)
    m_s = np.tile([0.5, -0.5], n_i)
    return i_ops, s_ops, [(float(a), float(b)) for a, b in zip(m_i, m_s)]


def _hamiltonian_erg(atom: AtomConstants, B_G: float) -> np.ndarray:
    i_ops, s_ops, _ = _operators(atom)
    coupling = 2.0 * atom.w0_ev * EV_CGS / (2.0 * atom.nuclear_spin + 1.0)
    H = coupling * sum(i @ s for i, s in zip(i_ops, s_ops))
    H = H + atom.g_electron * MU_B_CGS * B_G * s_ops[2] - atom.g_nuclear * MU_N_CGS * B_G * i_ops[2]
    return H


def diagonalize(B_G: float, theta_rad: float = 0.0, atom: Optional[AtomConstants] = None) -> HyperfineSystem:
    """Diagonaliza el hamiltoniano hiperfino-Zeeman con eje de cuantización a lo largo de B.

    H conserva m = m_I + m_S, así que se diagonaliza cada bloque de m por
    separado. Dentro de un bloque los niveles no se cruzan: el superior es
    F = I + 1/2 para todo B, que es lo que da la continuación adiabática
    desde B = 0.
    """
    if B_G < 0:
        raise DomainError("B debe ser >= 0")
    atom = atom or ATOM_PRESETS["D"]
    H = _hamiltonian_erg(atom, B_G)
    _, _, basis = _operators(atom)
    m_tot = np.array([a + b for a, b in basis])
    f_low, f_high = atom.nuclear_spin - 0.5, atom.nuclear_spin + 0.5

    states = []
    for m in np.unique(m_tot):
        idx = np.nonzero(np.isclose(m_tot, m))[0]
        vals, vecs = eigh(H[np.ix_(idx, idx)])
        fs = [f_high] if idx.size == 1 else [f_low, f_high]
        for k, F in enumerate(fs):
            vec = np.zeros(H.shape[0], dtype=complex)
            vec[idx] = vecs[:, k]
            pivot = np.argmax(np.abs(vec))
            vec *= np.abs(vec[pivot]) / vec[pivot]
            states.append(((F, float(m)), vals[k] * ERG_TO_J, vec))
    states.sort(key=lambda s: s[0])
    return HyperfineSystem(
        B_G=B_G, theta_rad=theta_rad, atom=atom,
        energies_J=np.array([s[1] for s in states]),
        labels=[s[0] for s in states],
        eigenvectors=np.column_stack([s[2] for s in states]),
        basis=basis,
    )


def breit_rabi_energies(B_G: float, atom: Optional[AtomConstants] = None) -> np.ndarray:
    """Fórmula cerrada de Breit–Rabi (J = 1/2), en J y en el orden de `diagonalize`."""
    atom = atom or ATOM_PRESETS["D"]
    I = atom.nuclear_spin
    w0 = atom.w0_ev * EV_CGS
    nuclear = atom.g_nuclear * MU_N_CGS * B_G
    x = (atom.g_electron * MU_B_CGS + atom.g_nuclear * MU_N_CGS) * B_G / w0
    out = []
    for F in (I - 0.5, I + 0.5):
        sign = 1.0 if F > I else -1.0
        for m in np.arange(-F, F + 1):
            if abs(m) > I:
                root = 1.0 + x if m > 0 else 1.0 - x
            else:
                root = np.sqrt(1.0 + 4.0 * m * x / (2 * I + 1) + x * x)
            out.append(-w0 / (2 * (2 * I + 1)) - nuclear * m + sign * 0.5 * w0 * root)
    return np.array(out) * ERG_TO_J


def dipole_matrices(system: HyperfineSystem) -> DipoleMatrices:
    """μ = g_D μ_N I − g_e μ_B S en la base vestida; x a lo largo del haz, ζ a lo largo de B."""
    i_ops, s_ops, _ = _operators(system.atom)
    V = system.eigenvectors
    mats = []
    for i_op, s_op in zip(i_ops, s_ops):
        mu = system.atom.g_nuclear * MU_N_CGS * i_op - system.atom.g_electron * MU_B_CGS * s_op
        mats.append(V.conj().T @ mu @ V)
    return DipoleMatrices(mu_x=mats[0], mu_y=mats[1], mu_zeta=mats[2])


def transition_frequency(system: HyperfineSystem, initial: int, final: int) -> float:
    """ω_fi = (E_i − E_f)/ħ; positiva para emisión."""
    return float((system.energies_J[initial] - system.energies_J[final]) / HBAR)


def transition_frequencies(system: HyperfineSystem) -> List[Transition]:
    out = []
    for i in range(system.size):
        for f in range(i + 1, system.size):
            out.append(Transition(system.labels[i], system.labels[f], transition_frequency(system, i, f)))
    return out


def _omega_matrix(system: HyperfineSystem) -> np.ndarray:
    E = system.energies_J
    return (E[None, :] - E[:, None]) / HBAR  # [f, i]: (E_i − E_f)/ħ


def _thermal_factor(omega: np.ndarray, T: float) -> np.ndarray:
    """1/(1 − e^{−x}) para emisión y 1/(e^{|x|} − 1) para absorción."""
    x = HBAR * np.abs(omega) / (K_B * T)
    with np.errstate(divide="ignore", invalid="ignore"):
        down = -1.0 / np.expm1(-x)
        up = 1.0 / np.expm1(x)
    out = np.where(omega > 0, down, up)
    return np.where(x > 0, out, 0.0)


def _squared_elements(dipoles: DipoleMatrices, theta: float):
    """|μ|² transversal y normal a los espejos, en el sistema del laboratorio."""
    lab_y = np.cos(theta) * dipoles.mu_y + np.sin(theta) * dipoles.mu_zeta
    lab_z = -np.sin(theta) * dipoles.mu_y + np.cos(theta) * dipoles.mu_zeta
    perp = np.abs(dipoles.mu_x) ** 2 + np.abs(lab_y) ** 2
    par = np.abs(lab_z) ** 2
    np.fill_diagonal(perp, 0.0)
    np.fill_diagonal(par, 0.0)
    return perp, par


def free_rate(system: HyperfineSystem, T: float, dipoles: Optional[DipoleMatrices] = None) -> RateMatrix:
    """Γ_fi = 4|ω|³ Σ|μ|² / (3ħc³) × factor de Bose, con balance detallado."""
    if T <= 0:
        raise DomainError("T debe ser positiva")
    dipoles = dipoles or dipole_matrices(system)
    omega = _omega_matrix(system)
    perp, par = _squared_elements(dipoles, system.theta_rad)
    trace = 2.0 / 3.0 * (np.abs(omega) / C_CGS) ** 3
    gamma = 2.0 / HBAR_CGS * _thermal_factor(omega, T) * trace * (perp + par)
    np.fill_diagonal(gamma, 0.0)
    return RateMatrix(gamma=gamma, labels=list(system.labels), context="free",
                      errors=np.zeros_like(gamma))


def _trace_table(system: HyperfineSystem, setup: CavitySetup, z0: float, quad: QuadratureSpec,
                 mask: np.ndarray) -> Dict[float, GreenCoefficients]:
    omega = np.abs(_omega_matrix(system))
    table: Dict[float, GreenCoefficients] = {}
    for w in np.unique(np.round(omega[mask & (omega > 1.0)], 6)):
        table[float(w)] = cavity_traces(setup, float(w), z0, quad, resonances_default=False)
    return table


def _allowed(perp: np.ndarray, par: np.ndarray) -> np.ndarray:
    total = perp + par
    scale = total.max() if total.size else 0.0
    return total > 1e-20 * scale if scale > 0 else np.zeros_like(total, dtype=bool)


def _resolved_trace(coeffs: GreenCoefficients, name: str, quad: QuadratureSpec) -> float:
    """Traza total libre + dispersión; un valor negativo dentro de la resolución de la cuadratura vale cero.

    Con espejos sin pérdidas por debajo del primer corte la parte de dispersión
    cancela exactamente el término libre, y el resultado es ruido de redondeo
    de cualquier signo.
    """
    value = getattr(coeffs, f"{name}_cav")
    resolution = coeffs.errors.get(name, 0.0) + quad.abs_floor * coeffs.free_space
    if value >= 0.0:
        return value
    if value < -resolution:
        raise IntegrationError(
            f"traza {name} negativa en ω = {coeffs.omega_rad_s:.6e} rad/s: {value:.3e} "
            f"(resolución {resolution:.1e})",
            value=value, error=coeffs.errors.get(name), panels=0,
        )
    logger.debug("traza %s en ω = %.6e rad/s por debajo de la resolución: %.1e", name, coeffs.omega_rad_s, value)
    return 0.0


def cavity_rate(system: HyperfineSystem, setup: CavitySetup, z0: float,
                quad: Optional[QuadratureSpec] = None,
                dipoles: Optional[DipoleMatrices] = None,
                _table: Optional[Dict[float, GreenCoefficients]] = None) -> RateMatrix:
    """Tasas con las trazas magnéticas de la cavidad en z0 (libre + dispersión)."""
    quad = quad or DEFAULT_QUADRATURE
    if not 0 < z0 < setup.a_m:
        raise DomainError("z0 fuera del gap")
    dipoles = dipoles or dipole_matrices(system)
    omega = _omega_matrix(system)
    perp, par = _squared_elements(dipoles, system.theta_rad)
    mask = _allowed(perp, par)
    table = _table if _table is not None else _trace_table(system, setup, z0, quad, mask)

    h_perp = np.zeros_like(omega)
    h_par = np.zeros_like(omega)
    e_perp = np.zeros_like(omega)
    e_par = np.zeros_like(omega)
    for f, i in zip(*np.nonzero(mask)):
        key = float(np.round(abs(omega[f, i]), 6))
        coeffs = table.get(key)
        if coeffs is None:
            continue
        h_perp[f, i] = _resolved_trace(coeffs, "h_perp", quad) * PER_M3_TO_PER_CM3
        h_par[f, i] = _resolved_trace(coeffs, "h_par", quad) * PER_M3_TO_PER_CM3
        e_perp[f, i] = coeffs.errors.get("h_perp", 0.0) * PER_M3_TO_PER_CM3
        e_par[f, i] = coeffs.errors.get("h_par", 0.0) * PER_M3_TO_PER_CM3

    prefactor = 2.0 / HBAR_CGS * _thermal_factor(omega, setup.T_K)
    gamma = prefactor * (h_perp * perp + h_par * par)
    errors = prefactor * (e_perp * perp + e_par * par)
    np.fill_diagonal(gamma, 0.0)
    np.fill_diagonal(errors, 0.0)
    context = f"cavity(a={setup.a_m:.3e} m, z0={z0:.3e} m)"
    logger.debug("%s: tasa total máxima %.3e s⁻¹", context, gamma.sum(axis=0).max())
    return RateMatrix(gamma=gamma, labels=list(system.labels), context=context, errors=errors)


def total_rates(rates: RateMatrix) -> np.ndarray:
    """Tasa total de salida de cada estado, Σ_f Γ_fi."""
    g = np.array(rates.gamma, dtype=float)
    np.fill_diagonal(g, 0.0)
    return g.sum(axis=0)


def total_rate_of(rates: RateMatrix, F: float, m: float) -> float:
    for i, (f, mm) in enumerate(rates.labels):
        if abs(f - F) < 1e-9 and abs(mm - m) < 1e-9:
            return float(total_rates(rates)[i])
    raise DomainError(f"estado {state_label(F, m)} inexistente")


def evolve(rates: RateMatrix, p0: PopulationVector, tau: float) -> PopulationVector:
    """p(τ) = exp(τ G) p0 con G_nk = Γ_nk y G_nn = −Σ_k Γ_kn."""
    if tau < 0:
        raise DomainError("tau debe ser >= 0")
    if list(p0.labels) != list(rates.labels):
        raise DomainError("las etiquetas de p0 no coinciden con las de la matriz de tasas")
    if tau == 0:
        return PopulationVector(p=p0.p.copy(), labels=list(p0.labels))
    gamma = np.array(rates.gamma, dtype=float)
    np.fill_diagonal(gamma, 0.0)
    if np.any(gamma < 0):
        raise DomainError("la matriz de tasas tiene entradas negativas fuera de la diagonal")
    p = expm(tau * rates.generator()) @ p0.p
    # exp(τG) conserva la suma y la positividad; sólo se admite redondeo
    if p.min() < -1e-12 or abs(p.sum() - 1.0) > 1e-10:
        raise IntegrationError(
            f"exp(τG)·p0 no es una distribución: mínimo {p.min():.3e}, suma − 1 = {p.sum() - 1.0:.3e}",
            value=p,
        )
    return PopulationVector(p=p, labels=list(p0.labels))


def gibbs_populations(system: HyperfineSystem, T: float) -> PopulationVector:
    if T <= 0:
        raise DomainError("T debe ser positiva")
    E = system.energies_J - system.energies_J.min()
    w = np.exp(-E / (K_B * T))
    return PopulationVector(p=w / w.sum(), labels=list(system.labels))


def cavity_rates_vs_B(setup: CavitySetup, z0: float, B_values: Iterable[float], theta_rad: float,
                      atom: Optional[AtomConstants] = None,
                      quad: Optional[QuadratureSpec] = None) -> List[RateMatrix]:
    out = []
    for B in B_values:
        system = diagonalize(float(B), theta_rad, atom)
        out.append(cavity_rate(system, setup, z0, quad))
    return out


def cavity_rates_vs_theta(setup: CavitySetup, z0: float, B_G: float, thetas: Iterable[float],
                          atom: Optional[AtomConstants] = None,
                          quad: Optional[QuadratureSpec] = None) -> List[RateMatrix]:
    """Barrido en θ; las frecuencias no dependen de θ y las trazas se calculan una vez."""
    quad = quad or DEFAULT_QUADRATURE
    base = diagonalize(B_G, 0.0, atom)
    dipoles = dipole_matrices(base)
    strength = np.abs(dipoles.mu_x) ** 2 + np.abs(dipoles.mu_y) ** 2 + np.abs(dipoles.mu_zeta) ** 2
    np.fill_diagonal(strength, 0.0)
    table = _trace_table(base, setup, z0, quad, _allowed(strength, np.zeros_like(strength)))
    out = []
    for theta in thetas:
        system = base.model_copy(update={"theta_rad": float(theta)})
        out.append(cavity_rate(system, setup, z0, quad, dipoles=dipoles, _table=table))
    return out
