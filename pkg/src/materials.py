"""
Permitividades de los espejos (Drude / plasma + núcleo de Lorentz) y los
coeficientes de reflexión que inducen en una interfaz plana o una lámina.

Todas las funciones aceptan escalares o arrays de numpy en k⊥.
"""

import logging
from typing import NamedTuple, Optional

import numpy as np

from .constants import C
from .cavity_model import (
    CavitySetup, DomainError, MATERIAL_PRESETS, MaterialKind, MaterialModel, Mirror,
)

logger = logging.getLogger(__name__)


class ReflectionPair(NamedTuple):
    r_s: np.ndarray
    r_p: np.ndarray


class ReflectionSet(NamedTuple):
    """r junto a 1 + r y 1 − r, estos últimos sin restar cantidades próximas."""

    r: ReflectionPair
    plus: ReflectionPair
    minus: ReflectionPair


def preset(name: str) -> MaterialModel:
    """Devuelve un material predefinido ("Au", "Pt")."""
    try:
        return MATERIAL_PRESETS[name]
    except KeyError:
        raise DomainError(f"material desconocido: {name}; presets {sorted(MATERIAL_PRESETS)}")


def _core(model: MaterialModel, omega):
    out = np.zeros_like(np.asarray(omega, dtype=complex))
    for osc in model.core:
        w0 = osc.omega_0_rad_s
        out = out + osc.strength * w0 ** 2 / (w0 ** 2 - omega ** 2 - 1j * osc.damping_rad_s * omega)
    return out


def epsilon(model: MaterialModel, omega, T: float):
    """ε(ω) para ω > 0; T entra sólo a través de γ(T)."""
    omega_arr = np.asarray(omega, dtype=float)
    if np.any(omega_arr <= 0):
        raise DomainError("epsilon requiere omega > 0; use epsilon_extended para ω < 0")
    if T <= 0:
        raise DomainError("epsilon requiere T > 0")
    wp2 = model.omega_p_rad_s ** 2
    if model.kind == MaterialKind.PLASMA:
        eps = 1.0 - wp2 / omega_arr ** 2 + 0j
    else:
        eps = 1.0 - wp2 / (omega_arr * (omega_arr + 1j * model.gamma_at(T)))
    eps = eps + _core(model, omega_arr)
    return eps if eps.ndim else complex(eps)


def epsilon_extended(model: MaterialModel, omega, T: float):
    """Extiende ε a ω < 0 con la condición de realidad ε(-ω) = ε*(ω)."""
    omega_arr = np.asarray(omega, dtype=float)
    eps = np.conj(epsilon(model, np.abs(omega_arr), T))
    eps = np.where(omega_arr < 0, eps, np.conj(eps))
    return eps if eps.ndim else complex(eps)


def epsilon_imag_axis(model: MaterialModel, xi, T: float):
    """ε(iξ), real y ≥ 1; vale +inf en ξ = 0 para electrones libres."""
    xi_arr = np.asarray(xi, dtype=float)
    if np.any(xi_arr < 0):
        raise DomainError("epsilon_imag_axis requiere xi >= 0")
    wp2 = model.omega_p_rad_s ** 2
    with np.errstate(divide="ignore"):
        if model.kind == MaterialKind.PLASMA:
            eps = 1.0 + wp2 / xi_arr ** 2
        else:
            eps = 1.0 + wp2 / (xi_arr * (xi_arr + model.gamma_at(T)))
    for osc in model.core:
        w0 = osc.omega_0_rad_s
        eps = eps + osc.strength * w0 ** 2 / (w0 ** 2 + xi_arr ** 2 + osc.damping_rad_s * xi_arr)
    return eps if np.ndim(eps) else float(eps)


def lambda_p(model: MaterialModel) -> float:
    return C / model.omega_p_rad_s


def omega_tilde(model: MaterialModel, a: float, T: float = 300.0) -> float:
    """Frecuencia de corte de la banda TE anómala, ω_c²/(4πσ) con ω_c = c/2a."""
    gamma = model.gamma_at(T)
    return C ** 2 * gamma / (4.0 * a ** 2 * model.omega_p_rad_s ** 2)


def branch_sqrt(x):
    """Raíz con Im ≥ 0 (y Re ≥ 0 si Im = 0)."""
    s = np.sqrt(np.asarray(x, dtype=complex))
    flip = (s.imag < 0) | ((s.imag == 0) & (s.real < 0))
    return np.where(flip, -s, s)


def _kz_pair(eps, omega, k_perp):
    q2 = (omega / C) ** 2
    k2 = np.asarray(k_perp, dtype=float) ** 2
    return branch_sqrt(q2 - k2), branch_sqrt(eps * q2 - k2), q2, k2


def _fresnel_from_kz(eps, kz, kzm, q2, k2) -> ReflectionPair:
    # formas racionalizadas: sin cancelaciones cuando |ε| ≫ 1 o k⊥ ≫ q
    with np.errstate(divide="ignore", invalid="ignore"):
        r_s = (1.0 - eps) * q2 / (kz + kzm) ** 2
        r_p = (eps - 1.0) * (eps * q2 - (eps + 1.0) * k2) / (eps * kz + kzm) ** 2
    r_s = np.where(np.isfinite(r_s), r_s, 0.0)
    r_p = np.where(np.isfinite(r_p), r_p, 0.0)
    return ReflectionPair(r_s, r_p)


def _fresnel_complements(eps, kz, kzm, single: ReflectionPair) -> ReflectionSet:
    # 1 + r_s = 2k_z/(k_z + k_zm), 1 + r_p = 2εk_z/(εk_z + k_zm)
    with np.errstate(divide="ignore", invalid="ignore"):
        plus_s = 2.0 * kz / (kz + kzm)
        minus_s = 2.0 * kzm / (kz + kzm)
        plus_p = 2.0 * eps * kz / (eps * kz + kzm)
        minus_p = 2.0 * kzm / (eps * kz + kzm)
    ok_s = np.isfinite(plus_s) & np.isfinite(minus_s) & (single.r_s != 0)
    ok_p = np.isfinite(plus_p) & np.isfinite(minus_p) & (single.r_p != 0)
    return ReflectionSet(
        single,
        ReflectionPair(np.where(ok_s, plus_s, 1.0 + single.r_s), np.where(ok_p, plus_p, 1.0 + single.r_p)),
        ReflectionPair(np.where(ok_s, minus_s, 1.0 - single.r_s), np.where(ok_p, minus_p, 1.0 - single.r_p)),
    )


def fresnel(eps: complex, omega: float, k_perp) -> ReflectionPair:
    """Coeficientes de Fresnel vacío/medio semi-infinito (convención r_s → -1, r_p → +1)."""
    if omega <= 0:
        raise DomainError("fresnel requiere omega > 0")
    kz, kzm, q2, k2 = _kz_pair(eps, omega, k_perp)
    return _fresnel_from_kz(eps, kz, kzm, q2, k2)


def slab_reflection(eps: complex, omega: float, k_perp, w: Optional[float]) -> ReflectionPair:
    """Lámina de espesor w con vacío detrás; w = None o inf es el caso semi-infinito."""
    if w is not None and w <= 0:
        raise DomainError("el espesor de la lámina debe ser positivo")
    if omega <= 0:
        raise DomainError("slab_reflection requiere omega > 0")
    kz, kzm, q2, k2 = _kz_pair(eps, omega, k_perp)
    single = _fresnel_from_kz(eps, kz, kzm, q2, k2)
    if w is None or np.isinf(w):
        return single
    phase = np.exp(2j * kzm * w)
    out = []
    for r in single:
        out.append(r * (1.0 - phase) / (1.0 - r ** 2 * phase))
    return ReflectionPair(*out)


def reflection_for(mirror: Mirror, omega: float, k_perp, T: float) -> ReflectionPair:
    """Reflexión de un espejo concreto, respetando el gancho de reflexión constante."""
    if mirror.constant_reflection is not None:
        shape = np.shape(k_perp)
        return ReflectionPair(np.full(shape, mirror.constant_reflection.r_s, dtype=complex),
                              np.full(shape, mirror.constant_reflection.r_p, dtype=complex))
    eps = epsilon(mirror.material, omega, T)
    return slab_reflection(eps, omega, k_perp, mirror.thickness_m)


def reflection_set(mirror: Mirror, omega: float, k_perp, T: float) -> ReflectionSet:
    """Como `reflection_for`, con 1 ± r exactos cerca de |r| → 1 (espejos casi perfectos)."""
    if mirror.constant_reflection is not None:
        r = reflection_for(mirror, omega, k_perp, T)
        return ReflectionSet(r, ReflectionPair(1.0 + r.r_s, 1.0 + r.r_p), ReflectionPair(1.0 - r.r_s, 1.0 - r.r_p))
    if omega <= 0:
        raise DomainError("reflection_set requiere omega > 0")
    eps = epsilon(mirror.material, omega, T)
    kz, kzm, q2, k2 = _kz_pair(eps, omega, k_perp)
    single = _fresnel_from_kz(eps, kz, kzm, q2, k2)
    full = _fresnel_complements(eps, kz, kzm, single)
    w = mirror.thickness_m
    if w is None or np.isinf(w):
        return full
    # lámina: 1 ± r' = (1 ± r)(1 ∓ r e^{2ik_zm w}) / (1 − r² e^{2ik_zm w})
    phase = np.exp(2j * kzm * w)
    r, plus, minus = [], [], []
    for r0, p0, m0 in zip(full.r, full.plus, full.minus):
        denom = 1.0 - r0 ** 2 * phase
        r.append(r0 * (1.0 - phase) / denom)
        plus.append(p0 * (1.0 - r0 * phase) / denom)
        minus.append(m0 * (1.0 + r0 * phase) / denom)
    return ReflectionSet(ReflectionPair(*r), ReflectionPair(*plus), ReflectionPair(*minus))


def reflection_imag_axis(mirror: Mirror, xi: np.ndarray, kappa: np.ndarray, T: float) -> ReflectionPair:
    """Reflexión a frecuencia imaginaria ω = iξ, con κ = √(k⊥² + ξ²/c²); resultados reales."""
    if mirror.constant_reflection is not None:
        shape = np.broadcast(xi, kappa).shape
        return ReflectionPair(np.full(shape, mirror.constant_reflection.r_s.real),
                              np.full(shape, mirror.constant_reflection.r_p.real))
    xi_c2 = (np.asarray(xi, dtype=float) / C) ** 2
    eps = epsilon_imag_axis(mirror.material, xi, T)
    k2 = kappa ** 2 - xi_c2
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        kappa_m = np.sqrt(np.where(np.isinf(eps), np.inf, (eps - 1.0) * xi_c2) + kappa ** 2)
        r_s = (kappa - kappa_m) / (kappa + kappa_m)
        r_p = (eps * kappa - kappa_m) / (eps * kappa + kappa_m)
    # ξ → 0 con electrones libres: ε ξ² finito (Drude → 0, plasma → ω_p²)
    zero = xi_c2 == 0
    if np.any(zero):
        wp2 = (mirror.material.omega_p_rad_s / C) ** 2
        if mirror.material.kind == MaterialKind.PLASMA:
            km0 = np.sqrt(wp2 + kappa ** 2)
            r_s = np.where(zero, (kappa - km0) / (kappa + km0), r_s)
        else:
            r_s = np.where(zero, 0.0, r_s)
        r_p = np.where(zero, 1.0, r_p)
    if mirror.thickness_m is not None:
        phase = np.exp(-2.0 * kappa_m * mirror.thickness_m)
        r_s = r_s * (1.0 - phase) / (1.0 - r_s ** 2 * phase)
        r_p = r_p * (1.0 - phase) / (1.0 - r_p ** 2 * phase)
    return ReflectionPair(np.broadcast_to(r_s, k2.shape), np.broadcast_to(r_p, k2.shape))


def is_lossless(mirror: Mirror, omega: float, T: float) -> bool:
    """True si el espejo no disipa a esta frecuencia (polos de ancho nulo en el integrando)."""
    if mirror.constant_reflection is not None:
        hook = mirror.constant_reflection
        return abs(abs(hook.r_s) - 1.0) < 1e-12 or abs(abs(hook.r_p) - 1.0) < 1e-12
    return float(np.imag(epsilon(mirror.material, omega, T))) == 0.0


def setup_is_lossless(setup: CavitySetup, omega: float) -> bool:
    return is_lossless(setup.mirror1, omega, setup.T_K) and is_lossless(setup.mirror2, omega, setup.T_K)
