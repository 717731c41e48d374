"""
Partes imaginarias de las trazas de Green (eléctricas y magnéticas) de
dispersión en puntos coincidentes dentro del gap, y la cuadratura en k⊥.

La integral en k⊥ se parte en la línea de luz. En el sector propagante la
variable es x = k_z ∈ [0, q]; en el evanescente x = κ = -i k_z ∈ [0, κ_max].
En ambos el jacobiano k⊥ dk⊥ = x dx elimina la singularidad 1/k_z.

Las trazas se devuelven en 1/m³ con la normalización gaussiana, en la que
el espacio libre vale Im E^(0)_xx = Im H^(0)_xx = 2ω³/3c³.
"""

import logging
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import brentq, minimize_scalar

from .cavity_model import CavitySetup, DomainError, GreenCoefficients, IntegrationError, QuadratureSpec
from .constants import C, NEAR_WALL_WARNING_M
from .materials import ReflectionSet, branch_sqrt, reflection_set, setup_is_lossless
from .quadrature import integrate

logger = logging.getLogger(__name__)

COMPONENTS = ("e_perp_s", "e_perp_p", "e_par_p", "h_perp_s", "h_perp_p", "h_par_s")
_IS_S = np.array([True, False, False, True, False, True])

DEFAULT_QUADRATURE = QuadratureSpec()


class TracePair(NamedTuple):
    perp: float
    par: float
    perp_error: float
    par_error: float


class TraceSet(NamedTuple):
    """Las seis trazas no nulas por polarización, con su error estimado."""

    values: Dict[str, float]
    errors: Dict[str, float]
    panels: int

    def e_pair(self) -> TracePair:
        v, e = self.values, self.errors
        return TracePair(v["e_perp_s"] + v["e_perp_p"], v["e_par_p"],
                         e["e_perp_s"] + e["e_perp_p"], e["e_par_p"])

    def h_pair(self) -> TracePair:
        v, e = self.values, self.errors
        return TracePair(v["h_perp_s"] + v["h_perp_p"], v["h_par_s"],
                         e["h_perp_s"] + e["h_perp_p"], e["h_par_s"])


def kz(omega: float, k_perp):
    """k_z = √(ω²/c² − k⊥²) con Im k_z ≥ 0."""
    if omega <= 0:
        raise DomainError("kz requiere omega > 0")
    if np.any(np.asarray(k_perp) < 0):
        raise DomainError("kz requiere k_perp >= 0")
    out = branch_sqrt((omega / C) ** 2 - np.asarray(k_perp, dtype=float) ** 2)
    return out if out.ndim else complex(out)


def _check_point(setup: CavitySetup, omega: float, z: float) -> None:
    if omega <= 0:
        raise DomainError("omega debe ser positiva")
    if not 0 < z < setup.a_m:
        raise DomainError(f"z = {z!r} fuera del gap (0, {setup.a_m!r})")
    if min(z, setup.a_m - z) < NEAR_WALL_WARNING_M:
        logger.warning("z = %.3e m está a menos de 50 nm de un espejo", z)


def _log1p(w):
    """log(1 + w) complejo, exacto también para |w| ≪ 1."""
    modulus = 0.5 * np.log1p(w.real * (2.0 + w.real) + w.imag ** 2)
    return modulus + 1j * np.arctan2(w.imag, 1.0 + w.real)


def _expm1(u):
    """e^u − 1 complejo, exacto también para |u| ≪ 1."""
    x, y = u.real, u.imag
    out = np.expm1(x) * np.cos(y) - 2.0 * np.sin(0.5 * y) ** 2 + 1j * np.exp(x) * np.sin(y)
    return np.where(np.isneginf(x), -1.0 + 0j, out)


def _log_reflection(r, sigma, delta):
    """log(σr) = log(1 − δ); log1p cuando r está cerca de ±1."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(np.abs(delta) < 0.5, _log1p(-delta), np.log(sigma * r + 0j))


def _round_trip(m1: ReflectionSet, m2: ReflectionSet, pol: int, phase1, phase2):
    """(D + S, D − S, A) con D = r1 r2 e^{2ik_z a}, S = ½(r1 e^{2ik_z z} + r2 e^{2ik_z(a−z)}), A = 1 − D.

    Cada r se escribe σ(1 − δ) con σ = ±1 el signo más cercano. Con espejos casi
    perfectos y k_z a → 0 las tres cantidades son diferencias de números próximos
    a 1; aquí se forman con expm1/log1p a partir de δ = 1 ∓ r exacto.
    """
    r1, r2 = m1.r[pol], m2.r[pol]
    sigma1 = np.where(r1.real >= 0, 1.0, -1.0)
    sigma2 = np.where(r2.real >= 0, 1.0, -1.0)
    delta1 = np.where(sigma1 > 0, m1.minus[pol], m1.plus[pol])
    delta2 = np.where(sigma2 > 0, m2.minus[pol], m2.plus[pol])
    u1 = _log_reflection(r1, sigma1, delta1) + phase1
    u2 = _log_reflection(r2, sigma2, delta2) + phase2
    E1, E2, EU = _expm1(u1), _expm1(u2), _expm1(u1 + u2)
    near = EU - 0.5 * (E1 + E2)
    far = EU + 0.5 * (E1 + E2) + 2.0
    same = sigma1 == sigma2
    # σ1 = −σ2: D = −e^{u1+u2}, S = σ1(e^{u1} − e^{u2})/2, sin cancelaciones
    D = -(1.0 + EU)
    S = 0.5 * sigma1 * (E1 - E2)
    return (
        np.where(same, np.where(sigma1 > 0, far, near), D + S),
        np.where(same, np.where(sigma1 > 0, near, far), D - S),
        np.where(same, -EU, 2.0 + EU),
    )


def _fields(setup: CavitySetup, omega: float, z: float, kz_: np.ndarray, k2: np.ndarray,
            w_inv: np.ndarray, w_dir: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Numeradores complejos de las seis trazas y los denominadores A_s, A_p."""
    q2 = (omega / C) ** 2
    k = np.sqrt(np.maximum(k2, 0.0))
    R1 = reflection_set(setup.mirror1, omega, k, setup.T_K)
    R2 = reflection_set(setup.mirror2, omega, k, setup.T_K)
    phase1 = 2j * kz_ * z
    phase2 = 2j * kz_ * (setup.a_m - z)
    (s_plus, s_minus, As), (p_plus, p_minus, Ap) = (
        _round_trip(R1, R2, pol, phase1, phase2) for pol in (0, 1)
    )
    num = np.array([
        q2 * w_inv * s_plus,
        w_dir * p_minus,
        2.0 * k2 * w_inv * p_plus,
        w_dir * s_minus,
        q2 * w_inv * p_plus,
        2.0 * k2 * w_inv * s_plus,
    ])
    return num, np.array([As, Ap])


def _values(num: np.ndarray, A: np.ndarray) -> np.ndarray:
    denom = np.where(_IS_S[:, None], A[0][None, :], A[1][None, :])
    return (num / denom).real


def _sector_arrays(omega: float, x: np.ndarray, evanescent: bool):
    q = omega / C
    x = np.asarray(x, dtype=float)
    if evanescent:
        return 1j * x, q * q + x * x, np.full(x.shape, -1j), 1j * x * x
    return x + 0j, np.maximum(q * q - x * x, 0.0), np.ones(x.shape, dtype=complex), x * x + 0j


def _sector_fields(setup, omega, z, x, evanescent):
    kz_, k2, w_inv, w_dir = _sector_arrays(omega, x, evanescent)
    return _fields(setup, omega, z, kz_, k2, w_inv, w_dir)


def _sector_integrand(setup: CavitySetup, omega: float, z: float, evanescent: bool):
    def func(x):
        num, A = _sector_fields(setup, omega, z, x, evanescent)
        return _values(num, A)
    return func


def trace_density(setup: CavitySetup, omega: float, z: float, k_perp) -> np.ndarray:
    """Integrando por unidad de k⊥ de las seis trazas (filas en el orden de COMPONENTS)."""
    _check_point(setup, omega, z)
    k = np.atleast_1d(np.asarray(k_perp, dtype=float))
    kz_ = kz(omega, k)
    kz_ = np.atleast_1d(kz_)
    num, A = _fields(setup, omega, z, kz_, k * k, k / kz_, k * kz_)
    return _values(num, A)


# ---------------------------------------------------------------------------
# Polos y picos estrechos
# ---------------------------------------------------------------------------

def _sector_limits(setup: CavitySetup, omega: float, z: float, quad: QuadratureSpec, evanescent: bool):
    q = omega / C
    if not evanescent:
        return 0.0, q
    d = min(z, setup.a_m - z, setup.a_m)
    return 0.0, quad.tail_exponent / (2.0 * d)


def _scan_grid(omega: float, hi: float, evanescent: bool, setup: CavitySetup) -> np.ndarray:
    q = omega / C
    if evanescent:
        start = 1e-9 * min(q, hi)
        n = int(40 * np.log10(hi / start)) + 2
        return np.geomspace(start, hi, n)[:-1]
    modes = 2.0 * q * setup.a_m / np.pi
    lin = np.linspace(0.0, q, max(200, int(40 * modes)))[1:-1]
    log = q * np.geomspace(1e-9, 1.0, 360)[:-1]
    return np.unique(np.concatenate([lin, log]))


def _denominators(setup, omega, z, x, evanescent):
    return _sector_fields(setup, omega, z, np.atleast_1d(x), evanescent)[1]


def _find_poles(setup, omega, z, grid, evanescent) -> List[Tuple[float, int]]:
    """Raíces de A_α = 1 − r1 r2 e^{2ik_z a} para espejos sin pérdidas."""
    A_grid = _denominators(setup, omega, z, grid, evanescent)
    poles = []
    for pol in (0, 1):
        A = A_grid[pol]
        if evanescent:
            # A real: cambio de signo con r1 r2 e^{-2κa} acotado
            f = A.real
            bounded = (np.abs(1.0 - A[:-1]) < 1e6) & (np.abs(1.0 - A[1:]) < 1e6)
        else:
            # |r1 r2| = 1: A = 1 − e^{iθ}, se descartan los cruces con θ = π
            f = A.imag
            bounded = ((1.0 - A[:-1]).real > 0) & ((1.0 - A[1:]).real > 0)
        idx = np.nonzero((np.sign(f[:-1]) * np.sign(f[1:]) < 0) & bounded)[0]

        def scalar(x, pol=pol):
            value = _denominators(setup, omega, z, x, evanescent)[pol][0]
            return value.real if evanescent else value.imag

        for i in idx:
            x0 = brentq(scalar, grid[i], grid[i + 1], xtol=1e-300, rtol=4 * np.finfo(float).eps)
            if abs(_denominators(setup, omega, z, x0, evanescent)[pol][0]) < 1e-6:
                poles.append((float(x0), pol))
    return sorted(poles)


def _narrow_peaks(setup, omega, z, grid, evanescent, lo, hi) -> List[float]:
    """Puntos de corte alrededor de mínimos de |A_α| (resonancias con pérdidas)."""
    A_grid = _denominators(setup, omega, z, grid, evanescent)
    extra = []
    for pol in (0, 1):
        absA = np.abs(A_grid[pol])
        interior = np.nonzero((absA[1:-1] < absA[:-2]) & (absA[1:-1] < absA[2:]) & (absA[1:-1] < 0.5))[0] + 1
        for i in interior:
            res = minimize_scalar(
                lambda x, pol=pol: abs(_denominators(setup, omega, z, x, evanescent)[pol][0]),
                bounds=(grid[i - 1], grid[i + 1]), method="bounded",
                options={"xatol": 1e-12 * grid[i + 1]},
            )
            x0 = float(res.x)
            slope = abs(A_grid[pol][i + 1] - A_grid[pol][i - 1]) / (grid[i + 1] - grid[i - 1])
            width = float(res.fun) / slope if slope > 0 else 0.0
            extra.append(x0)
            for k in (1.0, 10.0):
                for p in (x0 - k * width, x0 + k * width):
                    if lo < p < hi:
                        extra.append(p)
    return extra


# ---------------------------------------------------------------------------
# Integración por sector
# ---------------------------------------------------------------------------

def _base_breakpoints(omega, lo, hi, evanescent):
    q = omega / C
    if evanescent:
        start = 1e-9 * min(q, hi)
        n = max(3, int(2 * np.log10(hi / start)) + 1)
        return np.concatenate([[lo], np.geomspace(start, hi, n)])
    return np.concatenate([[0.0], q * np.geomspace(1e-9, 1.0, 19)])


def _integrate_sector(setup: CavitySetup, omega: float, z: float, quad: QuadratureSpec,
                      evanescent: bool, resonances: bool):
    lo, hi = _sector_limits(setup, omega, z, quad, evanescent)
    q = omega / C
    abs_tol = quad.abs_floor * 2.0 * q ** 3 / 3.0
    func = _sector_integrand(setup, omega, z, evanescent)
    grid = _scan_grid(omega, hi, evanescent, setup)
    base = _base_breakpoints(omega, lo, hi, evanescent)
    label = "evanescente" if evanescent else "propagante"

    poles: List[Tuple[float, int]] = []
    if setup_is_lossless(setup, omega):
        poles = _find_poles(setup, omega, z, grid, evanescent)
    else:
        base = np.concatenate([base, _narrow_peaks(setup, omega, z, grid, evanescent, lo, hi)])

    value = np.zeros(len(COMPONENTS))
    error = np.zeros(len(COMPONENTS))
    panels = 0

    # ventanas simétricas alrededor de cada polo: el valor principal se obtiene
    # integrando f(x0 + t) + f(x0 - t) en t ∈ [0, w]
    xs = [p for p, _ in poles]
    windows = []
    for i, x0 in enumerate(xs):
        left = x0 - (xs[i - 1] if i > 0 else lo)
        right = (xs[i + 1] if i + 1 < len(xs) else hi) - x0
        windows.append(0.45 * min(left, right))

    chunks = []
    start = lo
    for x0, w in zip(xs, windows):
        chunks.append((start, x0 - w))
        start = x0 + w
    chunks.append((start, hi))

    n_pieces = len(chunks) + len(poles)
    for a, b in chunks:
        if b <= a:
            continue
        bps = np.concatenate([[a, b], base[(base > a) & (base < b)]])
        res = integrate(func, bps, rel_tol=quad.rel_tol, abs_tol=abs_tol / n_pieces,
                        max_panels=quad.max_panels, label=f"k⊥ {label}")
        value += res.value
        error += res.error
        panels += res.panels

    for (x0, pol), w in zip(poles, windows):
        def folded(t, x0=x0):
            return func(x0 + t) + func(x0 - t)

        res = integrate(folded, [0.0, 0.5 * w, w], rel_tol=quad.rel_tol, abs_tol=abs_tol / n_pieces,
                        max_panels=quad.max_panels, label=f"polo {label}")
        value += res.value
        error += res.error
        panels += res.panels
        if resonances:
            value += _pole_weight(setup, omega, z, x0, pol, evanescent, w)
    return value, error, panels


def _pole_weight(setup, omega, z, x0, pol, evanescent, w) -> np.ndarray:
    """Peso π|Im(N/A')| de la delta en un polo de ancho nulo, por componente."""
    num, _ = _sector_fields(setup, omega, z, np.array([x0]), evanescent)
    h = min(1e-6 * x0, 0.1 * w)
    A_side = _denominators(setup, omega, z, np.array([x0 - h, x0 + h]), evanescent)[pol]
    dA = (A_side[1] - A_side[0]) / (2.0 * h)
    if not np.isfinite(dA) or abs(dA) * x0 < 1e-12:
        raise IntegrationError(
            f"polo degenerado en x = {x0:.6e} (dA/dx = {dA!r})", value=None, error=None, panels=0,
        )
    weights = np.pi * np.abs((num[:, 0] / dA).imag)
    mask = _IS_S if pol == 0 else ~_IS_S
    return np.where(mask, weights, 0.0)


def scattering_traces(setup: CavitySetup, omega: float, z: float,
                      quad: Optional[QuadratureSpec] = None,
                      resonances_default: bool = False) -> TraceSet:
    """Las seis trazas de dispersión en (ω, z) con una cuadratura compartida."""
    quad = quad or DEFAULT_QUADRATURE
    _check_point(setup, omega, z)
    resonances = quad.include_resonances if quad.include_resonances is not None else resonances_default
    total = np.zeros(len(COMPONENTS))
    err = np.zeros(len(COMPONENTS))
    panels = 0
    for evanescent in (False, True):
        v, e, p = _integrate_sector(setup, omega, z, quad, evanescent, resonances)
        total += v
        err += e
        panels += p
    return TraceSet(dict(zip(COMPONENTS, total.tolist())), dict(zip(COMPONENTS, err.tolist())), panels)


def scattering_e_traces(setup: CavitySetup, omega: float, z: float,
                        quad: Optional[QuadratureSpec] = None) -> TracePair:
    """(Im E^sc_xx, Im E^sc_zz)."""
    return scattering_traces(setup, omega, z, quad).e_pair()


def scattering_h_traces(setup: CavitySetup, omega: float, z: float,
                        quad: Optional[QuadratureSpec] = None) -> TracePair:
    """(Im H^sc_xx, Im H^sc_zz): mismas integrales con r_s ↔ r_p."""
    return scattering_traces(setup, omega, z, quad).h_pair()


def cavity_traces(setup: CavitySetup, omega: float, z: float,
                  quad: Optional[QuadratureSpec] = None,
                  resonances_default: bool = False) -> GreenCoefficients:
    traces = scattering_traces(setup, omega, z, quad, resonances_default)
    e, h = traces.e_pair(), traces.h_pair()
    return GreenCoefficients(
        omega_rad_s=omega, z_m=z,
        e_perp_sc=e.perp, e_par_sc=e.par, h_perp_sc=h.perp, h_par_sc=h.par,
        errors={"e_perp": e.perp_error, "e_par": e.par_error,
                "h_perp": h.perp_error, "h_par": h.par_error},
    )


def fixed_grid_traces(setup: CavitySetup, omega: float, z: float, n_nodes: int = 10 ** 6,
                      tail_exponent: float = 70.0) -> Dict[str, float]:
    """Referencia de fuerza bruta: trapecios sobre nodos logarítmicos en cada sector."""
    _check_point(setup, omega, z)
    q = omega / C
    kmax = tail_exponent / (2.0 * min(z, setup.a_m - z))
    total = np.zeros(len(COMPONENTS))
    half = n_nodes // 2
    for evanescent, nodes in (
        (False, np.concatenate([[0.0], q * np.geomspace(1e-12, 1.0, half)])),
        (True, np.concatenate([[0.0], np.geomspace(1e-12 * min(q, kmax), kmax, half)])),
    ):
        func = _sector_integrand(setup, omega, z, evanescent)
        values = np.empty((len(COMPONENTS), nodes.size))
        for s in range(0, nodes.size, 50000):
            chunk = nodes[s:s + 50000]
            values[:, s:s + chunk.size] = func(chunk)
        total += trapezoid(values, nodes, axis=1)
    return dict(zip(COMPONENTS, total.tolist()))
