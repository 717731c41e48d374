"""
Modelos de datos (pydantic) y jerarquía de errores de la librería.

Todas las magnitudes físicas llevan la unidad en el nombre del campo.
"""

from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .constants import A0, C, D_G_E, D_G_NUCLEAR, D_MASS_KG, D_W0_EV, ERG_PER_G_TO_J_PER_T, EV, HBAR


# ---------------------------------------------------------------------------
# Errores
# ---------------------------------------------------------------------------

class CavityError(Exception):
    """Error base de la librería."""


class DomainError(CavityError, ValueError):
    """Argumento fuera del dominio físico de la operación."""


class IntegrationError(CavityError):
    """La cuadratura no alcanzó la tolerancia pedida."""

    def __init__(self, message: str, value=None, error=None, panels: int = 0):
        super().__init__(message)
        self.value = value
        self.error = error
        self.panels = panels


class ConfigError(CavityError):
    """Configuración inválida; `diagnostics` lleva una línea por clave."""

    def __init__(self, message: str, diagnostics: Optional[List[str]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


# ---------------------------------------------------------------------------
# Materiales
# ---------------------------------------------------------------------------

class MaterialKind(str, Enum):
    DRUDE = "drude"
    PLASMA = "plasma"


class GammaScaling(str, Enum):
    CONSTANT = "constant"
    LINEAR_IN_T = "linear-in-T"


GAMMA_REFERENCE_T_K = 300.0


class LorentzOscillator(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    strength: float = Field(..., ge=0.0, description="Intensidad adimensional f")
    omega_0_rad_s: float = Field(..., gt=0.0, description="Frecuencia de resonancia")
    damping_rad_s: float = Field(default=0.0, ge=0.0, description="Amortiguamiento")


class MaterialModel(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str = Field(..., description="Etiqueta del material")
    kind: MaterialKind = Field(default=MaterialKind.DRUDE, description="drude o plasma")
    omega_p_rad_s: float = Field(..., gt=0.0, description="Frecuencia de plasma")
    gamma_rad_s: float = Field(default=0.0, ge=0.0, description="Frecuencia de relajación a 300 K")
    gamma_scaling: GammaScaling = Field(default=GammaScaling.CONSTANT, description="Dependencia de γ con T")
    core: List[LorentzOscillator] = Field(default_factory=list, description="Osciladores de electrones ligados")

    @model_validator(mode="before")
    @classmethod
    def convert_ev_keys(cls, data):
        """Acepta omega_p_ev / gamma_ev y los pasa a rad/s."""
        if not isinstance(data, dict):
            return data
        data = dict(data)
        for key in ("omega_p", "gamma"):
            ev_key, rad_key = f"{key}_ev", f"{key}_rad_s"
            if ev_key in data:
                if rad_key in data:
                    raise ValueError(f"use {ev_key} o {rad_key}, no ambos")
                data[rad_key] = float(data.pop(ev_key)) * EV / HBAR
        return data

    def gamma_at(self, T: float) -> float:
        """γ efectivo a la temperatura T (cero en el modelo de plasma)."""
        if self.kind == MaterialKind.PLASMA:
            return 0.0
        if self.gamma_scaling == GammaScaling.LINEAR_IN_T:
            return self.gamma_rad_s * T / GAMMA_REFERENCE_T_K
        return self.gamma_rad_s

    def as_kind(self, kind: MaterialKind) -> "MaterialModel":
        return self.model_copy(update={"kind": MaterialKind(kind)})


class ConstantReflection(BaseModel):
    """Gancho de pruebas: coeficientes de reflexión fijos, independientes de (ω, k⊥)."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    r_s_re: float = 0.0
    r_s_im: float = 0.0
    r_p_re: float = 0.0
    r_p_im: float = 0.0

    @property
    def r_s(self) -> complex:
        return complex(self.r_s_re, self.r_s_im)

    @property
    def r_p(self) -> complex:
        return complex(self.r_p_re, self.r_p_im)

    def swapped(self) -> "ConstantReflection":
        return ConstantReflection(r_s_re=self.r_p_re, r_s_im=self.r_p_im,
                                  r_p_re=self.r_s_re, r_p_im=self.r_s_im)


class Mirror(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    material: MaterialModel
    thickness_m: Optional[float] = Field(default=None, gt=0.0, description="Espesor; None = semi-infinito")
    constant_reflection: Optional[ConstantReflection] = None

    @property
    def lambda_p_m(self) -> float:
        return C / self.material.omega_p_rad_s


AU = MaterialModel(name="Au", kind=MaterialKind.DRUDE, omega_p_rad_s=1.37e16, gamma_rad_s=5.32e13)
PT = MaterialModel(name="Pt", kind=MaterialKind.DRUDE, omega_p_rad_s=7.75e15, gamma_rad_s=1.05e14)
MATERIAL_PRESETS: Dict[str, MaterialModel] = {"Au": AU, "Pt": PT}


# ---------------------------------------------------------------------------
# Cavidad y cuadratura
# ---------------------------------------------------------------------------

class CavitySetup(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    a_m: float = Field(..., gt=0.0, description="Ancho del gap")
    T_K: float = Field(..., gt=0.0, description="Temperatura")
    mirror1: Mirror = Field(..., description="Espejo en z = 0")
    mirror2: Mirror = Field(..., description="Espejo en z = a")

    @classmethod
    def symmetric(cls, a_m: float, T_K: float, material: MaterialModel,
                  thickness_m: Optional[float] = None) -> "CavitySetup":
        mirror = Mirror(material=material, thickness_m=thickness_m)
        return cls(a_m=a_m, T_K=T_K, mirror1=mirror, mirror2=mirror)

    def with_reflection(self, r_s: complex, r_p: complex) -> "CavitySetup":
        """Copia con ambos espejos sustituidos por reflexión constante."""
        hook = ConstantReflection(r_s_re=r_s.real, r_s_im=r_s.imag, r_p_re=r_p.real, r_p_im=r_p.imag)
        return self.model_copy(update={
            "mirror1": self.mirror1.model_copy(update={"constant_reflection": hook}),
            "mirror2": self.mirror2.model_copy(update={"constant_reflection": hook}),
        })

    def with_kind(self, kind: MaterialKind) -> "CavitySetup":
        return self.model_copy(update={
            "mirror1": self.mirror1.model_copy(update={"material": self.mirror1.material.as_kind(kind)}),
            "mirror2": self.mirror2.model_copy(update={"material": self.mirror2.material.as_kind(kind)}),
        })

    @property
    def identical_mirrors(self) -> bool:
        return self.mirror1 == self.mirror2

    def warnings(self) -> List[str]:
        out = []
        for label, mirror in (("mirror1", self.mirror1), ("mirror2", self.mirror2)):
            if mirror.constant_reflection is None and mirror.lambda_p_m >= self.a_m:
                out.append(f"{label}: lambda_p = {mirror.lambda_p_m:.3e} m no es << a = {self.a_m:.3e} m")
        return out


class QuadratureSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    rel_tol: float = Field(default=1e-8, gt=0.0, description="Tolerancia relativa en k⊥")
    abs_floor: float = Field(default=1e-12, ge=0.0, description="Piso absoluto relativo a 2q³/3")
    max_panels: int = Field(default=4000, ge=1, description="Máximo de paneles por integral")
    tail_exponent: float = Field(default=70.0, gt=0.0, description="Corte evanescente e^-tail_exponent")
    include_resonances: Optional[bool] = Field(default=None, description="Polos de modos guiados sin pérdidas; None = según observable")
    omega_rel_tol: float = Field(default=1e-5, gt=0.0, description="Tolerancia relativa de la integral en ω")
    omega_min_rad_s: float = Field(default=1e4, gt=0.0, description="Límite inferior en ω")
    omega_max_x: float = Field(default=40.0, gt=0.0, description="Corte superior ħω/k_BT")


class GreenCoefficients(BaseModel):
    omega_rad_s: float
    z_m: float
    e_perp_sc: float = Field(..., description="Im E^sc_xx, 1/m³")
    e_par_sc: float = Field(..., description="Im E^sc_zz, 1/m³")
    h_perp_sc: float = Field(..., description="Im H^sc_xx, 1/m³")
    h_par_sc: float = Field(..., description="Im H^sc_zz, 1/m³")
    errors: Dict[str, float] = Field(default_factory=dict, description="Error estimado por traza")

    @property
    def free_space(self) -> float:
        return 2.0 * (self.omega_rad_s / C) ** 3 / 3.0

    @property
    def h_perp_cav(self) -> float:
        return self.h_perp_sc + self.free_space

    @property
    def h_par_cav(self) -> float:
        return self.h_par_sc + self.free_space

    @property
    def e_perp_cav(self) -> float:
        return self.e_perp_sc + self.free_space

    @property
    def e_par_cav(self) -> float:
        return self.e_par_sc + self.free_space

    def to_json(self) -> Dict:
        data = self.model_dump()
        data.update(h_perp_cav=self.h_perp_cav, h_par_cav=self.h_par_cav)
        return data


# ---------------------------------------------------------------------------
# Espectros
# ---------------------------------------------------------------------------

class Polarization(str, Enum):
    TE = "TE"
    TM = "TM"
    BOTH = "both"


class FieldKind(str, Enum):
    ELECTRIC = "electric"
    MAGNETIC = "magnetic"
    BOTH = "both"


class SpectralFilter(BaseModel):
    model_config = ConfigDict(frozen=True)

    polarization: Polarization = Polarization.BOTH
    field: FieldKind = FieldKind.BOTH

    def components(self) -> List[str]:
        """Combinaciones exclusivas (polarización-campo) que deja pasar el filtro."""
        pols = ["TE", "TM"] if self.polarization == Polarization.BOTH else [self.polarization.value]
        fields = ["electric", "magnetic"] if self.field == FieldKind.BOTH else [self.field.value]
        return [f"{p}-{f}" for p in pols for f in fields]


FULL_FILTER = SpectralFilter()
TE_FILTER = SpectralFilter(polarization=Polarization.TE)
TM_FILTER = SpectralFilter(polarization=Polarization.TM)


class SpectralValue(BaseModel):
    value: float
    error: float
    components: Dict[str, float] = Field(default_factory=dict)


class EnergyDensityResult(BaseModel):
    value: float = Field(..., description="Densidad de energía, J/m³")
    error_estimate: float = Field(..., description="Error estimado, J/m³")
    components: Dict[str, float] = Field(default_factory=dict, description="J/m³ por (polarización-campo)")
    warnings: List[str] = Field(default_factory=list)

    def to_json(self) -> Dict:
        return self.model_dump()


class PressureResult(BaseModel):
    value: float = Field(..., description="Presión, Pa (positivo = repulsiva)")
    error_estimate: float = Field(default=0.0, description="Pa")
    warnings: List[str] = Field(default_factory=list)

    def to_json(self) -> Dict:
        return self.model_dump()


# ---------------------------------------------------------------------------
# Átomo
# ---------------------------------------------------------------------------

def state_label(F: float, m: float) -> str:
    return f"({Fraction(F).limit_denominator(2)},{Fraction(m).limit_denominator(2)})"


class AtomConstants(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str = "D"
    nuclear_spin: float = Field(default=1.0, gt=0.0, description="I")
    g_electron: float = D_G_E
    g_nuclear: float = D_G_NUCLEAR
    w0_ev: float = Field(default=D_W0_EV, gt=0.0, description="Desdoblamiento hiperfino")
    mass_kg: float = Field(default=D_MASS_KG, gt=0.0)

    @field_validator("nuclear_spin")
    @classmethod
    def half_integer(cls, v):
        if abs(2 * v - round(2 * v)) > 1e-12:
            raise ValueError("el espín nuclear debe ser múltiplo de 1/2")
        return v


ATOM_PRESETS: Dict[str, AtomConstants] = {
    "D": AtomConstants(),
    "H": AtomConstants(name="H", nuclear_spin=0.5, g_nuclear=5.585695, w0_ev=5.874e-6, mass_kg=1.6735e-27),
    "Na23": AtomConstants(name="Na23", nuclear_spin=1.5, g_nuclear=1.478, w0_ev=7.3065e-6, mass_kg=3.8175e-26),
    "Rb87": AtomConstants(name="Rb87", nuclear_spin=1.5, g_nuclear=1.834, w0_ev=2.8333e-5, mass_kg=1.4432e-25),
}


class HyperfineSystem(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    B_G: float
    theta_rad: float = Field(default=0.0, description="Ángulo entre B y la normal a los espejos")
    atom: AtomConstants
    energies_J: np.ndarray = Field(..., description="Energías en J, en el orden de `labels`")
    labels: List[Tuple[float, float]] = Field(..., description="(F, m_F) de cada estado")
    eigenvectors: np.ndarray = Field(..., description="Columnas en la base |m_I, m_S>")
    basis: List[Tuple[float, float]] = Field(..., description="(m_I, m_S) de cada vector de la base")

    @property
    def size(self) -> int:
        return len(self.labels)

    def index_of(self, F: float, m: float) -> int:
        for i, (f, mm) in enumerate(self.labels):
            if abs(f - F) < 1e-9 and abs(mm - m) < 1e-9:
                return i
        raise DomainError(f"estado {state_label(F, m)} inexistente")

    def label_strings(self) -> List[str]:
        return [state_label(F, m) for F, m in self.labels]


class DipoleMatrices(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    mu_x: np.ndarray = Field(..., description="Componente a lo largo del haz (⊥ a B), erg/G")
    mu_y: np.ndarray = Field(..., description="Componente η = ζ × x, erg/G")
    mu_zeta: np.ndarray = Field(..., description="Componente a lo largo de B, erg/G")

    def scaled(self, factor: float) -> "DipoleMatrices":
        return DipoleMatrices(mu_x=self.mu_x * factor, mu_y=self.mu_y * factor, mu_zeta=self.mu_zeta * factor)

    def si(self) -> "DipoleMatrices":
        return self.scaled(ERG_PER_G_TO_J_PER_T)


class RateMatrix(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    gamma: np.ndarray = Field(..., description="gamma[f, i]: tasa i → f en s⁻¹")
    labels: List[Tuple[float, float]]
    context: str = Field(default="free", description="free o cavity")
    errors: Optional[np.ndarray] = Field(default=None, description="Error estimado por entrada")

    def generator(self) -> np.ndarray:
        G = np.array(self.gamma, dtype=float)
        np.fill_diagonal(G, 0.0)
        np.fill_diagonal(G, -G.sum(axis=0))
        return G

    def to_json(self) -> Dict:
        return {
            "labels": [state_label(F, m) for F, m in self.labels],
            "context": self.context,
            "gamma_s-1": self.gamma.tolist(),
        }


class PopulationVector(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    p: np.ndarray
    labels: List[Tuple[float, float]]

    @field_validator("p")
    @classmethod
    def check_probabilities(cls, v):
        v = np.asarray(v, dtype=float)
        if np.any(v < -1e-12):
            raise ValueError("probabilidades negativas")
        if abs(v.sum() - 1.0) > 1e-10:
            raise ValueError(f"las probabilidades suman {v.sum()!r}")
        return v

    @classmethod
    def pure(cls, labels: List[Tuple[float, float]], F: float, m: float) -> "PopulationVector":
        p = np.zeros(len(labels))
        for i, (f, mm) in enumerate(labels):
            if abs(f - F) < 1e-9 and abs(mm - m) < 1e-9:
                p[i] = 1.0
                return cls(p=p, labels=labels)
        raise DomainError(f"estado {state_label(F, m)} inexistente")

    def as_dict(self) -> Dict[str, float]:
        return {state_label(F, m): float(x) for (F, m), x in zip(self.labels, self.p)}


# ---------------------------------------------------------------------------
# Haz y configuración de ejecución
# ---------------------------------------------------------------------------

class BeamConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    v_m_s: float = Field(default=20.0, gt=0.0, description="Velocidad longitudinal")
    L_m: float = Field(default=1e-2, gt=0.0, description="Longitud de los espejos")
    mass_kg: float = Field(default=D_MASS_KG, gt=0.0)
    v_transverse_m_s: float = Field(default=0.0, description="Velocidad transversal inicial")
    alpha0_m3: float = Field(default=4.5 * A0 ** 3, gt=0.0, description="Polarizabilidad estática (convención gaussiana)")
    omega0_rad_s: float = Field(default=11.65 * EV / HBAR, gt=0.0, description="Frecuencia del oscilador único")
    capture_distance_m: float = Field(default=10e-9, gt=0.0, description="Distancia a la que el átomo se da por capturado")

    @property
    def tau_s(self) -> float:
        return self.L_m / self.v_m_s


class AtomConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    isotope: str = Field(default="D", description="Preset del átomo")
    constants: Optional[AtomConstants] = Field(default=None, description="Sustituye al preset")
    B_G: float = Field(default=10.0, ge=0.0)
    theta_rad: float = Field(default=np.pi / 2, description="Ángulo entre B y el eje z")
    initial_state: Tuple[float, float] = Field(default=(1.5, -0.5), description="(F, m_F)")

    @field_validator("isotope")
    @classmethod
    def known_isotope(cls, v):
        if v not in ATOM_PRESETS:
            raise ValueError(f"isótopo desconocido: {v}; opciones {sorted(ATOM_PRESETS)}")
        return v

    def resolved(self) -> AtomConstants:
        return self.constants or ATOM_PRESETS[self.isotope]


class MirrorConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    material: str = Field(default="Au", description="Preset o nombre definido en `materials`")
    thickness_m: Optional[float] = Field(default=None, gt=0.0)


class CavityConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    a_m: float = Field(default=2e-6, gt=0.0)
    T_K: float = Field(default=300.0, gt=0.0)
    mirror1: MirrorConfig = Field(default_factory=MirrorConfig)
    mirror2: MirrorConfig = Field(default_factory=MirrorConfig)
    z_m: Optional[float] = Field(default=None, gt=0.0, description="Punto de evaluación; None = a/2")


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


class OutputConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    format: OutputFormat = OutputFormat.CSV
    path: Optional[str] = None
    points_per_decade: int = Field(default=8, ge=1)


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    cavity: CavityConfig = Field(default_factory=CavityConfig)
    materials: Dict[str, MaterialModel] = Field(default_factory=dict)
    atom: AtomConfig = Field(default_factory=AtomConfig)
    beam: BeamConfig = Field(default_factory=BeamConfig)
    quadrature: QuadratureSpec = Field(default_factory=QuadratureSpec)
    output: OutputConfig = Field(default_factory=OutputConfig)

    @model_validator(mode="after")
    def materials_resolvable(self):
        known = set(MATERIAL_PRESETS) | set(self.materials)
        for key in ("mirror1", "mirror2"):
            name = getattr(self.cavity, key).material
            if name not in known:
                raise ValueError(f"cavity.{key}.material: material desconocido '{name}'")
        if self.cavity.z_m is not None and self.cavity.z_m >= self.cavity.a_m:
            raise ValueError("cavity.z_m debe estar dentro del gap")
        return self

    def material(self, name: str) -> MaterialModel:
        return self.materials.get(name) or MATERIAL_PRESETS[name]

    def build_setup(self, model: Optional[MaterialKind] = None) -> CavitySetup:
        mirrors = []
        for cfg in (self.cavity.mirror1, self.cavity.mirror2):
            material = self.material(cfg.material)
            if model is not None:
                material = material.as_kind(model)
            mirrors.append(Mirror(material=material, thickness_m=cfg.thickness_m))
        return CavitySetup(a_m=self.cavity.a_m, T_K=self.cavity.T_K, mirror1=mirrors[0], mirror2=mirrors[1])

    @property
    def z_m(self) -> float:
        return self.cavity.z_m if self.cavity.z_m is not None else self.cavity.a_m / 2


class ExperimentReport(BaseModel):
    populations: Dict[str, float] = Field(..., description="Poblaciones a la salida")
    survival_fraction: float
    channel_width_m: float
    transition_probability: float = Field(..., description="1 - población del estado inicial")
    no_measurable_transitions: bool
    tau_s: float
    initial_state: str
    rate_matrix: Dict = Field(default_factory=dict)
    warnings: List[str] = Field(default_factory=list)

    def to_json(self) -> Dict:
        return self.model_dump()


class APIResponse(BaseModel):
    success: bool = Field(..., description="Indica si la solicitud fue exitosa")
    data: Optional[Dict] = Field(default=None, description="Datos de la respuesta")
    error: Optional[str] = Field(default=None, description="Mensaje de error si hubo fallo")
