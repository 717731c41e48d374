"""
Tablas de datos de cada figura y escritores CSV/JSON deterministas.

Cada tabla tiene una columna de abscisa y, por cada curva, una columna de
valor y otra `<curva>_err` con el error estimado.
"""

import hashlib
import json
import logging
from typing import Callable, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field

from . import __version__
from .beam_transport import run_experiment
from .casimir import pressure_spectrum, pressure_spectrum_components
from .cavity_model import (
    ConfigError, ExperimentReport, FieldKind, MaterialKind, OutputFormat, Polarization,
    RunConfig, SpectralFilter, TE_FILTER, state_label,
)
from .constants import EV_CGS, MU_B_CGS, MU_N_CGS
from .hyperfine_atom import (
    breit_rabi_energies, cavity_rate, cavity_rates_vs_B, cavity_rates_vs_theta, diagonalize, total_rate_of,
    total_rates,
)
from .thermal_spectra import (
    planck_density, spectral_energy_density, temperature_sweep, thermal_energy_density, universal_te_density,
)

logger = logging.getLogger(__name__)

TE_MAGNETIC = SpectralFilter(polarization=Polarization.TE, field=FieldKind.MAGNETIC)


class FigureTable(BaseModel):
    name: str
    abscissa: str
    abscissa_unit: str
    curves: List[str] = Field(..., description="Nombre de cada curva (modelo o etiqueta de nivel)")
    unit: str = Field(..., description="Unidad de las curvas")
    rows: List[List[float]] = Field(default_factory=list, description="abscisa, (valor, error) por curva")
    notes: List[str] = Field(default_factory=list)

    @property
    def columns(self) -> List[str]:
        out = [self.abscissa]
        for curve in self.curves:
            out += [curve, f"{curve}_err"]
        return out

    def column(self, name: str) -> np.ndarray:
        return np.array([row[self.columns.index(name)] for row in self.rows])


def config_hash(config: RunConfig) -> str:
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def column_label(label: str) -> str:
    """"(3/2,-1/2)" → "F3/2_m-1/2", sin comas para el CSV."""
    F, m = label.strip("()").split(",")
    return f"F{F}_m{m}"


def _model_label(model: Optional[MaterialKind]) -> str:
    return model.value if model is not None else "config"


def _points(points: Optional[int], default: int) -> int:
    n = default if points is None else points
    if n < 2:
        raise ConfigError("--points debe ser >= 2", [f"points: {n} < 2"])
    return n


def _log_grid(lo: float, hi: float, points: Optional[int], per_decade: int) -> np.ndarray:
    default = int(np.ceil(np.log10(hi / lo) * per_decade)) + 1
    return np.geomspace(lo, hi, _points(points, default))


# ---------------------------------------------------------------------------
# Figuras de densidad de energía y presión
# ---------------------------------------------------------------------------

def energy_vs_z(config: RunConfig, points: Optional[int] = None,
                model: Optional[MaterialKind] = None) -> FigureTable:
    base = config.build_setup(model)
    a, T = base.a_m, base.T_K
    u_bb = planck_density(T)
    zs = np.linspace(0.025 * a, 0.975 * a, _points(points, 9))
    drude, plasma = base.with_kind(MaterialKind.DRUDE), base.with_kind(MaterialKind.PLASMA)
    rows = []
    for z in zs:
        d = thermal_energy_density(drude, z, quad=config.quadrature)
        p = thermal_energy_density(plasma, z, quad=config.quadrature)
        rows.append([z * 1e6, d.value / u_bb, d.error_estimate / u_bb, p.value / u_bb, p.error_estimate / u_bb,
                     universal_te_density(a, z, T) / u_bb, 0.0, 1.0, 0.0])
    return FigureTable(name="energy-vs-z", abscissa="z", abscissa_unit="um",
                       curves=["drude", "plasma", "universal", "blackbody"], unit="u_BB", rows=rows)


def energy_vs_T(config: RunConfig, points: Optional[int] = None,
                model: Optional[MaterialKind] = None) -> FigureTable:
    base = config.build_setup(model)
    temps = np.linspace(50.0, 400.0, _points(points, 8))
    z = config.z_m
    drude = temperature_sweep(base.with_kind(MaterialKind.DRUDE), temps, z, config.quadrature)
    plasma = temperature_sweep(base.with_kind(MaterialKind.PLASMA), temps, z, config.quadrature)
    rows = []
    for k, T in enumerate(temps):
        rows.append([
            T,
            drude.te[k].value, drude.te[k].error_estimate,
            plasma.te[k].value, plasma.te[k].error_estimate,
            drude.tm[k].value, drude.tm[k].error_estimate,
            plasma.tm[k].value, plasma.tm[k].error_estimate,
            universal_te_density(base.a_m, z, T), 0.0,
        ])
    return FigureTable(name="energy-vs-T", abscissa="T", abscissa_unit="K",
                       curves=["drude_TE", "plasma_TE", "drude_TM", "plasma_TM", "universal_TE"],
                       unit="J/m^3", rows=rows,
                       notes=[f"beta_drude_TE={drude.te_exponent:.4f}"])


def te_spectrum(config: RunConfig, points: Optional[int] = None,
                model: Optional[MaterialKind] = None) -> FigureTable:
    base = config.build_setup(model)
    z = config.z_m
    drude, plasma = base.with_kind(MaterialKind.DRUDE), base.with_kind(MaterialKind.PLASMA)
    rows = []
    for w in _log_grid(1e7, 1e12, points, config.output.points_per_decade):
        te = spectral_energy_density(drude, w, z, TE_FILTER, config.quadrature)
        mag = spectral_energy_density(drude, w, z, TE_MAGNETIC, config.quadrature)
        pl = spectral_energy_density(plasma, w, z, TE_FILTER, config.quadrature)
        rows.append([w, te.value, te.error, mag.value, mag.error, pl.value, pl.error])
    return FigureTable(name="te-spectrum", abscissa="omega", abscissa_unit="rad/s",
                       curves=["drude_TE", "drude_TE_magnetic", "plasma_TE"], unit="J s/m^3", rows=rows)


def casimir_spectrum(config: RunConfig, points: Optional[int] = None,
                     model: Optional[MaterialKind] = None) -> FigureTable:
    base = config.build_setup(model)
    z = config.z_m
    drude, plasma = base.with_kind(MaterialKind.DRUDE), base.with_kind(MaterialKind.PLASMA)
    rows = []
    for w in _log_grid(1e7, 1e11, points, config.output.points_per_decade):
        parts = pressure_spectrum_components(drude, w, z, config.quadrature)
        pl = pressure_spectrum(plasma, w, z, config.quadrature)
        rows.append([
            w,
            parts["magnetic_perp"] + parts["magnetic_par"],
            parts["magnetic_perp_error"] + parts["magnetic_par_error"],
            pl.value, pl.error,
            parts["magnetic_perp"], parts["magnetic_perp_error"],
            parts["magnetic_par"], parts["magnetic_par_error"],
        ])
    return FigureTable(name="casimir-spectrum", abscissa="omega", abscissa_unit="rad/s",
                       curves=["drude", "plasma", "drude_magnetic_perp", "drude_magnetic_par"],
                       unit="Pa s", rows=rows)


# ---------------------------------------------------------------------------
# Figuras del átomo
# ---------------------------------------------------------------------------

def levels(config: RunConfig, points: Optional[int] = None,
           model: Optional[MaterialKind] = None) -> FigureTable:
    atom = config.atom.resolved()
    w0_j = atom.w0_ev * EV_CGS * 1e-7
    b_per_x = atom.w0_ev * EV_CGS / (atom.g_electron * MU_B_CGS + atom.g_nuclear * MU_N_CGS)
    rows, labels = [], []
    for x in np.linspace(0.0, 4.0, _points(points, 41)):
        system = diagonalize(x * b_per_x, config.atom.theta_rad, atom)
        oracle = breit_rabi_energies(x * b_per_x, atom)
        labels = [column_label(s) for s in system.label_strings()]
        row = [x]
        for E, E_br in zip(system.energies_J, oracle):
            row += [E / w0_j, abs(E - E_br) / w0_j]
        rows.append(row)
    return FigureTable(name="levels", abscissa="x", abscissa_unit="1", curves=labels, unit="W0", rows=rows,
                       notes=["el error es la diferencia con la fórmula de Breit-Rabi"])


def _rate_row(rates) -> List[float]:
    totals = total_rates(rates)
    errors = np.array(rates.errors).sum(axis=0) if rates.errors is not None else np.zeros_like(totals)
    row = []
    for value, err in zip(totals, errors):
        row += [float(value), float(err)]
    return row


def rate_vs_z(config: RunConfig, points: Optional[int] = None,
              model: Optional[MaterialKind] = None) -> FigureTable:
    base = config.build_setup(model)
    atom = config.atom.resolved()
    F, m = config.atom.initial_state
    system = diagonalize(config.atom.B_G, 0.0, atom)
    i = system.index_of(F, m)
    rows = []
    for z0 in np.linspace(0.05 * base.a_m, 0.95 * base.a_m, _points(points, 19)):
        row = [z0 * 1e6]
        for kind in (MaterialKind.DRUDE, MaterialKind.PLASMA):
            rates = cavity_rate(system, base.with_kind(kind), z0, config.quadrature)
            row += [total_rate_of(rates, F, m), float(np.array(rates.errors)[:, i].sum())]
        rows.append(row)
    return FigureTable(name="rate-vs-z", abscissa="z0", abscissa_unit="um", curves=["drude", "plasma"],
                       unit="1/s", rows=rows, notes=[f"estado {state_label(F, m)}, B a lo largo de z"])


def rates_vs_B(config: RunConfig, points: Optional[int] = None,
               model: Optional[MaterialKind] = None) -> FigureTable:
    setup = config.build_setup(model)
    atom = config.atom.resolved()
    fields = _log_grid(10.0, 1000.0, points, config.output.points_per_decade)
    sweep = cavity_rates_vs_B(setup, config.z_m, fields, config.atom.theta_rad, atom, config.quadrature)
    rows = [[float(B)] + _rate_row(r) for B, r in zip(fields, sweep)]
    labels = [column_label(state_label(F, m)) for F, m in sweep[0].labels]
    return FigureTable(name="rates-vs-B", abscissa="B", abscissa_unit="G", curves=labels, unit="1/s",
                       rows=rows, notes=[f"modelo {_model_label(model)}"])


def rates_vs_theta(config: RunConfig, points: Optional[int] = None,
                   model: Optional[MaterialKind] = None) -> FigureTable:
    setup = config.build_setup(model)
    atom = config.atom.resolved()
    thetas = np.linspace(0.0, np.pi, _points(points, 13))
    sweep = cavity_rates_vs_theta(setup, config.z_m, config.atom.B_G, thetas, atom, config.quadrature)
    rows = [[float(t)] + _rate_row(r) for t, r in zip(thetas, sweep)]
    labels = [column_label(state_label(F, m)) for F, m in sweep[0].labels]
    return FigureTable(name="rates-vs-theta", abscissa="theta", abscissa_unit="rad", curves=labels, unit="1/s",
                       rows=rows, notes=[f"modelo {_model_label(model)}"])


FIGURES: Dict[str, Callable[..., FigureTable]] = {
    "energy-vs-z": energy_vs_z,
    "energy-vs-T": energy_vs_T,
    "te-spectrum": te_spectrum,
    "casimir-spectrum": casimir_spectrum,
    "levels": levels,
    "rate-vs-z": rate_vs_z,
    "rates-vs-B": rates_vs_B,
    "rates-vs-theta": rates_vs_theta,
}


def build_figure(name: str, config: RunConfig, points: Optional[int] = None,
                 model: Optional[MaterialKind] = None) -> FigureTable:
    if name not in FIGURES:
        raise ConfigError(f"figura desconocida: {name}", [f"figure: use una de {', '.join(FIGURES)}"])
    logger.info("calculando figura %s", name)
    return FIGURES[name](config, points, model)


# ---------------------------------------------------------------------------
# Escritura
# ---------------------------------------------------------------------------

def _metadata(config: RunConfig, kind: str, model: Optional[MaterialKind]) -> Dict[str, str]:
    return {
        "output": kind,
        "version": __version__,
        "config_sha256": config_hash(config),
        "model": _model_label(model),
    }


def _fmt(value: float) -> str:
    return f"{value:.10e}"


def render_figure(table: FigureTable, config: RunConfig, fmt: OutputFormat = OutputFormat.CSV,
                  model: Optional[MaterialKind] = None) -> str:
    meta = _metadata(config, table.name, model)
    units = {table.abscissa: table.abscissa_unit}
    for curve in table.curves:
        units[curve] = units[f"{curve}_err"] = table.unit
    if OutputFormat(fmt) == OutputFormat.JSON:
        document = {"metadata": meta, "columns": table.columns, "units": units,
                    "notes": table.notes, "rows": table.rows}
        return json.dumps(document, ensure_ascii=False, indent=2) + "\n"
    lines = [f"# {key}: {value}" for key, value in meta.items()]
    lines.append("# units: " + ", ".join(f"{k}={v}" for k, v in units.items()))
    lines += [f"# note: {note}" for note in table.notes]
    lines.append(",".join(table.columns))
    lines += [",".join(_fmt(v) for v in row) for row in table.rows]
    return "\n".join(lines) + "\n"


def run_beam(config: RunConfig, model: Optional[MaterialKind] = None) -> ExperimentReport:
    setup = config.build_setup(model)
    return run_experiment(setup, config.beam, config.atom.B_G, config.atom.theta_rad,
                          tuple(config.atom.initial_state), config.atom.resolved(), config.quadrature)


def render_report(report: ExperimentReport, config: RunConfig, fmt: OutputFormat = OutputFormat.JSON,
                  model: Optional[MaterialKind] = None) -> str:
    meta = _metadata(config, "run-beam", model)
    if OutputFormat(fmt) == OutputFormat.JSON:
        return json.dumps({"metadata": meta, "report": report.to_json()}, ensure_ascii=False, indent=2) + "\n"
    lines = [f"# {key}: {value}" for key, value in meta.items()]
    lines += [f"# warning: {w}" for w in report.warnings]
    lines.append("quantity,value,unit")
    lines.append(f"survival_fraction,{_fmt(report.survival_fraction)},1")
    lines.append(f"channel_width,{_fmt(report.channel_width_m)},m")
    lines.append(f"transition_probability,{_fmt(report.transition_probability)},1")
    lines.append(f"no_measurable_transitions,{int(report.no_measurable_transitions)},bool")
    lines.append(f"tau,{_fmt(report.tau_s)},s")
    for label, p in report.populations.items():
        lines.append(f"population_{column_label(label)},{_fmt(p)},1")
    labels = report.rate_matrix.get("labels", [])
    for label, total in zip(labels, report.rate_matrix.get("total_s-1", [])):
        lines.append(f"total_rate_{column_label(label)},{_fmt(total)},1/s")
    return "\n".join(lines) + "\n"
