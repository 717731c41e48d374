"""
Integración adaptativa de integrandos vectoriales con scipy.integrate.cubature
(regla Gauss–Kronrod de 21 nodos).

El integrando recibe un array 1-D de nodos y devuelve (m, n) con m
componentes; los puntos de corte interiores parten el intervalo y nunca se
evalúan. La tolerancia es por componente: atol + rtol·|I|.
"""

import logging
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.integrate import cubature

from .cavity_model import IntegrationError

logger = logging.getLogger(__name__)


class QuadResult(NamedTuple):
    value: np.ndarray
    error: np.ndarray
    panels: int


def integrate(func: Callable[[np.ndarray], np.ndarray],
              breakpoints: Sequence[float],
              rel_tol: float = 1e-8,
              abs_tol: float = 0.0,
              max_panels: int = 2000,
              label: str = "integral") -> QuadResult:
    """Integra `func` sobre [breakpoints[0], breakpoints[-1]]."""
    bp = np.unique(np.asarray(breakpoints, dtype=float))
    if bp.size < 2:
        return QuadResult(np.zeros(1), np.zeros(1), 0)

    def nodes_first(x):
        fx = np.asarray(func(x[:, 0]), dtype=float)
        return (fx[None, :] if fx.ndim == 1 else fx).T

    interior = [[p] for p in bp[1:-1]]
    res = cubature(nodes_first, [bp[0]], [bp[-1]], rule="gk21", rtol=rel_tol, atol=abs_tol,
                   max_subdivisions=max_panels, points=interior or None)
    value = np.atleast_1d(np.asarray(res.estimate, dtype=float))
    error = np.atleast_1d(np.asarray(res.error, dtype=float))
    panels = int(res.subdivisions) + bp.size - 1
    if not np.all(np.isfinite(value)):
        raise IntegrationError(f"{label}: integrando no finito", value=value, error=error, panels=panels)
    if res.status != "converged":
        raise IntegrationError(
            f"{label}: sin convergencia tras {res.subdivisions} subdivisiones",
            value=value, error=error, panels=panels,
        )
    logger.debug("%s: %d paneles, error %s", label, panels, error)
    return QuadResult(value, error, panels)
