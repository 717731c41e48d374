"""
Constantes físicas usadas por la librería.

Las magnitudes geométricas (trazas de Green, polarizabilidad) se manejan en
metros; las del átomo (momentos magnéticos, campo B, tasas) en unidades
gaussianas, que es donde las fórmulas de tasas tienen su forma natural.
"""

from scipy import constants as sc

# SI
HBAR = sc.hbar
K_B = sc.k
C = sc.c
EV = sc.e
A0 = sc.physical_constants["Bohr radius"][0]
AMU = sc.atomic_mass

# Gaussianas (CGS)
HBAR_CGS = sc.hbar * 1e7  # erg s
C_CGS = sc.c * 1e2  # cm/s
K_B_CGS = sc.k * 1e7  # erg/K
EV_CGS = sc.e * 1e7  # erg
MU_B_CGS = sc.physical_constants["Bohr magneton"][0] * 1e3  # erg/G
MU_N_CGS = sc.physical_constants["nuclear magneton"][0] * 1e3  # erg/G

# Conversiones
PER_M3_TO_PER_CM3 = 1e-6
ERG_PER_G_TO_J_PER_T = 1e-3

# Deuterio 1S1/2
D_W0_EV = 1.354e-6
D_G_E = 2.0023
D_G_NUCLEAR = 0.857407
D_MASS_KG = 3.344e-27

# Distancia mínima a un espejo antes de marcar el punto
NEAR_WALL_WARNING_M = 50e-9
