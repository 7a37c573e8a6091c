from __future__ import annotations

BOUNDARY_TAGS = ("left", "right", "top", "bottom")

# Polynomial fits for alumina particles: coefficients in increasing powers of phi.
ALUMINA_VISCOSITY = (1.0, 39.11, 533.9)
ALUMINA_CONDUCTIVITY = (1.0, 4.5503)

# Cavity used for the convergence table: Omega = ]0,2[ x ]0,1[, coarsest mesh 256 triangles.
CAVITY_WIDTH = 2.0
CAVITY_HEIGHT = 1.0
TABLE_BASE_NX = 16
TABLE_BASE_NY = 8

# Neither parameter set fixes the buoyancy coefficient; these values keep the flow
# buoyancy driven while the boundary layers stay resolvable on desk meshes.
TABLE_PARAMS = {
    "Re": 100.0,
    "Pr": 1.0,
    "Sc": 1.0,
    "Sc_f": 1e4,
    "Le": 1e4,
    "N_BT": 0.586,
    "T0": 1.0,
    "beta": 0.1,
    "phi_m": 0.1,
}

FIGURE_PARAMS = {
    "Re": 700.0,
    "Pr": 6.0,
    "Sc": 1.0,
    "Sc_f": 1e10,
    "Le": -1e10,
    "N_BT": 0.586,
    "T0": 1.0,
    "beta": 0.01,
    "phi_m": 0.1,
}

# Manufactured solutions live on the unit square, coarsest mesh 128 triangles.
MMS_BASE_N = 8

# Parameter-file keys and the ModelParams fields they feed.
PARAMETER_KEYS = {
    "re": "Re",
    "pr": "Pr",
    "sc": "Sc",
    "scf": "Sc_f",
    "le": "Le",
    "nbt": "N_BT",
    "t0": "T0",
    "beta": "beta",
    "phi_m": "phi_m",
    "cutoff_r": "cutoff_radius",
    "case": "case",
}

ENV_PREFIX = "NANOFLOW_"

EOC_COLUMNS = ("phi_L6", "T_L6", "u_L2")
ERROR_KEYS = ("phi_L6", "T_L6", "u_L2", "phi_W16", "T_W16", "u_H1", "p_L2")
