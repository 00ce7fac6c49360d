"""
Constants used throughout the dimer-cff laboratory.
Centralizes tolerances, numeric limits and command line names.
"""

import math


class ToleranceConstants:
    """Absolute tolerances for numerical assertions."""
    # Kasteleyn / Kenyon side
    EDGE_PROBABILITY_IMAG = 1e-9
    EDGE_PROBABILITY_RANGE = 1e-9
    KENYON_IMAG = 1e-9
    KENYON_MOMENT = 1e-9
    HEIGHT_CONSISTENCY = 1e-9
    SINGULAR_PIVOT = 1e-13

    # Instanton law
    PMF_NORMALIZATION = 1e-12
    TRUNCATION_TAIL = 1e-14
    DEGENERATE_TWIST = 1e-12

    # Harmonic measure solve
    LINEAR_RESIDUAL = 1e-8
    ENERGY_SYMMETRY = 1e-8

    # Torus kernels
    THETA_TAIL = 1e-14
    MONODROMY = 1e-9
    U_M_IMAG = 1e-9
    BOUNDARY_POINT = 1e-12


class NumericConstants:
    """Numeric parameters of series, grids and quadratures."""
    # Log of the smallest weight kept in lattice sums (e^-40 ~ 4e-18)
    LATTICE_SUM_LOG_CUTOFF = 40.0
    THETA_LOG_CUTOFF = 40.0

    # Harmonic-measure grid cap (points per side)
    MAX_GRID_POINTS = 512
    DEFAULT_CYLINDER_GRID = (256, 128)
    DEFAULT_DOMAIN_RESOLUTION = 16

    # Residue sampling steps
    RESIDUE_STEPS = (1e-3, 1e-4)

    # Quadrature nodes per segment for U_2 integrals
    QUADRATURE_NODES = 24

    MAX_MONOMIAL_DEGREE = 4
    TWO_PI_I = 2j * math.pi


class LatticeConstants:
    """Lattice conventions and size limits."""
    BLACK = "black"
    WHITE = "white"

    PLANAR_RECTANGLE = "planar_rectangle"
    PLANAR_MULTIHOLED = "planar_multiholed"
    CYLINDER = "cylinder"

    STYLE_DD = "DD"
    STYLE_ND = "ND"

    # Edge weights of the Kasteleyn gauge
    HORIZONTAL_WEIGHT = 1.0 + 0.0j
    VERTICAL_WEIGHT = 1j

    # Largest graph assembled as a dense matrix
    MAX_DENSE_VERTICES = 40000

    # Backtracking enumeration guard
    DEFAULT_ENUMERATION_LIMIT = 10 ** 7
    # Transfer counting is used while the frontier stays below this width
    MAX_TRANSFER_WIDTH = 22


class FileConstants:
    """File and path related constants."""
    DEFAULT_SUITE_FILENAME = "default_suite.yaml"
    SUMMARY_SUFFIX = "_summary.json"
    TABLE_SUFFIX = ".csv"
    LOG_FILENAME = "dimer_cff.log"
    DEFAULT_OUTPUT_DIR = "results"


class LoggingConstants:
    """Logging-related constants."""
    DEBUG = 1
    INFO = 2
    WARNING = 3
    ERROR = 4
    CRITICAL = 5

    CONSOLE = 1
    FILE = 2

    LEVEL_STRINGS = {
        DEBUG: "DBG",
        INFO: "INF",
        WARNING: "WRN",
        ERROR: "ERR",
        CRITICAL: "CRI"
    }


class AppConstants:
    """General application constants."""
    APP_NAME = "dimer-cff"

    ENV_THREADS = "DIMER_CFF_THREADS"

    # Subcommands
    CMD_RUN = "run"
    CMD_KENYON_VERIFY = "kenyon-verify"
    CMD_GAP_STUDY = "gap-study"
    CMD_U2_CONVERGENCE = "u2-convergence"
    CMD_CFF_LAW = "cff-law"
    CMD_CONTINUUM_U2 = "continuum-u2"
    CMD_DET = "det"
    CMD_EDGE_PROBS = "edge-probs"
    CMD_ENUMERATE = "enumerate"

    # Suite names used in reports
    SUITE_KENYON = "kenyon"
    SUITE_GAP = "gap"
    SUITE_U2 = "u2"
    SUITE_CFF_LAW = "cff-law"

    DEFAULT_TAU = 1.0
    DEFAULT_GAP_K_VALUES = (2, 3, 4)
    DEFAULT_U2_K_VALUES = (8, 16, 32)
    DEFAULT_U2_STYLE = "ND"
