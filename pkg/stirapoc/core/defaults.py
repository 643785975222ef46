import math

# integrator
DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
DEFAULT_MAX_STEP = math.inf
DEFAULT_SAMPLE_INTERVAL = 0.01
DEFAULT_METHOD = "DOP853"
MAX_TOLERANCE = 1e-2

# charts and guards
DEFAULT_STOKES_SIGN = 1
POLE_GUARD = 1e-9
CLASSIFY_TOL = 1e-9
RANK_THRESHOLD = 1e-10
HAMILTONIAN_DRIFT_ABORT = 1e-6
CONSTRAINT_TOL = 1e-8

# stirap branch
MARGIN_THRESHOLD = 0.01
MARGIN_WARNING = 0.1
DEFAULT_TRIPOD_EPSILON = 0.02
DEFAULT_THETA3_TARGET = math.pi / 4

# momentum map
DEFAULT_SAMPLE_BUDGET = 4096
DEFAULT_IMAGE_BOX = {
    "theta": (0.1, math.pi - 0.1),
    "p_theta": (-10.0, 10.0),
    "p_phi": (-10.0, 10.0),
}
DEFAULT_BOUNDARY_POINTS = 200
DEFAULT_BOUNDARY_THETA = (0.05, math.pi / 2 - 0.01)
DEFAULT_SINGULAR_LINE_POINTS = 201

# singular reduction
DEFAULT_SECTION_GRID = 401
DEFAULT_PI1_RANGE = (-0.95, 0.95)
DEFAULT_PI2_RANGE = (-3.0, 3.0)
PINCH_INNER_RADIUS = 3
PINCH_OUTER_RADIUS = 40

# metrics and search
MIN_METRIC_SAMPLES = 8
ZERO_CONTROL_FRACTION = 1e-12
DEFAULT_SEARCH_GRID = 41
DEFAULT_SEARCH_MAX_EVALS = 500
DEFAULT_WORKERS = 1
DEFAULT_TREND_P_PHI = (10.0, 15.0, 20.0, 30.0)
DEFAULT_TREND_P_RHO = 30.0
DEFAULT_TREND_T = 30.0

# cli
DEFAULT_OUTPUT_DIR = "outputs"
DEFAULT_OUTPUT_FORMAT = "tsv"
DEFAULT_FLOAT_FORMAT = "%.17g"
DEFAULT_VERBOSE = False
