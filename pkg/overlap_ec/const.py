"""Constants for overlap_ec."""

import json
from logging import Logger, getLogger
from pathlib import Path

LOGGER: Logger = getLogger(__package__)

DOMAIN = "overlap_ec"
VERSION: str = json.loads(
    (Path(__file__).parent / "manifest.json").read_text(encoding="utf-8")
)["version"]

# Sweep file keys
CONF_SEED = "seed"
CONF_THREADS = "threads"
CONF_K = "k"
CONF_Q = "q"
CONF_R = "r"
CONF_N = "n"
CONF_RUNS_PER_POINT = "runs_per_point"
CONF_SCHEDULE = "schedule"
CONF_SCHEDULE_EPSILON = "schedule_epsilon"
CONF_EPSILON_EXPONENT = "epsilon_exponent"
CONF_F_OF_N = "f_of_n"
CONF_OUTPUT = "output"
CONF_LOGGER = "logger"
CONF_DRAIN = "drain"
CONF_TOLERANCE = "tolerance"

# Oracle caps
ORACLE_MAX_VARIABLES = 30
ORACLE_MAX_SOLUTIONS = 1 << 20
ORACLE_MAX_PAIRS = 10**10
EXPECTED_Z_MAX_VARIABLES = 200
EXACT_ARITHMETIC_MAX_VARIABLES = 64

# Root finding
DOMAIN_TOLERANCE = 1e-12
R_UP_TOLERANCE = 1e-8
ROOT_RESIDUAL_TOLERANCE = 1e-10
BISECTION_MAX_ITER = 200
R_UP_SCAN_MAX = 20.0
R_UP_SCAN_POINTS = 2000

# Trajectories
ODE_STEP = 1e-4
ODE_MAX_STEP = 1e-3
ODE_T_MAX = 0.999
SAMPLES_PER_RUN = 1000
MU_RELATIVE_TOLERANCE = 0.1

# Defaults
DEFAULT_EPSILON_EXPONENT = 0.75
DEFAULT_SCHEDULE = "default"
DEFAULT_SCHEDULE_EPSILON = 0.01
DEFAULT_F_OF_N = "ln2"
DEFAULT_DRAIN = "drain"
DEFAULT_SEED = 0
DEFAULT_THREADS = 1

SCHEDULE_KINDS = ("default", "constant", "adaptive-sketch")
ODE_MODES = ("paper-ode", "recurrence-ode")
ODE_MODE_ALIASES = {"reduced-ode": "paper-ode"}
DRAIN_MODES = ("drain", "keep-lazy")

# Exit codes
EXIT_OK = 0
EXIT_IO = 1
EXIT_INVALID_PARAMETERS = 2
EXIT_RESOURCE_LIMIT = 3
EXIT_NUMERICAL = 4
EXIT_REPLAY_MISMATCH = 5

DEFAULT_Q_GRID = "0.01:0.99:0.01"
DEFAULT_LOG_LEVEL = "info"
LOG_FORMAT = "%(log_color)s%(asctime)s %(levelname)-8s%(reset)s %(name)s: %(message)s"
