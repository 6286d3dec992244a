"""
Configuration settings for KineticLimitLab
All magic numbers are defined here as named constants
"""
import math
import os
from pathlib import Path

# Application Settings
APP_NAME = "KineticLimitLab"
APP_VERSION = "1.0.0"

# File Storage Settings
BASE_DIR = Path(os.environ.get("KLL_HOME", Path.home() / "KineticLimitLab"))
RUNS_DIR = BASE_DIR / "runs"
LOGS_DIR = BASE_DIR / "logs"
DATE_FORMAT = "%Y%m%d_%H%M%S"

# Run artifact names
SERIES_FILE = "series.csv"
FIELDS_FILE = "fields.csv"
SUMMARY_FILE = "summary.json"
MANIFEST_FILE = "manifest.json"
ENERGY_REPORT_FILE = "energy_report.json"
RUN_LOG_FILE = "#runlog.txt"
CLOSURE_TABLE_FILE = "closure_table.csv"
CONSTANTS_JSON_FILE = "constants.json"
CONSTANTS_CSV_FILE = "constants.csv"
CONVERGENCE_FILE = "convergence.json"
SWEEP_FILE = "sweep.csv"
NSF_SERIES_FILE = "nsf_series.csv"
ABORT_CHECKPOINT_FILE = "abort.kll"

# Band defaults
DEFAULT_N_X = 2  # x-sphere radius (strict)
DEFAULT_N_V = 2  # v-cube halfwidth (strict)
DEFAULT_GAMMA = 1.0 / 18.0  # exponent of the epsilon-tied cutoff radius

# Kinetic parameters
DEFAULT_EPSILON = 0.2
DEFAULT_NU_STAR = 1.0
DEFAULT_KAPPA = math.sqrt(3.0)
NU_STAR_PER_NU = 12.0  # nu = nu_star / 12

# Time stepping
DEFAULT_DT = 1e-3
DEFAULT_T_END = 0.5
DEFAULT_QUAD_DT = 1e-4
DEFAULT_PICARD_ITERATIONS = 20
DT_SAFETY = 0.5  # factor c of the dt cap c*min(eps, transport dt)
RK4_REAL_STABILITY = 2.78  # RK4 stability interval on the negative real axis
RK4_IMAG_STABILITY = 2.8  # RK4 stability interval on the imaginary axis
PROGRESS_LOG_INTERVAL = 100  # log progress every N steps

# Limit study
DEFAULT_EPS_LIST = (0.4, 0.2, 0.1, 0.05)
S1_SLOPE_RANGE = (0.8, 1.2)
NSF_DEFAULT_DT = 1e-4
NSF_DEFAULT_T_END = 0.1

# Tolerances
TOL_GRAM = 1e-12
KERNEL_RESIDUAL_LIMIT = 1e-9
CONSTANTS_TARGET_GAP = 1e-3  # reported per constant by the constants command
TOL_IDENTITY = 1e-9
TOL_ENERGY_RELATIVE = 1e-8  # relative to E(f0)^2
PICARD_RATIO_LIMIT = 1.0
PICARD_RATIO_EXPECTED = 0.5
PICARD_CONVERGED = 1e-14

# Checkpoint format
CHECKPOINT_MAGIC = b"KLL1"
CHECKPOINT_KIND_SPECTRAL = 0
CHECKPOINT_KIND_X = 1

# Threads
THREADS_ENV_VAR = "KLL_THREADS"

# CLI exit codes
EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_USAGE = 2

# Logging Settings
LOG_LEVEL = "INFO"
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_FILE_MAX_BYTES = 10 * 1024 * 1024  # 10 MB
LOG_FILE_BACKUP_COUNT = 5  # Keep 5 backup log files
