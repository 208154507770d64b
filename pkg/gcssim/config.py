#config.py

from fractions import Fraction

# === TIME UNITS (femtoseconds) ===
FS = 1
PS = 1_000
NS = 1_000_000
US = 1_000_000_000

TIME_UNITS = {"fs": FS, "ps": PS, "ns": NS, "us": US}

# === PARAMETER DEFAULTS ===
# 15 nm design point
DEFAULT_RHO = Fraction(1, 100_000)
DEFAULT_MU = Fraction(1, 10_000)
DEFAULT_KAPPA = 10 * PS
DEFAULT_DELTA0 = 4 * PS
DEFAULT_EPSILON = 500 * FS
DEFAULT_ELL = 2
DEFAULT_D = 0
DEFAULT_U = 0
DEFAULT_T_CLK = 500 * PS
DEFAULT_T_OSC = 250 * PS
DEFAULT_T_MEAS = 500 * PS
DEFAULT_T_CTR = 25 * PS
DEFAULT_BUFFER_STAGES = 2

# Published global-skew factor for the design point (ps per hop of diameter per kappa)
DESIGN_POINT_GLOBAL_FACTOR = Fraction(1223, 1000)

# Warn when the decision separator is not small against kappa
EPSILON_WARN_RATIO = Fraction(1, 10)

# === SCENARIO DEFAULTS ===
DEFAULT_DURATION = 1000 * NS
DEFAULT_RECORD_STRIDE = 100 * PS
DEFAULT_DELTA0_POLICY = "adversarial-extremes"
DEFAULT_M_POLICY = "always-m"
DEFAULT_UNLOCKED_POLICY = "adversarial-extremes"

DELTA0_POLICIES = ("fixed", "seeded-random", "adversarial-extremes")
M_POLICIES = ("always-m", "resolve-0", "resolve-1", "seeded-random", "adversarial")
UNLOCKED_POLICIES = ("pin-low", "pin-high", "adversarial-extremes", "seeded-random")
RANDOM_POLICIES = ("seeded-random",)

# === MONITOR ===
MONITOR_MODES = ("abort", "record", "off")
DEFAULT_MONITOR = "abort"

# === VERDICT ===
# Share of the run that must stay inside both bounds after the last violation
STABLE_SUFFIX_FRACTION = Fraction(1, 10)
# Local skew is reported this long before and after every scenario marker
MARKER_WINDOW = 10 * NS

# === FAIRBANKS DEFAULTS (abstract delay units) ===
FAIRBANKS_GATE_DELAY = 1
FAIRBANKS_LATCH_DELAY = 1
FAIRBANKS_FAST_EDGE = 1
FAIRBANKS_SLOW_EDGE = 8
FAIRBANKS_UNIT_FS = 1 * PS
FAIRBANKS_LINE_LENGTH = 7
FAIRBANKS_FAST_SOURCES = (2, 3, 4)
FAIRBANKS_SWAP_SOURCES = (3, 4)
FAIRBANKS_SWAP_TIME = 50 * NS
FAIRBANKS_HORIZON_TICKS = 10_000

# === TREE DEFAULTS ===
TREE_HOP_DELAY = 50 * PS
TREE_UNCERTAINTY = Fraction(5, 100)
TREE_UNCERTAINTY_WIDE = Fraction(10, 100)
TREE_SWEEP_SIDES = (2, 4, 8, 16, 32)

# === SWEEP ===
SWEEP_AXES = ("W", "mu", "rho", "delta0", "u", "tdc_variation")
DEFAULT_SWEEP_THREADS = 4

# === OUTPUT ===
DEFAULT_OUTPUT_DIR = "out"
OUTPUT_FORMATS = ("csv", "json", "plotly")
PHASE_DECIMALS = 12
REPORT_FLOAT_DIGITS = 6

# === LOGGING ===
LOGGER_NAME = "gcssim"
DEFAULT_LOG_DIR = "logs"

# Export constants
__all__ = [
    'FS', 'PS', 'NS', 'US', 'TIME_UNITS',
    'DEFAULT_RHO', 'DEFAULT_MU', 'DEFAULT_KAPPA', 'DEFAULT_DELTA0', 'DEFAULT_EPSILON',
    'DEFAULT_ELL', 'DEFAULT_D', 'DEFAULT_U', 'DEFAULT_T_CLK', 'DEFAULT_T_OSC',
    'DEFAULT_T_MEAS', 'DEFAULT_T_CTR', 'DEFAULT_BUFFER_STAGES',
    'DESIGN_POINT_GLOBAL_FACTOR', 'EPSILON_WARN_RATIO',
    'DEFAULT_DURATION', 'DEFAULT_RECORD_STRIDE', 'DEFAULT_DELTA0_POLICY',
    'DEFAULT_M_POLICY', 'DEFAULT_UNLOCKED_POLICY',
    'DELTA0_POLICIES', 'M_POLICIES', 'UNLOCKED_POLICIES', 'RANDOM_POLICIES',
    'MONITOR_MODES', 'DEFAULT_MONITOR', 'STABLE_SUFFIX_FRACTION', 'MARKER_WINDOW',
    'FAIRBANKS_GATE_DELAY', 'FAIRBANKS_LATCH_DELAY', 'FAIRBANKS_FAST_EDGE',
    'FAIRBANKS_SLOW_EDGE', 'FAIRBANKS_UNIT_FS', 'FAIRBANKS_LINE_LENGTH',
    'FAIRBANKS_FAST_SOURCES', 'FAIRBANKS_SWAP_SOURCES', 'FAIRBANKS_SWAP_TIME',
    'FAIRBANKS_HORIZON_TICKS',
    'TREE_HOP_DELAY', 'TREE_UNCERTAINTY', 'TREE_UNCERTAINTY_WIDE', 'TREE_SWEEP_SIDES',
    'SWEEP_AXES', 'DEFAULT_SWEEP_THREADS',
    'DEFAULT_OUTPUT_DIR', 'OUTPUT_FORMATS', 'PHASE_DECIMALS', 'REPORT_FLOAT_DIGITS',
    'LOGGER_NAME', 'DEFAULT_LOG_DIR'
]
