"""Constants for ris_vlc."""

# Base component constants
NAME = "RIS VLC Link Optimizer"
DOMAIN = "ris_vlc"
VERSION = "0.1.0"

# Environment
ENV_OUTPUT_DIR = "RIS_VLC_OUTPUT_DIR"

# Scenario kinds
KIND_RATE_P0 = "rate_p0"
KIND_WALL_BASELINE = "wall_baseline"
KIND_RIS_ONLY_BASELINE = "ris_only_baseline"
KIND_LC_LOS_BASELINE = "lc_los_baseline"
KIND_NOMA_MULTIUSER = "noma_multiuser"
KIND_EE_VS_K = "ee_vs_k"
KIND_RATE_VS_K = "rate_vs_k"
KIND_WAVELENGTH_SWEEP = "wavelength_sweep"
KIND_CONVERGENCE_TRACE = "convergence_trace"
KIND_ORACLE_GRID = "oracle_grid"

SCENARIO_KINDS = (
    KIND_RATE_P0,
    KIND_WALL_BASELINE,
    KIND_RIS_ONLY_BASELINE,
    KIND_LC_LOS_BASELINE,
    KIND_NOMA_MULTIUSER,
    KIND_EE_VS_K,
    KIND_RATE_VS_K,
    KIND_WAVELENGTH_SWEEP,
    KIND_CONVERGENCE_TRACE,
    KIND_ORACLE_GRID,
)

# LoS handling
LOS_AUTO = "auto"
LOS_ALWAYS = "always_los"
LOS_NEVER = "always_nlos"
LOS_MODES = (LOS_AUTO, LOS_ALWAYS, LOS_NEVER)

# Reflecting path families
PATH_RIS = "ris"
PATH_WALL = "wall"

# Surface planes: "yz" is the x = const wall, "xz" the y = const wall
PLANE_YZ = "yz"
PLANE_XZ = "xz"

GROW_ROWS = "rows"
GROW_COLS = "cols"

# Search dimension names
DIM_ROLL = "roll"
DIM_YAW = "yaw"
DIM_ETA_C = "eta_c"

# Configuration keys
CONF_KIND = "kind"
CONF_PARAMS = "params"
CONF_SCENE = "scene"
CONF_LINK = "link"
CONF_SWEEP = "sweep"
CONF_MONTE_CARLO = "monte_carlo"
CONF_OPTIMIZER = "optimizer"
CONF_ORACLE = "oracle"
CONF_OUTPUT = "output"

CONF_ROOM = "room"
CONF_AP = "ap"
CONF_USERS = "users"
CONF_POSITION = "position"
CONF_AZIMUTH = "azimuth_deg"
CONF_POLAR = "polar_deg"
CONF_BODY_OFFSET = "body_offset"
CONF_BLOCKERS = "blockers"
CONF_BASE = "base"
CONF_RADIUS = "radius"
CONF_HEIGHT = "height"
CONF_MIRROR_ARRAY = "mirror_array"
CONF_WALL = "wall"
CONF_ROWS = "rows"
CONF_COLS = "cols"
CONF_ELEMENTS = "elements"
CONF_ELEMENT_SIDE = "element_side"
CONF_ORIGIN = "origin"
CONF_PLANE = "plane"
CONF_ROLL = "roll_deg"
CONF_YAW = "yaw_deg"
CONF_GROW = "grow"

CONF_LOS_MODE = "los_mode"
CONF_ZETA = "zeta"
CONF_NUM_USERS = "num_users"
CONF_DC_BIAS = "dc_bias"

CONF_VARIABLE = "variable"
CONF_START = "start"
CONF_STOP = "stop"
CONF_STEPS = "steps"
CONF_VALUES = "values"

CONF_TRIALS = "trials"
CONF_SEED = "seed"
CONF_SAMPLE_ORIENTATION = "sample_orientation"
CONF_RANDOM_BLOCKERS = "random_blockers"

CONF_AGENTS = "agents"
CONF_ITERATIONS = "iterations"
CONF_A = "a"
CONF_ANGLE_POINTS = "angle_points"
CONF_INDEX_POINTS = "index_points"
CONF_NORMAL = "normal"

# Link budget defaults and the reference room geometry
DEFAULT_HALF_POWER_SEMIANGLE_DEG = 70.0
DEFAULT_PD_AREA = 1.0e-4
DEFAULT_OPTICAL_FILTER_GAIN = 1.0
DEFAULT_CONCENTRATOR_REF_INDEX = 1.5
DEFAULT_FOV_DEG = 85.0
DEFAULT_REFLECTIVITY_WALL = 0.8
DEFAULT_REFLECTIVITY_RIS = 0.95
DEFAULT_ETA_AIR = 1.0
DEFAULT_ETA_EXTRAORDINARY = 1.7
DEFAULT_ETA_ORDINARY = 1.5
DEFAULT_V_THRESHOLD = 1.34
DEFAULT_V_ZERO = 1.0
DEFAULT_V_APPLIED = 2.34
DEFAULT_LC_THICKNESS = 0.75e-3
DEFAULT_WAVELENGTH = 510e-9
DEFAULT_ELECTRO_OPTIC_COEFF = 12e-12
DEFAULT_BANDWIDTH = 200e6
DEFAULT_OPTICAL_POWER = 2.0
DEFAULT_ELEC_TO_OPT_RATIO = 3.0
DEFAULT_RESPONSIVITY = 0.53
DEFAULT_NOISE_PSD = 1.0e-21
DEFAULT_SENSITIVITY_DBM = -35.0

DEFAULT_P_DAC = 0.175
DEFAULT_P_FILTER = 0.0025
DEFAULT_P_PA = 0.280
DEFAULT_P_DRIVER = 2.758
DEFAULT_P_T_CIRCUIT = 3.250
DEFAULT_P_MIRROR_UNIT = 0.100
DEFAULT_P_ADC = 0.095
DEFAULT_P_TIA = 2.500
DEFAULT_P_LC = 0.320
DEFAULT_P_R_CIRCUIT = 0.0019

DEFAULT_ROOM = (5.0, 5.0, 3.0)
DEFAULT_AP = (2.5, 2.5, 3.0)
DEFAULT_DEVICE = (1.0, 2.5, 0.85)
DEFAULT_AZIMUTH_DEG = 180.0
DEFAULT_POLAR_DEG = 41.0
DEFAULT_BODY_OFFSET = (-0.36, 0.0)
DEFAULT_BLOCKER_RADIUS = 0.15
DEFAULT_BLOCKER_HEIGHT = 1.65

DEFAULT_MIRROR_ROWS = 10
DEFAULT_MIRROR_COLS = 30
DEFAULT_ELEMENT_SIDE = 0.1
DEFAULT_MIRROR_ORIGIN = (0.0, 1.0, 1.0)
DEFAULT_WALL_ORIGIN = (1.0, 0.0, 1.0)

DEFAULT_ZETA = 0.6
DEFAULT_NUM_USERS = 4
DEFAULT_DC_BIAS = 0.0

DEFAULT_TRIALS = 1
DEFAULT_SEED = 0
DEFAULT_RANDOM_BLOCKERS = 3

# Optimizer defaults
DEFAULT_AGENTS = 2
DEFAULT_ITERATIONS = 400
DEFAULT_A = 2.0

# Polar angle distribution of handheld devices
POLAR_MEAN_DEG = 41.0
POLAR_STD_DEG = 9.0

# Search box of the refractive index (off-the-shelf E7 cell)
ETA_C_BOUNDS = (1.5, 1.7)

ORACLE_MAX_DIMS = 4
DEFAULT_ANGLE_POINTS = 41
DEFAULT_INDEX_POINTS = 21

DEFAULT_OUTPUT = "results.csv"
CSV_SIGNIFICANT_DIGITS = 9

WAVELENGTH_NOTE = (
    "gain coefficient scales as 1/lambda: at matched settings 510 nm amplifies "
    "more than 670 nm; claims of 670 nm outperforming 510 nm are not reproduced "
    "by this gain model"
)

STARTUP_MESSAGE = f"""
-------------------------------------------------------------------
{NAME}
Version: {VERSION}
Joint mirror-array RIS and liquid-crystal receiver VLC simulator.
-------------------------------------------------------------------
"""
