import os

CORE_VERSION = "1.0.0"

# Physical constants
EARTH_RADIUS_KM = 6371.0088
KM_PER_DEGREE = 111.195
MAX_PROJECTION_LATITUDE = 89.0
HOURS_PER_DAY = 24

# Default image geometry: 512 px at 5 km resized to 224 px
DEFAULT_IMAGE_PX = 224
DEFAULT_PATCH_PX = 28
DEFAULT_KM_PER_PX = 2 * 1250 / 224

# Forecast window
DEFAULT_HISTORY = 12
DEFAULT_HORIZON = 12
SPLIT_RATIOS = (0.7, 0.15, 0.15)

# Track validity
PRESSURE_MIN_HPA = 850.0
PRESSURE_MAX_HPA = 1025.0
MAX_HOURLY_STEP_DEG = 2.0

# Sinusoidal bases
SINUSOID_BASE = 10000.0
ROPE_BASE = 10000.0

# Prompt tokens
IMAGE_TOKEN = "<image>"
PAD_TOKEN = "<pad>"
PROMPT_LABEL_SEPARATOR = "\n"
DATETIME_PROMPT_FORMAT = "%Y-%m-%d %H:00:00"
DATETIME_CSV_FORMAT = "%Y-%m-%dT%H:00:00"

# File formats
DATA_FORMAT_RUN_CONFIG = "pipe_run"
DATA_FORMAT_RUN_CONFIG_VERSION = 1
DATA_FORMAT_CHECKPOINT = "pipe_checkpoint"
DATA_FORMAT_CHECKPOINT_VERSION = 1
DATA_FORMAT_METRICS = "pipe_metrics"
DATA_FORMAT_METRICS_VERSION = 1
DATA_FORMAT_FORECASTS = "pipe_forecasts"
DATA_FORMAT_FORECASTS_VERSION = 1
DATA_FORMAT_SPLIT = "pipe_split"
DATA_FORMAT_SPLIT_VERSION = 1

TRACKS_CSV_FILE = "tracks.csv"
TRACKS_CSV_COLUMNS = ["sequence_id", "datetime", "lat", "lng", "pressure"]
IMAGES_FOLDER = "images"
IMAGE_FILE_FORMAT = "pgm"
IMAGE_SIDECAR_FILE = "image.json"
SPLIT_MANIFEST_FILE = "split.json"
RESOLVED_CONFIG_FILE = "resolved_config.json"
CHECKPOINT_FILE = "model.pt"
LOSS_TRACE_FILE = "loss_trace.csv"
FORECASTS_FILE = "forecasts.json"
METRICS_FILE = "metrics.json"
REGRESSION_FILE = "regression.csv"
ABLATION_FILE = "ablation.csv"
POSITION_GRID_FILE = "position_grid.csv"
PE_MATRIX_FILE = "pe_matrix.csv"

OUTPUT_DIR_ENV = "PIPE_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "pipe_runs"
WORKER_LOG_FILE = "worker_error.log"
WORKER_READY = 0x1
WORKER_STARTUP_TIMEOUT = 120.0


def GetOutputPath(override: str = None) -> str:
    if override:
        return override
    return os.environ.get(OUTPUT_DIR_ENV) or os.path.join(os.getcwd(), DEFAULT_OUTPUT_DIR)


def CheckExists(path, makeIfNotExists=False):
    if path and not os.path.exists(path) and makeIfNotExists:
        os.makedirs(path)
