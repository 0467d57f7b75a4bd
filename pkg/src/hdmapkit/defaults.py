"""Published default constants, kept in one place so nothing drifts.

Every default the rest of the package falls back to lives here; the test
suite asserts this table verbatim.
"""

# Rasterization
GRID_WIDTH = 400            # cells along x
GRID_HEIGHT = 200           # cells along y
GRID_RESOLUTION = 0.15      # meters per cell
GRID_X_MIN = -30.0
GRID_Y_MIN = -15.0
RASTER_THRESHOLD = 0.4      # minimum confidence for an instance to be projected

# Evaluation
CD_THRESHOLDS = (0.5, 1.0, 1.5)   # meters
RANGE_X = 60.0                    # full perception width along x, meters
RANGE_Y = 30.0                    # full perception width along y, meters
RESAMPLE_N = 100                  # points per instance before Chamfer distance

# Combined loss weights
LAMBDA_CLS = 2.0
LAMBDA_PTS = 5.0
LAMBDA_DIRS = 0.005
LAMBDA_CST = 0.1
LAMBDA_OL = 1.0
LAMBDA_VAR = 1.0
LAMBDA_DIST = 0.1

# Classification loss
FOCAL_ALPHA = 0.25
FOCAL_GAMMA = 2.0

# Instance-map (discriminative) loss margins
DELTA_V = 0.5
DELTA_D = 3.0

# Matching cost weights (mirror the cls/pts loss weights)
MATCH_W_CLS = 2.0
MATCH_W_PTS = 5.0
MATCH_N_POINTS = 20

# Contrastive sample selection
MAX_ANCHORS_PER_LABEL = 3
NEGATIVES_PER_LABEL = 3
POSITIVE_RADIUS = 5.0       # meters; positives farther than this are rejected
INSTANCE_SCORE_TAU = 1.0    # meters of mean point error that zeroes the score

# Temporal consistency
TEMPORAL_WINDOW = 2         # history frames entering the map-occupancy loss


def as_dict() -> dict:
    """Snapshot of the defaults table (for echoing in reports and tests)."""
    return {
        k: v
        for k, v in globals().items()
        if k.isupper() and not k.startswith("_")
    }
