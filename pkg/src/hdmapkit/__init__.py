"""hdmapkit: numerical tooling for vectorized HD maps.

Instance matching, the supervised loss stack, vector-point preselection,
temporal contrastive sample mining, polyline rasterization, ego-aligned grid
consistency, temporal map merging, Chamfer-distance mAP evaluation, and a
deterministic synthetic-scene generator to exercise all of it.
"""

__version__ = "0.1.0"

from .errors import (
    DegenerateGeometryError,
    InvalidConfigError,
    InvalidInputError,
    MapFormatError,
)
from .types import (
    BBox,
    CATEGORIES,
    Category,
    Diagnostics,
    EvalConfig,
    GridMap,
    GridSpec,
    InstanceEmbedding,
    LocalVectorMap,
    LossWeights,
    PolyInstance,
    Pose2,
)
from .geometry import (
    bbox_of,
    compose_poses,
    invert_pose,
    polyline_length,
    relative_pose,
    resample_polyline,
    transform_points,
)
from .matching import (
    MatchResult,
    PointOrdering,
    apply_ordering,
    instance_cost,
    match_instances,
    match_points,
    solve_assignment,
)
from .losses import (
    classification_loss,
    combine_losses,
    direction_loss,
    focal_loss,
    instance_map_loss,
    point_loss,
    supervised_losses,
)
from .preselect import (
    PointQuery,
    ScoreMap,
    build_point_queries,
    encode_positions,
    flat_indices,
    gather_features,
    topk_coords,
)
from .contrastive import (
    AnchorSamples,
    assemble_samples,
    compute_instance_score,
    contrastive_loss,
    contrastive_loss_grad,
    find_negatives,
    find_positive,
    select_anchors,
)
from .raster import rasterize_instance, rasterize_map, stroke_radius
from .temporal import AlignedGrid, align_grid, merge_grids, mo_loss, mo_loss_grad
from .evaluation import EvalReport, ap_single, chamfer_distance, evaluate, match_for_eval
from .synth import SceneConfig, generate_embeddings, generate_scene, simulate_predictions

__all__ = [name for name in dir() if not name.startswith("_")]
