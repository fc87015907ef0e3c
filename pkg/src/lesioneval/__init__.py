"""Lesion-wise evaluation of 3D binary segmentation masks."""

__version__ = "0.1.0"

from .volume import Volume, binarize, check_compatibility  # noqa: E402,F401
from .components import (  # noqa: E402,F401
    Lesion,
    LesionSet,
    find_connected_components,
    lesion_stats,
)
from .matching import (  # noqa: E402,F401
    CandidatePair,
    MatchSet,
    bbox_overlap,
    compute_iou,
    generate_candidates,
    greedy_match,
    match_lesions,
)
from .metrics import (  # noqa: E402,F401
    DetectionCounts,
    ImageMetrics,
    LesionPairMetrics,
    assd,
    compute_image_metrics,
    compute_instance_metrics,
    compute_lesion_metrics,
    dice,
    hd95,
    surface_voxels,
)
from .nifti import read_volume, write_volume  # noqa: E402,F401
from .pipeline import ManifestRow, RunConfig, evaluate_pair, evaluate_sample  # noqa: E402,F401
from .stratify import SIZE_BINS, SizeBin, categorize, rollup, stratify  # noqa: E402,F401
