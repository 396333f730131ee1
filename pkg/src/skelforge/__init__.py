"""Skeleton ground-truth extraction toolkit.

Semi-automatic skeleton annotation for binary shapes: candidate ladders from
curve evolution, branch-level pruning with live reconstruction-error and
simplicity feedback, multi-annotator consensus, standardized GT export, and
benchmark metrics.
"""

from .consensus import (AnnotatorSubmission, IntegrationResult, hints,
                        integrate, merge_branches, skeleton_key)
from .errors import (ContourTooShort, DecodeError, DimensionMismatch,
                     Disconnected, EmptyMask, EmptyShape, EmptySkeleton,
                     IncompatibleLadders, InvariantViolation, MissingLadder,
                     MissingRadii, MissingRoot, MultipleComponents,
                     NoSubmissions, NotALeafBranch, NotSkeletonPoint,
                     SkelforgeError, TooFewPreservedEndpoints, UnknownBranchId,
                     VersionMismatch)
from .graph import (Branch, SkeletonGraph, decompose, geodesic_path,
                    prune_branch, prune_by_boxes)
from .metrics import (MetricReport, aep, bulls_eye, default_f1_tolerance,
                      f1_score, metric_report, re_xor, reconstruct,
                      reconstruction_error, simplicity)
from .raster import (BinaryMask, Contour, DistanceField, connected_components,
                     distance_transform, fill_holes, trace_boundary)
from .skeletonize import (CandidateLadder, DcePolygon, SkeletonRaster,
                          build_ladder, dce_evolve, medial_axis)
from .storage import (DatasetItem, GTRecord, SessionState, class_label,
                      export_gt, import_gt, load_dataset, load_ladder,
                      load_session, load_similarity_csv, make_gt_record,
                      render_thumbs, replay_states, resolve_skeleton,
                      save_ladder, save_session)

__version__ = "0.1.0"

__all__ = [
    "AnnotatorSubmission", "BinaryMask", "Branch", "CandidateLadder",
    "Contour", "DatasetItem", "DcePolygon", "DistanceField", "GTRecord",
    "IntegrationResult", "MetricReport", "SessionState", "SkeletonGraph",
    "SkeletonRaster", "aep", "build_ladder", "bulls_eye", "class_label",
    "connected_components", "dce_evolve", "decompose", "default_f1_tolerance",
    "distance_transform", "export_gt", "f1_score", "fill_holes",
    "geodesic_path", "hints", "import_gt", "integrate", "load_dataset",
    "load_ladder", "load_session", "load_similarity_csv", "make_gt_record",
    "medial_axis", "merge_branches", "metric_report", "prune_branch",
    "prune_by_boxes", "re_xor", "reconstruct", "reconstruction_error",
    "render_thumbs", "replay_states", "resolve_skeleton", "save_ladder",
    "save_session", "simplicity", "skeleton_key", "trace_boundary",
    # errors
    "SkelforgeError", "EmptyMask", "EmptyShape", "EmptySkeleton",
    "MultipleComponents", "ContourTooShort", "MissingRadii", "NotALeafBranch",
    "UnknownBranchId", "TooFewPreservedEndpoints", "Disconnected",
    "NotSkeletonPoint", "DimensionMismatch", "NoSubmissions",
    "IncompatibleLadders", "MissingRoot", "DecodeError", "InvariantViolation",
    "VersionMismatch", "MissingLadder",
]
