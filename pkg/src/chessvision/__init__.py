"""chessvision: digitize images of physical chessboards into FEN.

The pipeline locates the board by iterative line and lattice-point
detection, rectifies it with a homography, splits it into 64 squares,
classifies each square into 13 classes, and resolves the probabilities
into a legal piece placement with chess census constraints.
"""

from .board import (
    BoardLocation,
    DetectionConfig,
    DetectionError,
    GridCandidate,
    check_board_location,
    locate_board,
    split_squares,
)
from .classify import (
    ClassificationError,
    baseline_classifier,
    classify_squares,
    load_probability_file,
    make_backend,
    register_backend,
)
from .estimator import ChessDigitizer
from .fen import FenError, decode_fen, encode_fen
from .geometry import (
    GeometryError,
    Homography,
    Point2,
    Segment2,
    homography_from_quad,
    homography_least_squares,
    intersections,
    point_line_distance,
    triangle_area2,
    warp_crop,
)
from .infer import (
    PieceCensusLimits,
    argmax_position,
    census_violations,
    infer_position,
)
from .pieces import NUM_CLASSES, PieceClass
from .pipeline import (
    DigitizationResult,
    PipelineConfig,
    StageTimings,
    amortization_report,
    bench_intersections,
    digitize,
    watch,
)

__version__ = "0.1.0"

__all__ = [
    "BoardLocation", "DetectionConfig", "DetectionError", "GridCandidate",
    "check_board_location", "locate_board", "split_squares",
    "ClassificationError", "baseline_classifier", "classify_squares",
    "load_probability_file", "make_backend", "register_backend",
    "ChessDigitizer",
    "FenError", "decode_fen", "encode_fen",
    "GeometryError", "Homography", "Point2", "Segment2",
    "homography_from_quad", "homography_least_squares", "intersections",
    "point_line_distance", "triangle_area2", "warp_crop",
    "PieceCensusLimits", "argmax_position", "census_violations",
    "infer_position",
    "NUM_CLASSES", "PieceClass",
    "DigitizationResult", "PipelineConfig", "StageTimings",
    "amortization_report", "bench_intersections", "digitize", "watch",
]
