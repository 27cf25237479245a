"""Graph-constrained changepoint detection."""

from .evaluation import MatchResult, compute_metrics, match_detections
from .learning import LearnConfig, find_graph_candidates, label_error, learn, split_folds
from .model import ConstraintGraph, Edge, LabelSet, Segmentation, Signal, Vertex, evaluate_constraint, validate_graph
from .pwq import InfeasibleModel, PiecewiseQuadratic
from .solver import backtrack, extract_peaks, solve

__all__ = [
    "ConstraintGraph", "Edge", "InfeasibleModel", "LabelSet", "LearnConfig", "MatchResult",
    "PiecewiseQuadratic", "Segmentation", "Signal", "Vertex", "backtrack", "compute_metrics",
    "evaluate_constraint", "extract_peaks", "find_graph_candidates", "label_error", "learn",
    "match_detections", "solve", "split_folds", "validate_graph",
]
