"""Streaming activity recognition with a cascade of online Pegasos classifiers."""

from .cascade import Cascade, CascadeSpec, Decision, ModelParams
from .costmodel import BudgetSpec, CostLedger, cascade_cost, check_budgets, monolithic_cost
from .features import FeatureId, FeatureLevel, FeatureVector, compute_feature, extract, feature_op_count
from .pegasos import PegasosConfig, PegasosModel
from .signal import ActivityLabel, IntensityClass, LabeledSegment, Segment, decimate, segment_stream

__version__ = "0.1.0"

__all__ = [
    "ActivityLabel",
    "BudgetSpec",
    "Cascade",
    "CascadeSpec",
    "CostLedger",
    "Decision",
    "FeatureId",
    "FeatureLevel",
    "FeatureVector",
    "IntensityClass",
    "LabeledSegment",
    "ModelParams",
    "PegasosConfig",
    "PegasosModel",
    "Segment",
    "cascade_cost",
    "check_budgets",
    "compute_feature",
    "decimate",
    "extract",
    "feature_op_count",
    "monolithic_cost",
    "segment_stream",
]
