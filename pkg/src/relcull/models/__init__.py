"""
Typed records for relcull
"""

from .configs import CurateConfig, HeadsConfig, Linkage, LossWeights, VDNetConfig
from .reports import AccuracyReport, CurationReport, IngestReport, PredicateAccuracy, RecallResult, StatsReport
from .scene_graph import BBox, Dataset, ImageRecord, Instance, SplitTag, Triplet, Vocab, normalize_label
from .synth import GeometricRelation, PredicateRule, RuleKind, SynthSpec

__all__ = [
    "AccuracyReport",
    "BBox",
    "CurateConfig",
    "CurationReport",
    "Dataset",
    "GeometricRelation",
    "HeadsConfig",
    "ImageRecord",
    "IngestReport",
    "Instance",
    "Linkage",
    "LossWeights",
    "PredicateAccuracy",
    "PredicateRule",
    "RecallResult",
    "RuleKind",
    "SplitTag",
    "StatsReport",
    "SynthSpec",
    "Triplet",
    "VDNetConfig",
    "Vocab",
    "normalize_label",
]
