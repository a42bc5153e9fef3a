"""
Report records produced by ingestion, statistics, evaluation and curation
"""

from typing import Dict, List, Optional, Tuple

from pydantic import Field, model_validator

from .base import RecordModel


class IngestReport(RecordModel):
    """What ingestion fixed up or threw away"""
    images: int = 0
    instances: int = 0
    triplets: int = 0
    clamped_boxes: int = 0
    dropped_degenerate_boxes: int = 0
    dropped_triplets: int = 0
    self_loop_triplets: int = 0
    unlabeled_objects: int = 0
    multi_name_objects: int = 0
    images_without_meta: int = 0


class StatsReport(RecordModel):
    """Dataset statistics (object / annotation / predicate / triplet-type / image columns plus extras)"""
    n_object_categories: int = Field(description="Object labels with at least one instance")
    n_instances: int = Field(description="Single instance annotations")
    n_predicate_categories: int = Field(description="Predicate labels with at least one triplet")
    n_triplet_types: int = Field(description="Unique <subject class, predicate, object class> types")
    n_images: int
    n_triplets: int = 0
    n_attribute_categories: int = 0
    n_attribute_annotations: int = 0
    n_duplicate_boxes: int = Field(default=0, description="Instances repeating another box and label in the same image")


class PredicateAccuracy(RecordModel):
    """Held-out accuracy of one predicate"""
    accuracy: float = Field(ge=0.0, le=1.0)
    support: int = Field(ge=1)


class AccuracyReport(RecordModel):
    """Per-predicate held-out accuracy; drives filtering"""
    per_predicate: Dict[int, PredicateAccuracy] = Field(default_factory=dict)
    overall_accuracy: float = 0.0

    @model_validator(mode="after")
    def _overall_is_weighted_mean(self) -> "AccuracyReport":
        total = sum(entry.support for entry in self.per_predicate.values())
        if total:
            expected = sum(entry.accuracy * entry.support for entry in self.per_predicate.values()) / total
            if abs(expected - self.overall_accuracy) > 1e-9:
                raise ValueError("overall accuracy is not the support-weighted mean of per-predicate accuracies")
        return self

    @classmethod
    def from_tallies(cls, correct: Dict[int, int], support: Dict[int, int]) -> "AccuracyReport":
        """Build from per-predicate hit and support counts (zero-support predicates omitted)"""
        per_predicate = {
            pred: PredicateAccuracy(accuracy=correct.get(pred, 0) / n, support=n)
            for pred, n in sorted(support.items())
            if n > 0
        }
        total = sum(entry.support for entry in per_predicate.values())
        hits = sum(correct.get(pred, 0) for pred in per_predicate)
        return cls(per_predicate=per_predicate, overall_accuracy=hits / total if total else 0.0)

    def accuracies(self) -> Dict[int, float]:
        return {pred: entry.accuracy for pred, entry in self.per_predicate.items()}


class RecallResult(RecordModel):
    """Recall@K for several K"""
    recall: Dict[int, float] = Field(default_factory=dict)
    n_gold: int = 0

    @model_validator(mode="after")
    def _monotone(self) -> "RecallResult":
        ordered = [self.recall[k] for k in sorted(self.recall)]
        if any(b < a - 1e-12 for a, b in zip(ordered, ordered[1:])):
            raise ValueError("recall must be non-decreasing in K")
        return self


class PredicateVerdict(RecordModel):
    """Filtering outcome for one predicate"""
    predicate: str
    accuracy: Optional[float] = None
    support: int = 0


class CurationReport(RecordModel):
    """Audit trail of one curation run"""
    alpha: float
    stage_counts: Dict[str, Dict[str, int]] = Field(default_factory=dict)
    kept: List[PredicateVerdict] = Field(default_factory=list)
    dropped: List[PredicateVerdict] = Field(default_factory=list)
    insufficient_evidence: List[PredicateVerdict] = Field(default_factory=list)
    clusters: Dict[str, List[str]] = Field(default_factory=dict)
    overall_accuracy: float = 0.0
    loss_history: List[float] = Field(default_factory=list)


CurvePoint = Tuple[float, float]
