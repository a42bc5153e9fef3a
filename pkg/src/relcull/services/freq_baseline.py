"""
Frequency baseline: predicate distribution conditioned on the (subject class,
object class) pair
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Sequence, Tuple

import numpy as np

from src.relcull.exceptions import PreconditionError
from src.relcull.models.scene_graph import Dataset, ImageRecord, Instance

logger = logging.getLogger(__name__)

ClassPair = Tuple[int, int]


@dataclass
class FreqModel:
    """Per class-pair predicate counts plus add-k smoothing"""
    n_predicates: int
    smoothing_k: float = 0.0
    counts: Dict[ClassPair, np.ndarray] = field(default_factory=dict)

    def count(self, subject_class: int, object_class: int) -> np.ndarray:
        found = self.counts.get((subject_class, object_class))
        return found.copy() if found is not None else np.zeros(self.n_predicates)


def fit_freq_baseline(train_dataset: Dataset, smoothing_k: float = 0.0) -> FreqModel:
    """Tally gold triplets over object-class pairs"""
    if not train_dataset.images:
        raise PreconditionError("frequency baseline needs a non-empty training set")
    if smoothing_k < 0:
        raise PreconditionError(f"smoothing_k must be non-negative, got {smoothing_k}")
    model = FreqModel(n_predicates=train_dataset.predicate_vocab.size, smoothing_k=smoothing_k)
    for image in train_dataset.images:
        index = image.instance_index
        for trip in image.triplets:
            key = (index[trip.subject_id].object_label, index[trip.object_id].object_label)
            if key not in model.counts:
                model.counts[key] = np.zeros(model.n_predicates)
            model.counts[key][trip.predicate] += 1.0
    logger.info(f"Frequency baseline fitted on {train_dataset.n_triplets} triplets over {len(model.counts)} class pairs")
    return model


def freq_predict(model: FreqModel, subject_class: int, object_class: int) -> np.ndarray:
    """(count + k) / sum(count + k); uniform when the pair is unseen and k = 0"""
    if model.n_predicates < 1:
        raise PreconditionError("frequency model has no predicates")
    smoothed = model.count(subject_class, object_class) + model.smoothing_k
    total = smoothed.sum()
    if total <= 0:
        return np.full(model.n_predicates, 1.0 / model.n_predicates)
    return smoothed / total


class FreqPredictor:
    """Scores pairs by the frequency model of their class pair"""

    def __init__(self, model: FreqModel):
        self.model = model

    def score_pairs(self, image: ImageRecord, pairs: Sequence[Tuple[Instance, Instance]]) -> np.ndarray:
        if not pairs:
            return np.zeros((0, self.model.n_predicates))
        return np.stack([freq_predict(self.model, s.object_label, o.object_label) for s, o in pairs])

    def __call__(self, image: ImageRecord, subject: Instance, obj: Instance) -> np.ndarray:
        return freq_predict(self.model, subject.object_label, obj.object_label)
