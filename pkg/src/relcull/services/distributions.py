"""
Predicate distribution reports
"""

import logging
from collections import Counter
from pathlib import Path
from typing import List, Tuple, Union

import pandas as pd

from src.relcull.exceptions import PreconditionError
from src.relcull.models.scene_graph import Dataset, normalize_label

logger = logging.getLogger(__name__)

Histogram = List[Tuple[str, float]]


def _histogram(counts: Counter, labels: Tuple[str, ...]) -> Histogram:
    total = sum(counts.values())
    if total == 0:
        return []
    ranked = sorted(counts.items(), key=lambda item: (-item[1], labels[item[0]]))
    return [(labels[pred], n / total) for pred, n in ranked]


def label_distribution(dataset: Dataset) -> Histogram:
    """Predicate shares over all triplets, largest first (ties by label)"""
    counts = Counter(t.predicate for image in dataset.images for t in image.triplets)
    return _histogram(counts, dataset.predicate_vocab.labels)


def _class_id(dataset: Dataset, cls: Union[int, str]) -> int:
    if isinstance(cls, str):
        return dataset.object_vocab.index.get(normalize_label(cls), -1)
    return cls


def conditional_distribution(dataset: Dataset, subject_class: Union[int, str], object_class: Union[int, str]) -> Histogram:
    """Predicate shares restricted to triplets between the two object classes"""
    s_cls, o_cls = _class_id(dataset, subject_class), _class_id(dataset, object_class)
    counts: Counter = Counter()
    for image in dataset.images:
        index = image.instance_index
        for t in image.triplets:
            if index[t.subject_id].object_label == s_cls and index[t.object_id].object_label == o_cls:
                counts[t.predicate] += 1
    return _histogram(counts, dataset.predicate_vocab.labels)


def top_k_share(histogram: Histogram, k: int) -> float:
    """Cumulative share of the k largest entries"""
    if k < 0:
        raise PreconditionError(f"k must be non-negative, got {k}")
    return float(sum(share for _, share in histogram[:k]))


def write_histogram(histogram: Histogram, path: Path) -> None:
    """CSV with columns label, share, cumulative_share"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(histogram, columns=["label", "share"])
    frame["cumulative_share"] = frame["share"].cumsum()
    frame.to_csv(path, index=False)
    logger.info(f"Wrote {len(frame)} histogram rows to {path}")
