"""
Recall@K for predicate detection (gold connections given) and predicate
classification (all ordered instance pairs)
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from pathlib import Path
from typing import Callable, Collection, Dict, List, Optional, Protocol, Sequence, Tuple

import numpy as np

from src.relcull.exceptions import DatasetParseError, PreconditionError
from src.relcull.models.reports import RecallResult
from src.relcull.models.scene_graph import Dataset, ImageRecord, Instance

logger = logging.getLogger(__name__)

Pair = Tuple[Instance, Instance]


class Predictor(Protocol):
    """Maps the candidate pairs of an image to an (n_pairs, n_predicates) score matrix"""

    def score_pairs(self, image: ImageRecord, pairs: Sequence[Pair]) -> np.ndarray:
        ...


class CallablePredictor:
    """Adapts a per-pair function (image, subject, object) -> scores"""

    def __init__(self, fn: Callable[[ImageRecord, Instance, Instance], np.ndarray]):
        self.fn = fn

    def score_pairs(self, image: ImageRecord, pairs: Sequence[Pair]) -> np.ndarray:
        return np.stack([np.asarray(self.fn(image, s, o), dtype=np.float64) for s, o in pairs])


class Pooling(str, Enum):
    """How per-image hits are aggregated"""
    IMAGE = "image"
    MICRO = "micro"


class EvalMode(str, Enum):
    PREDDET = "preddet"
    PREDCLS = "predcls"


def _candidate_pairs(image: ImageRecord, mode: EvalMode) -> List[Pair]:
    index = image.instance_index
    if mode == EvalMode.PREDDET:
        keys = sorted({(t.subject_id, t.object_id) for t in image.triplets})
    else:
        ids = sorted(index)
        keys = [(s, o) for s in ids for o in ids if s != o]
    return [(index[s], index[o]) for s, o in keys]


def rank_candidates(scores: np.ndarray, graph_constraint: bool = False) -> List[Tuple[int, int]]:
    """(pair index, predicate id) candidates best first; ties by pair index then predicate id"""
    n_pairs, n_predicates = scores.shape
    if graph_constraint:
        # argmax returns the lowest predicate id among ties
        best = scores.argmax(axis=1)
        pair_idx = np.arange(n_pairs)
        pred_idx = best
        flat = scores[pair_idx, best]
    else:
        pair_idx = np.repeat(np.arange(n_pairs), n_predicates)
        pred_idx = np.tile(np.arange(n_predicates), n_pairs)
        flat = scores.reshape(-1)
    order = np.lexsort((pred_idx, pair_idx, -flat))
    return [(int(pair_idx[i]), int(pred_idx[i])) for i in order]


def _image_hits(
    predictor: Predictor,
    image: ImageRecord,
    mode: EvalMode,
    ks: Sequence[int],
    graph_constraint: bool,
    predicate_filter: Optional[Collection[int]],
) -> Tuple[List[int], int]:
    """Matched gold triplets at each K, and the number of gold triplets"""
    gold = [t for t in image.triplets if predicate_filter is None or t.predicate in predicate_filter]
    if not gold:
        return [0] * len(ks), 0
    pairs = _candidate_pairs(image, mode)
    scores = np.asarray(predictor.score_pairs(image, pairs), dtype=np.float64)
    if scores.ndim != 2 or scores.shape[0] != len(pairs):
        raise PreconditionError(f"predictor returned scores of shape {scores.shape} for {len(pairs)} pairs")
    pair_keys = [(s.instance_id, o.instance_id) for s, o in pairs]
    ranked = [(pair_keys[p], r) for p, r in rank_candidates(scores, graph_constraint)]

    hits = []
    for k in ks:
        top = {(key[0], r, key[1]) for key, r in ranked[:k]}
        hits.append(sum(1 for t in gold if (t.subject_id, t.predicate, t.object_id) in top))
    return hits, len(gold)


def _evaluate(
    predictor: Predictor,
    dataset: Dataset,
    ks: Sequence[int],
    mode: EvalMode,
    graph_constraint: bool,
    predicate_filter: Optional[Collection[int]],
    pool: Pooling,
    threads: int,
) -> RecallResult:
    ks = sorted(set(int(k) for k in ks))
    if not ks:
        raise PreconditionError("at least one K is required")
    if ks[0] <= 0:
        raise PreconditionError(f"K must be positive, got {ks[0]}")
    pool = Pooling(pool)
    allowed = set(predicate_filter) if predicate_filter is not None else None

    def run(image: ImageRecord) -> Tuple[List[int], int]:
        return _image_hits(predictor, image, mode, ks, graph_constraint, allowed)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        per_image = list(executor.map(run, dataset.images))

    scored = [(hits, n) for hits, n in per_image if n > 0]
    n_gold = sum(n for _, n in scored)
    recall: Dict[int, float] = {}
    for col, k in enumerate(ks):
        if not scored:
            recall[k] = 0.0
        elif pool == Pooling.MICRO:
            recall[k] = sum(hits[col] for hits, _ in scored) / n_gold
        else:
            recall[k] = float(np.mean([hits[col] / n for hits, n in scored]))
    logger.info(f"{mode.value} recall over {len(scored)} images / {n_gold} gold triplets: {recall}")
    return RecallResult(recall=recall, n_gold=n_gold)


def eval_preddet(
    predictor: Predictor,
    test_dataset: Dataset,
    ks: Sequence[int],
    graph_constraint: bool = False,
    predicate_filter: Optional[Collection[int]] = None,
    pool: Pooling = Pooling.IMAGE,
    threads: int = 1,
) -> RecallResult:
    """Recall@K when gold subject/object connections are given"""
    return _evaluate(predictor, test_dataset, ks, EvalMode.PREDDET, graph_constraint, predicate_filter, pool, threads)


def eval_predcls(
    predictor: Predictor,
    test_dataset: Dataset,
    ks: Sequence[int],
    graph_constraint: bool = False,
    predicate_filter: Optional[Collection[int]] = None,
    pool: Pooling = Pooling.IMAGE,
    threads: int = 1,
) -> RecallResult:
    """Recall@K over every ordered pair of gold instances"""
    return _evaluate(predictor, test_dataset, ks, EvalMode.PREDCLS, graph_constraint, predicate_filter, pool, threads)


class FilePredictor:
    """Predictor backed by a prediction file; pairs absent from the file score zero"""

    def __init__(self, scores: Dict[int, Dict[Tuple[int, int], np.ndarray]], n_predicates: int):
        self.scores = scores
        self.n_predicates = n_predicates

    def score_pairs(self, image: ImageRecord, pairs: Sequence[Pair]) -> np.ndarray:
        table = self.scores.get(image.image_id, {})
        zero = np.zeros(self.n_predicates)
        rows = [table.get((s.instance_id, o.instance_id), zero) for s, o in pairs]
        return np.stack(rows) if rows else np.zeros((0, self.n_predicates))


def read_predictions(path: Path) -> FilePredictor:
    """JSONL, one image per line: {"image_id": id, "scores": [[subject_id, object_id, [p_0, ...]], ...]}"""
    path = Path(path)
    scores: Dict[int, Dict[Tuple[int, int], np.ndarray]] = {}
    n_predicates: Optional[int] = None
    with path.open("r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                entry = json.loads(line)
                table = {}
                for subject_id, object_id, values in entry["scores"]:
                    vector = np.asarray(values, dtype=np.float64)
                    if n_predicates is None:
                        n_predicates = vector.shape[0]
                    if vector.shape != (n_predicates,):
                        raise ValueError(f"expected {n_predicates} scores, found {vector.shape[0]}")
                    table[(int(subject_id), int(object_id))] = vector
                scores[int(entry["image_id"])] = table
            except (ValueError, KeyError, TypeError) as e:
                raise DatasetParseError(str(e), source=path.name, line=line_no) from e
    logger.info(f"Read predictions for {len(scores)} images from {path}")
    return FilePredictor(scores, n_predicates or 0)


def write_predictions(predictor: Predictor, dataset: Dataset, mode: EvalMode, path: Path) -> None:
    """Dump a predictor's scores over the candidate pairs of every image"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for image in dataset.images:
            pairs = _candidate_pairs(image, EvalMode(mode))
            scores = predictor.score_pairs(image, pairs) if pairs else np.zeros((0, 0))
            rows = [[s.instance_id, o.instance_id, row.tolist()] for (s, o), row in zip(pairs, scores)]
            f.write(json.dumps({"image_id": image.image_id, "scores": rows}) + "\n")


def write_recall(result: RecallResult, path: Path) -> None:
    """JSON {K: recall}"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {str(k): v for k, v in sorted(result.recall.items())}
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
