"""
Relationship-aware representation heads over precomputed proposal features

For the k proposals of an image with features f (k, D):

    LOC  = f W_loc + b_loc
    CLS  = f W_cls + b_cls
    ATT  = ([CLS, f] W_attr1 + b_attr1) W_attr2 + b_attr2
    N    = f W_R1 + b_R1
    R_ij = (N_i + N_j) W_R2 + b_R2          for i != j, diagonal zeroed

R has one extra background column used for ordered pairs without a gold
relation. The additive fusion makes R symmetric; each unordered pair is
computed once and written to both (i, j) and (j, i).
"""

import copy
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.relcull.exceptions import DataError, DatasetParseError, PreconditionError
from src.relcull.models.configs import HeadsConfig, LossWeights

logger = logging.getLogger(__name__)

TERMS = ("loc", "cls", "attr", "rel")
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ProposalBatch:
    """Features and gold annotations of the k proposals of one image"""
    features: np.ndarray
    gold_boxes: np.ndarray
    gold_classes: np.ndarray
    gold_attributes: Tuple[FrozenSet[int], ...]
    gold_relations: Dict[Tuple[int, int], int] = field(default_factory=dict)

    def __post_init__(self):
        k = self.features.shape[0]
        if self.features.ndim != 2 or k < 2:
            raise PreconditionError(f"a proposal batch needs a (k, D) feature matrix with k >= 2, got {self.features.shape}")
        if self.gold_boxes.shape != (k, 4):
            raise PreconditionError(f"gold_boxes must be ({k}, 4), got {self.gold_boxes.shape}")
        if np.any(self.gold_boxes < 0.0) or np.any(self.gold_boxes > 1.0):
            raise PreconditionError("gold boxes must be normalized to [0, 1]")
        if self.gold_classes.shape != (k,) or len(self.gold_attributes) != k:
            raise PreconditionError("gold classes and attributes need one entry per proposal")
        for i, j in self.gold_relations:
            if i == j or not (0 <= i < k and 0 <= j < k):
                raise PreconditionError(f"relation key ({i}, {j}) is not an ordered pair of distinct proposals")

    @property
    def k(self) -> int:
        return self.features.shape[0]

    def attribute_targets(self, n_attributes: int) -> np.ndarray:
        targets = np.zeros((self.k, n_attributes))
        for i, attrs in enumerate(self.gold_attributes):
            for a in attrs:
                if not 0 <= a < n_attributes:
                    raise PreconditionError(f"attribute id {a} out of range [0, {n_attributes})")
                targets[i, a] = 1.0
        return targets

    def relation_targets(self, n_relations: int) -> np.ndarray:
        """(k, k) predicate ids; unannotated pairs get the background id n_relations"""
        targets = np.full((self.k, self.k), n_relations, dtype=np.int64)
        for (i, j), pred in self.gold_relations.items():
            if not 0 <= pred < n_relations:
                raise PreconditionError(f"relation id {pred} out of range [0, {n_relations})")
            targets[i, j] = pred
        return targets


@dataclass
class RelHeadParams:
    """Head weights; matrices are (fan_in, fan_out)"""
    W_loc: np.ndarray
    b_loc: np.ndarray
    W_cls: np.ndarray
    b_cls: np.ndarray
    W_attr1: np.ndarray
    b_attr1: np.ndarray
    W_attr2: np.ndarray
    b_attr2: np.ndarray
    W_R1: np.ndarray
    b_R1: np.ndarray
    W_R2: np.ndarray
    b_R2: np.ndarray

    @property
    def feature_dim(self) -> int:
        return self.W_loc.shape[0]

    @property
    def n_classes(self) -> int:
        return self.W_cls.shape[1]

    @property
    def n_attributes(self) -> int:
        return self.W_attr2.shape[1]

    @property
    def n_relations(self) -> int:
        """Relation classes excluding background"""
        return self.W_R2.shape[1] - 1

    def learnable(self) -> Dict[str, np.ndarray]:
        return dict(vars(self))

    def copy(self) -> "RelHeadParams":
        return copy.deepcopy(self)


def init_rel_heads(
    config: HeadsConfig, feature_dim: int, n_classes: int, n_attributes: int, n_relations: int
) -> RelHeadParams:
    """Glorot-uniform weights, zero biases"""
    if min(feature_dim, n_classes, n_relations) < 1 or n_attributes < 0:
        raise PreconditionError("feature_dim, n_classes and n_relations must be positive")
    rng = np.random.default_rng(config.seed)

    def glorot(fan_in: int, fan_out: int) -> np.ndarray:
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=(fan_in, fan_out))

    return RelHeadParams(
        W_loc=glorot(feature_dim, 4),
        b_loc=np.zeros(4),
        W_cls=glorot(feature_dim, n_classes),
        b_cls=np.zeros(n_classes),
        W_attr1=glorot(n_classes + feature_dim, config.hidden_attr),
        b_attr1=np.zeros(config.hidden_attr),
        W_attr2=glorot(config.hidden_attr, n_attributes),
        b_attr2=np.zeros(n_attributes),
        W_R1=glorot(feature_dim, config.hidden_rel),
        b_R1=np.zeros(config.hidden_rel),
        W_R2=glorot(config.hidden_rel, n_relations + 1),
        b_R2=np.zeros(n_relations + 1),
    )


def _forward(params: RelHeadParams, features: np.ndarray) -> Dict[str, np.ndarray]:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] < 2:
        raise PreconditionError(f"heads need a (k, D) feature matrix with k >= 2, got {features.shape}")
    if features.shape[1] != params.feature_dim:
        raise PreconditionError(f"feature width {features.shape[1]} does not match heads ({params.feature_dim})")
    k = features.shape[0]
    loc = features @ params.W_loc + params.b_loc
    cls = features @ params.W_cls + params.b_cls
    attr_in = np.concatenate([cls, features], axis=1)
    attr_hidden = attr_in @ params.W_attr1 + params.b_attr1
    att = attr_hidden @ params.W_attr2 + params.b_attr2
    node = features @ params.W_R1 + params.b_R1

    upper_i, upper_j = np.triu_indices(k, k=1)
    fused = node[upper_i] + node[upper_j]
    pair_logits = fused @ params.W_R2 + params.b_R2
    rel = np.zeros((k, k, params.n_relations + 1))
    rel[upper_i, upper_j] = pair_logits
    rel[upper_j, upper_i] = pair_logits
    return {
        "LOC": loc,
        "CLS": cls,
        "ATT": att,
        "R": rel,
        "_features": features,
        "_attr_in": attr_in,
        "_attr_hidden": attr_hidden,
        "_upper": (upper_i, upper_j),
        "_fused": fused,
    }


def heads_forward(params: RelHeadParams, features: np.ndarray) -> Dict[str, np.ndarray]:
    """LOC (k, 4), CLS (k, C_obj), ATT (k, C_attr) and R (k, k, C_rel + 1)"""
    out = _forward(params, features)
    return {name: out[name] for name in ("LOC", "CLS", "ATT", "R")}


def _softmax_ce(logits: np.ndarray, targets: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean cross-entropy over rows and its gradient"""
    n = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    rows = np.arange(n)
    loss = float(np.mean(log_z - shifted[rows, targets]))
    grad = np.exp(shifted - log_z[:, None])
    grad[rows, targets] -= 1.0
    return loss, grad / n


def _check_weights(weights: LossWeights) -> None:
    for name, value in weights.to_dict().items():
        if value < 0:
            raise PreconditionError(f"loss weight {name} must be non-negative, got {value}")


def _loss_and_grads(
    params: RelHeadParams, batch: ProposalBatch, weights: LossWeights
) -> Tuple[Dict[str, float], Dict[str, np.ndarray]]:
    _check_weights(weights)
    out = _forward(params, batch.features)
    k = batch.k
    if batch.gold_classes.min() < 0 or batch.gold_classes.max() >= params.n_classes:
        raise PreconditionError(f"gold class out of range [0, {params.n_classes})")
    features = out["_features"]
    terms: Dict[str, float] = {}

    # box regression: mean over proposals of the squared error norm
    diff = out["LOC"] - batch.gold_boxes
    terms["loc"] = weights.w_loc * float(np.mean(np.sum(diff * diff, axis=1)))
    d_loc = weights.w_loc * 2.0 * diff / k

    cls_loss, d_cls = _softmax_ce(out["CLS"], batch.gold_classes.astype(np.int64))
    terms["cls"] = weights.w_cls * cls_loss
    d_cls = weights.w_cls * d_cls

    n_attr = params.n_attributes
    if n_attr:
        x = out["ATT"]
        y = batch.attribute_targets(n_attr)
        bce = np.maximum(x, 0.0) - x * y + np.log1p(np.exp(-np.abs(x)))
        terms["attr"] = weights.w_attr * float(np.mean(bce))
        sigmoid = 0.5 * (1.0 + np.tanh(0.5 * x))
        d_att = weights.w_attr * (sigmoid - y) / (k * n_attr)
    else:
        terms["attr"] = 0.0
        d_att = np.zeros((k, 0))

    targets = batch.relation_targets(params.n_relations)
    off_i, off_j = np.nonzero(~np.eye(k, dtype=bool))
    rel_loss, d_rel_pairs = _softmax_ce(out["R"][off_i, off_j], targets[off_i, off_j])
    terms["rel"] = weights.w_rel * rel_loss
    d_rel = np.zeros_like(out["R"])
    d_rel[off_i, off_j] = weights.w_rel * d_rel_pairs

    grads: Dict[str, np.ndarray] = {}
    grads["W_loc"] = features.T @ d_loc
    grads["b_loc"] = d_loc.sum(axis=0)

    grads["W_attr2"] = out["_attr_hidden"].T @ d_att
    grads["b_attr2"] = d_att.sum(axis=0)
    d_hidden = d_att @ params.W_attr2.T
    grads["W_attr1"] = out["_attr_in"].T @ d_hidden
    grads["b_attr1"] = d_hidden.sum(axis=0)
    d_cls = d_cls + (d_hidden @ params.W_attr1.T)[:, : params.n_classes]
    grads["W_cls"] = features.T @ d_cls
    grads["b_cls"] = d_cls.sum(axis=0)

    upper_i, upper_j = out["_upper"]
    d_pair = d_rel[upper_i, upper_j] + d_rel[upper_j, upper_i]
    grads["W_R2"] = out["_fused"].T @ d_pair
    grads["b_R2"] = d_pair.sum(axis=0)
    d_fused = d_pair @ params.W_R2.T
    d_node = np.zeros((k, params.W_R1.shape[1]))
    np.add.at(d_node, upper_i, d_fused)
    np.add.at(d_node, upper_j, d_fused)
    grads["W_R1"] = features.T @ d_node
    grads["b_R1"] = d_node.sum(axis=0)
    return terms, grads


def loss_terms(params: RelHeadParams, batch: ProposalBatch, loss_weights: LossWeights) -> Dict[str, float]:
    """The four weighted loss terms, keyed loc / cls / attr / rel"""
    return _loss_and_grads(params, batch, loss_weights)[0]


def heads_loss(
    params: RelHeadParams, batch: ProposalBatch, loss_weights: LossWeights
) -> Tuple[float, Dict[str, np.ndarray]]:
    """Weighted sum of box L2, class CE, attribute BCE and relation CE, plus exact gradients"""
    terms, grads = _loss_and_grads(params, batch, loss_weights)
    return float(sum(terms[name] for name in TERMS)), grads


def heads_train(
    params: RelHeadParams, batches: Sequence[ProposalBatch], config: HeadsConfig
) -> Tuple[RelHeadParams, List[float]]:
    """SGD with momentum, one step per batch, batch order shuffled per epoch"""
    if not batches:
        raise PreconditionError("heads_train needs at least one batch")
    rng = np.random.default_rng(config.seed)
    trained = params.copy()
    velocity = {name: np.zeros_like(arr) for name, arr in trained.learnable().items()}
    history: List[float] = []
    for epoch in range(config.epochs):
        total = 0.0
        for b in rng.permutation(len(batches)):
            loss, grads = heads_loss(trained, batches[int(b)], config.loss_weights)
            for name, arr in trained.learnable().items():
                velocity[name] = config.momentum * velocity[name] - config.learning_rate * grads[name]
                arr += velocity[name]
            total += loss
        history.append(total / len(batches))
        logger.info(f"Heads epoch {epoch + 1}/{config.epochs}: mean loss {history[-1]:.4f}")
    return trained, history


def heads_grad_check(
    params: RelHeadParams,
    batch: ProposalBatch,
    loss_weights: Optional[LossWeights] = None,
    epsilon: float = 1e-5,
    max_entries: int = 10_000,
    seed: int = 0,
) -> float:
    """Max relative error |a - n| / max(|a|, |n|, 1e-3) against central differences"""
    if epsilon <= 0:
        raise PreconditionError("epsilon must be positive")
    weights = loss_weights or LossWeights()
    perturbed = params.copy()
    _, analytic = heads_loss(perturbed, batch, weights)
    arrays = perturbed.learnable()
    entries = [(name, i) for name, arr in arrays.items() for i in range(arr.size)]
    if len(entries) > max_entries:
        chosen = np.random.default_rng(seed).choice(len(entries), size=max_entries, replace=False)
        entries = [entries[i] for i in sorted(chosen)]

    worst = 0.0
    for name, i in entries:
        flat = arrays[name].reshape(-1)
        original = flat[i]
        flat[i] = original + epsilon
        plus = heads_loss(perturbed, batch, weights)[0]
        flat[i] = original - epsilon
        minus = heads_loss(perturbed, batch, weights)[0]
        flat[i] = original
        numeric = (plus - minus) / (2.0 * epsilon)
        exact = analytic[name].reshape(-1)[i]
        worst = max(worst, abs(exact - numeric) / max(abs(exact), abs(numeric), 1e-3))
    logger.info(f"Heads gradient check over {len(entries)} entries: max relative error {worst:.3e}")
    return worst


def gen_proposal_batches(
    n_batches: int,
    k: int,
    feature_dim: int,
    n_classes: int,
    n_attributes: int,
    n_relations: int,
    seed: int = 0,
    noise: float = 0.1,
) -> List[ProposalBatch]:
    """Class-separable synthetic features with class-determined attributes and relations"""
    if k < 2:
        raise PreconditionError("k must be at least 2")
    rng = np.random.default_rng(seed)
    prototypes = rng.standard_normal((n_classes, feature_dim))
    batches = []
    for _ in range(n_batches):
        classes = rng.integers(0, n_classes, size=k)
        features = prototypes[classes] + noise * rng.standard_normal((k, feature_dim))
        wh = rng.uniform(0.1, 0.5, size=(k, 2))
        xy = rng.uniform(0.0, 1.0, size=(k, 2)) * (1.0 - wh)
        attributes = tuple(frozenset({int(c) % n_attributes}) if n_attributes else frozenset() for c in classes)
        relations = {}
        for i in range(k):
            for j in range(i + 1, k):
                if rng.random() < 0.5:
                    relations[(i, j)] = int(classes[i] + classes[j]) % n_relations
        batches.append(
            ProposalBatch(
                features=features,
                gold_boxes=np.concatenate([xy, wh], axis=1),
                gold_classes=classes.astype(np.int64),
                gold_attributes=attributes,
                gold_relations=relations,
            )
        )
    return batches


def write_proposal_batches(batches: Sequence[ProposalBatch], path: Path) -> None:
    """JSONL, one batch per line, features row-major"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for batch in batches:
            entry = {
                "k": batch.k,
                "D": int(batch.features.shape[1]),
                "features": batch.features.reshape(-1).tolist(),
                "gold_boxes": batch.gold_boxes.tolist(),
                "gold_classes": batch.gold_classes.tolist(),
                "gold_attributes": [sorted(attrs) for attrs in batch.gold_attributes],
                "gold_relations": [[i, j, p] for (i, j), p in sorted(batch.gold_relations.items())],
            }
            f.write(json.dumps(entry) + "\n")


def read_proposal_batches(path: Path) -> List[ProposalBatch]:
    path = Path(path)
    batches = []
    with path.open("r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                entry = json.loads(line)
                k, dim = int(entry["k"]), int(entry["D"])
                batches.append(
                    ProposalBatch(
                        features=np.asarray(entry["features"], dtype=np.float64).reshape(k, dim),
                        gold_boxes=np.asarray(entry["gold_boxes"], dtype=np.float64).reshape(k, 4),
                        gold_classes=np.asarray(entry["gold_classes"], dtype=np.int64),
                        gold_attributes=tuple(frozenset(int(a) for a in attrs) for attrs in entry["gold_attributes"]),
                        gold_relations={(int(i), int(j)): int(p) for i, j, p in entry.get("gold_relations", [])},
                    )
                )
            except (ValueError, KeyError, TypeError) as e:
                raise DatasetParseError(str(e), source=path.name, line=line_no) from e
    logger.info(f"Read {len(batches)} proposal batches from {path}")
    return batches


def save_heads(params: RelHeadParams, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as f:
        np.savez(f, format_version=np.array(CHECKPOINT_VERSION), **params.learnable())


def load_heads(path: Path) -> RelHeadParams:
    """Read a checkpoint written by save_heads"""
    with np.load(Path(path)) as archive:
        version = int(archive["format_version"]) if "format_version" in archive.files else None
        if version != CHECKPOINT_VERSION:
            raise DataError(f"{path}: unsupported head checkpoint version {version}")
        arrays = {name: archive[name] for name in archive.files if name != "format_version"}
    try:
        return RelHeadParams(**arrays)
    except TypeError as e:
        raise DataError(f"{path}: head checkpoint arrays do not match the head layout ({e})") from e


def write_heads_history(history: Sequence[float], path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame({"epoch": np.arange(1, len(history) + 1), "mean_loss": list(history)}).to_csv(path, index=False)
