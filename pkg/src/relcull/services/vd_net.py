"""
Visual discriminator (VD-Net)

A three-stage fully-connected classifier that predicts the predicate of a
subject/object pair from the two label embeddings and the box geometry only:

    proj_s = relu(v_s W_s + b_s)          proj_o = relu(v_o W_o + b_o)
    x      = [proj_s, p_s, proj_o, p_o, p_j]
    h      = relu(bn_1(x W_1 + b_1))
    logits = bn_2(h W_2 + b_2)

The box and pair geometry columns are standardized with a mean and standard
deviation fitted on the training set before the concatenation; the squared
and log ratio features otherwise sit on a much larger scale than the rest.

Training is mini-batch SGD with momentum on mean softmax cross-entropy, with
exact gradients through both batchnorm layers (batch statistics included).
All arithmetic is float64 and single-threaded in a fixed order, so a fixed
seed reproduces parameters bit for bit.
"""

import copy
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.relcull.exceptions import DataError, PreconditionError
from src.relcull.models.configs import VDNetConfig
from src.relcull.models.reports import AccuracyReport
from src.relcull.models.scene_graph import Dataset, ImageRecord, Instance
from src.relcull.services.embeddings import EmbeddingTable, phrase_vector
from src.relcull.services.pair_geometry import (
    BOX_DIM,
    PAIR_DIM,
    NormBox,
    PairGeometry,
    normalize_box,
    pair_embeddings,
)

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 2
GEO_DIM = 2 * BOX_DIM + PAIR_DIM
EVAL_CHUNK = 4096


class Mode(str, Enum):
    """Forward mode"""
    TRAIN = "train"
    EVAL = "eval"


@dataclass
class BatchNormState:
    """Scale/shift plus running statistics of one batchnorm layer"""
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray

    @classmethod
    def fresh(cls, width: int) -> "BatchNormState":
        return cls(np.ones(width), np.zeros(width), np.zeros(width), np.ones(width))


@dataclass
class VDNetParams:
    """Weights, biases, batchnorm state and geometry scaling; matrices are (fan_in, fan_out)"""
    W_s: np.ndarray
    b_s: np.ndarray
    W_o: np.ndarray
    b_o: np.ndarray
    W_1: np.ndarray
    b_1: np.ndarray
    bn_1: BatchNormState
    W_2: np.ndarray
    b_2: np.ndarray
    bn_2: BatchNormState
    bn_momentum: float = 0.9
    bn_epsilon: float = 1e-5
    use_batchnorm: bool = True
    geo_mean: np.ndarray = field(default_factory=lambda: np.zeros(GEO_DIM))
    geo_std: np.ndarray = field(default_factory=lambda: np.ones(GEO_DIM))
    geo_fitted: bool = False

    @property
    def embed_dim(self) -> int:
        return self.W_s.shape[0]

    @property
    def proj_dim(self) -> int:
        return self.W_s.shape[1]

    @property
    def n_predicates(self) -> int:
        return self.W_2.shape[1]

    def learnable(self) -> Dict[str, np.ndarray]:
        """Name -> array for every trained parameter (arrays are the live objects)"""
        return {
            "W_s": self.W_s,
            "b_s": self.b_s,
            "W_o": self.W_o,
            "b_o": self.b_o,
            "W_1": self.W_1,
            "b_1": self.b_1,
            "bn_1.gamma": self.bn_1.gamma,
            "bn_1.beta": self.bn_1.beta,
            "W_2": self.W_2,
            "b_2": self.b_2,
            "bn_2.gamma": self.bn_2.gamma,
            "bn_2.beta": self.bn_2.beta,
        }

    def copy(self) -> "VDNetParams":
        return copy.deepcopy(self)


@dataclass(frozen=True)
class PairSample:
    """One training/evaluation example"""
    v_s: np.ndarray
    v_o: np.ndarray
    p_s: NormBox
    p_o: NormBox
    p_j: PairGeometry
    target: int


@dataclass(frozen=True)
class PairBatch:
    """Stacked PairSamples"""
    v_s: np.ndarray
    v_o: np.ndarray
    p_s: np.ndarray
    p_o: np.ndarray
    p_j: np.ndarray
    targets: np.ndarray

    @classmethod
    def from_samples(cls, samples: Sequence[PairSample]) -> "PairBatch":
        if not samples:
            raise PreconditionError("cannot stack an empty sample list")
        dims = {s.v_s.shape[0] for s in samples} | {s.v_o.shape[0] for s in samples}
        if len(dims) != 1:
            raise PreconditionError(f"label embeddings differ in length: {sorted(dims)}")
        return cls(
            v_s=np.stack([s.v_s for s in samples]),
            v_o=np.stack([s.v_o for s in samples]),
            p_s=np.stack([s.p_s.as_array() for s in samples]),
            p_o=np.stack([s.p_o.as_array() for s in samples]),
            p_j=np.stack([s.p_j.v for s in samples]),
            targets=np.array([s.target for s in samples], dtype=np.int64),
        )

    def __len__(self) -> int:
        return self.targets.shape[0]

    def take(self, index: np.ndarray) -> "PairBatch":
        return PairBatch(
            self.v_s[index], self.v_o[index], self.p_s[index], self.p_o[index], self.p_j[index], self.targets[index]
        )

    def repeat(self, times: int) -> "PairBatch":
        return self.take(np.tile(np.arange(len(self)), times))

    def geometry(self) -> np.ndarray:
        """(n, GEO_DIM) block of [p_s, p_o, p_j]"""
        return np.concatenate([self.p_s, self.p_o, self.p_j], axis=1)


Samples = Union[PairBatch, Sequence[PairSample]]


def stack_samples(samples: Sequence[PairSample]) -> PairBatch:
    """Pack PairSamples into arrays"""
    return PairBatch.from_samples(samples)


def _as_batch(samples: Samples) -> PairBatch:
    return samples if isinstance(samples, PairBatch) else PairBatch.from_samples(samples)


@dataclass
class ForwardCache:
    """Activations kept for the backward pass"""
    a_s: np.ndarray
    a_o: np.ndarray
    x: np.ndarray
    y_1: np.ndarray
    h: np.ndarray
    bn_1: Tuple[np.ndarray, np.ndarray]
    bn_2: Tuple[np.ndarray, np.ndarray]
    batch_stats: Dict[str, Tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)


def init_vdnet(config: VDNetConfig, embed_dim: int, n_predicates: int) -> VDNetParams:
    """Glorot-uniform weights (variance 2/(fan_in+fan_out)), zero biases, identity batchnorm"""
    if n_predicates < 2:
        raise PreconditionError(f"VD-Net needs at least 2 predicates, got {n_predicates}")
    if embed_dim < 1:
        raise PreconditionError(f"embed_dim must be positive, got {embed_dim}")
    rng = np.random.default_rng(config.seed)
    proj, hidden = config.word_proj_dim, config.hidden_dim
    concat = 2 * proj + 2 * BOX_DIM + PAIR_DIM

    def glorot(fan_in: int, fan_out: int) -> np.ndarray:
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=(fan_in, fan_out))

    return VDNetParams(
        W_s=glorot(embed_dim, proj),
        b_s=np.zeros(proj),
        W_o=glorot(embed_dim, proj),
        b_o=np.zeros(proj),
        W_1=glorot(concat, hidden),
        b_1=np.zeros(hidden),
        bn_1=BatchNormState.fresh(hidden),
        W_2=glorot(hidden, n_predicates),
        b_2=np.zeros(n_predicates),
        bn_2=BatchNormState.fresh(n_predicates),
        bn_momentum=config.bn_momentum,
        bn_epsilon=config.bn_epsilon,
    )


def _bn_forward(
    z: np.ndarray, bn: BatchNormState, params: VDNetParams, mode: Mode
) -> Tuple[np.ndarray, Tuple[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]:
    if not params.use_batchnorm:
        return z, (z, np.ones(z.shape[1])), (np.zeros(z.shape[1]), np.ones(z.shape[1]))
    if mode == Mode.TRAIN:
        mean = z.mean(axis=0)
        var = z.var(axis=0)
    else:
        mean, var = bn.running_mean, bn.running_var
    inv_std = 1.0 / np.sqrt(var + params.bn_epsilon)
    xhat = (z - mean) * inv_std
    return bn.gamma * xhat + bn.beta, (xhat, inv_std), (mean, var)


def _bn_backward(
    dy: np.ndarray, bn: BatchNormState, cache: Tuple[np.ndarray, np.ndarray], params: VDNetParams
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradient through batch statistics; returns (dz, dgamma, dbeta)"""
    if not params.use_batchnorm:
        return dy, np.zeros_like(bn.gamma), np.zeros_like(bn.beta)
    xhat, inv_std = cache
    n = dy.shape[0]
    dgamma = (dy * xhat).sum(axis=0)
    dbeta = dy.sum(axis=0)
    dxhat = dy * bn.gamma
    dz = (inv_std / n) * (n * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0))
    return dz, dgamma, dbeta


def _update_running(params: VDNetParams, cache: ForwardCache, n: int) -> None:
    m = params.bn_momentum
    for name, bn in (("bn_1", params.bn_1), ("bn_2", params.bn_2)):
        mean, var = cache.batch_stats[name]
        bn.running_mean = m * bn.running_mean + (1.0 - m) * mean
        bn.running_var = m * bn.running_var + (1.0 - m) * var * n / (n - 1)


def _forward(params: VDNetParams, batch: PairBatch, mode: Mode) -> Tuple[np.ndarray, ForwardCache]:
    if batch.v_s.shape[1] != params.embed_dim:
        raise PreconditionError(f"embedding length {batch.v_s.shape[1]} does not match network ({params.embed_dim})")
    a_s = batch.v_s @ params.W_s + params.b_s
    a_o = batch.v_o @ params.W_o + params.b_o
    geo = (batch.geometry() - params.geo_mean) / params.geo_std
    x = np.concatenate(
        [np.maximum(a_s, 0.0), geo[:, :BOX_DIM], np.maximum(a_o, 0.0), geo[:, BOX_DIM : 2 * BOX_DIM], geo[:, 2 * BOX_DIM :]],
        axis=1,
    )
    z_1 = x @ params.W_1 + params.b_1
    y_1, bn_1_cache, stats_1 = _bn_forward(z_1, params.bn_1, params, mode)
    h = np.maximum(y_1, 0.0)
    z_2 = h @ params.W_2 + params.b_2
    logits, bn_2_cache, stats_2 = _bn_forward(z_2, params.bn_2, params, mode)
    cache = ForwardCache(a_s, a_o, x, y_1, h, bn_1_cache, bn_2_cache, {"bn_1": stats_1, "bn_2": stats_2})
    return logits, cache


def forward(
    params: VDNetParams, batch: Samples, mode: Mode = Mode.EVAL, update_stats: bool = True
) -> Tuple[np.ndarray, ForwardCache]:
    """Logits (n, n_predicates) plus cached activations

    Train mode normalizes with batch statistics and, unless update_stats is
    False, moves the running statistics toward them by (1 - bn_momentum).
    Eval mode uses the running statistics and mutates nothing.
    """
    batch = _as_batch(batch)
    mode = Mode(mode)
    n = len(batch)
    if n == 0:
        raise PreconditionError("forward needs a non-empty batch")
    if mode == Mode.TRAIN and n < 2:
        raise PreconditionError("train-mode forward needs at least 2 samples for batch statistics")
    logits, cache = _forward(params, batch, mode)
    if mode == Mode.TRAIN and update_stats and params.use_batchnorm:
        _update_running(params, cache, n)
    return logits, cache


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _cross_entropy(logits: np.ndarray, targets: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean softmax cross-entropy and its gradient w.r.t. logits"""
    n = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    rows = np.arange(n)
    loss = float(np.mean(log_z - shifted[rows, targets]))
    dlogits = np.exp(shifted - log_z[:, None])
    dlogits[rows, targets] -= 1.0
    return loss, dlogits / n


def _check_targets(params: VDNetParams, batch: PairBatch) -> None:
    if len(batch) and (batch.targets.min() < 0 or batch.targets.max() >= params.n_predicates):
        raise PreconditionError(f"target id out of range [0, {params.n_predicates})")


def _loss_and_grads(
    params: VDNetParams, batch: PairBatch, update_stats: bool = False
) -> Tuple[float, Dict[str, np.ndarray]]:
    n = len(batch)
    if n < 2:
        raise PreconditionError("loss_and_grads needs a batch of at least 2 samples")
    _check_targets(params, batch)
    logits, cache = _forward(params, batch, Mode.TRAIN)
    loss, dlogits = _cross_entropy(logits, batch.targets)

    dz_2, dgamma_2, dbeta_2 = _bn_backward(dlogits, params.bn_2, cache.bn_2, params)
    dW_2 = cache.h.T @ dz_2
    db_2 = dz_2.sum(axis=0)
    dh = dz_2 @ params.W_2.T
    dy_1 = dh * (cache.y_1 > 0)
    dz_1, dgamma_1, dbeta_1 = _bn_backward(dy_1, params.bn_1, cache.bn_1, params)
    dW_1 = cache.x.T @ dz_1
    db_1 = dz_1.sum(axis=0)
    dx = dz_1 @ params.W_1.T

    p = params.proj_dim
    da_s = dx[:, :p] * (cache.a_s > 0)
    da_o = dx[:, p + BOX_DIM : 2 * p + BOX_DIM] * (cache.a_o > 0)
    grads = {
        "W_s": batch.v_s.T @ da_s,
        "b_s": da_s.sum(axis=0),
        "W_o": batch.v_o.T @ da_o,
        "b_o": da_o.sum(axis=0),
        "W_1": dW_1,
        "b_1": db_1,
        "bn_1.gamma": dgamma_1,
        "bn_1.beta": dbeta_1,
        "W_2": dW_2,
        "b_2": db_2,
        "bn_2.gamma": dgamma_2,
        "bn_2.beta": dbeta_2,
    }
    if update_stats and params.use_batchnorm:
        _update_running(params, cache, n)
    return loss, grads


def loss_and_grads(params: VDNetParams, batch: Samples) -> Tuple[float, Dict[str, np.ndarray]]:
    """Mean cross-entropy and exact gradients for every learnable parameter (running stats untouched)"""
    return _loss_and_grads(params, _as_batch(batch))


def fit_geometry_scaling(params: VDNetParams, batch: Samples) -> None:
    """Set the geometry mean/std from a training set; constant columns keep unit scale"""
    geo = _as_batch(batch).geometry()
    std = geo.std(axis=0)
    params.geo_mean = geo.mean(axis=0)
    params.geo_std = np.where(std < 1e-12, 1.0, std)
    params.geo_fitted = True
    logger.debug(f"Geometry scaling fitted on {geo.shape[0]} samples, max std {std.max():.3f}")


def _minibatches(n: int, batch_size: int, rng: np.random.Generator) -> Iterator[np.ndarray]:
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        index = order[start : start + batch_size]
        if len(index) >= 2:
            yield index


def train(
    params: VDNetParams,
    train_set: Samples,
    config: VDNetConfig,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[VDNetParams, List[float]]:
    """SGD with momentum over seeded shuffles; returns new params and the per-epoch mean loss"""
    batch = _as_batch(train_set)
    if len(batch) == 0:
        raise PreconditionError("training set is empty")
    if config.epochs > 0 and len(batch) < 2:
        raise PreconditionError(f"training needs at least 2 samples for batch statistics, got {len(batch)}")
    _check_targets(params, batch)
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    trained = params.copy()
    if config.standardize_geometry and not trained.geo_fitted:
        fit_geometry_scaling(trained, batch)
    velocity = {name: np.zeros_like(arr) for name, arr in trained.learnable().items()}
    history: List[float] = []

    for epoch in range(config.epochs):
        total, seen = 0.0, 0
        for index in _minibatches(len(batch), config.batch_size, rng):
            loss, grads = _loss_and_grads(trained, batch.take(index), update_stats=True)
            for name, arr in trained.learnable().items():
                velocity[name] = config.momentum * velocity[name] - config.learning_rate * grads[name]
                arr += velocity[name]
            total += loss * len(index)
            seen += len(index)
            logger.debug(f"epoch {epoch + 1} batch loss {loss:.4f}")
        history.append(total / seen)
        logger.info(f"VD-Net epoch {epoch + 1}/{config.epochs}: mean loss {history[-1]:.4f}")
    return trained, history


def predict_logits(params: VDNetParams, samples: Samples) -> np.ndarray:
    """Eval-mode logits, computed in chunks"""
    batch = _as_batch(samples)
    chunks = [
        _forward(params, batch.take(np.arange(start, min(start + EVAL_CHUNK, len(batch)))), Mode.EVAL)[0]
        for start in range(0, len(batch), EVAL_CHUNK)
    ]
    return np.concatenate(chunks, axis=0)


def predict_proba(params: VDNetParams, samples: Samples) -> np.ndarray:
    return softmax(predict_logits(params, samples))


def evaluate(params: VDNetParams, test_set: Samples) -> AccuracyReport:
    """Per-gold-predicate accuracy of the eval-mode argmax"""
    batch = _as_batch(test_set)
    if len(batch) == 0:
        raise PreconditionError("test set is empty")
    predictions = predict_logits(params, batch).argmax(axis=1)
    correct: Dict[int, int] = {}
    support: Dict[int, int] = {}
    for gold, hit in zip(batch.targets.tolist(), (predictions == batch.targets).tolist()):
        support[gold] = support.get(gold, 0) + 1
        correct[gold] = correct.get(gold, 0) + int(hit)
    report = AccuracyReport.from_tallies(correct, support)
    logger.info(f"VD-Net held-out accuracy {report.overall_accuracy:.4f} over {len(batch)} samples")
    return report


def grad_check(
    params: VDNetParams, batch: Samples, epsilon: float = 1e-5, max_entries: int = 10_000, seed: int = 0
) -> float:
    """Max relative error between analytic and central-difference gradients

    Relative error is |a - n| / max(|a|, |n|, 1e-3); entries are subsampled
    (seeded) when the network has more than max_entries parameters.
    """
    if epsilon <= 0:
        raise PreconditionError("epsilon must be positive")
    batch = _as_batch(batch)
    perturbed = params.copy()
    _, analytic = _loss_and_grads(perturbed, batch)

    entries = [(name, i) for name, arr in perturbed.learnable().items() for i in range(arr.size)]
    if len(entries) > max_entries:
        chosen = np.random.default_rng(seed).choice(len(entries), size=max_entries, replace=False)
        entries = [entries[i] for i in sorted(chosen)]

    worst = 0.0
    arrays = perturbed.learnable()
    for name, i in entries:
        flat = arrays[name].reshape(-1)
        original = flat[i]
        flat[i] = original + epsilon
        plus = _cross_entropy(_forward(perturbed, batch, Mode.TRAIN)[0], batch.targets)[0]
        flat[i] = original - epsilon
        minus = _cross_entropy(_forward(perturbed, batch, Mode.TRAIN)[0], batch.targets)[0]
        flat[i] = original
        numeric = (plus - minus) / (2.0 * epsilon)
        exact = analytic[name].reshape(-1)[i]
        error = abs(exact - numeric) / max(abs(exact), abs(numeric), 1e-3)
        worst = max(worst, error)
    logger.info(f"Gradient check over {len(entries)} entries: max relative error {worst:.3e}")
    return worst


# ----------------------------------------------------------------------------
# Samples from datasets
# ----------------------------------------------------------------------------


class LabelEmbedder:
    """Phrase vectors for vocabulary ids, computed once per id"""

    def __init__(self, table: EmbeddingTable, labels: Sequence[str]):
        self.table = table
        self.labels = list(labels)
        self._cache: Dict[int, np.ndarray] = {}
        self.oov: List[str] = []

    def __call__(self, label_id: int) -> np.ndarray:
        vec = self._cache.get(label_id)
        if vec is None:
            phrase = phrase_vector(self.table, self.labels[label_id])
            if phrase.oov:
                self.oov.append(self.labels[label_id])
            vec = phrase.vector
            self._cache[label_id] = vec
        return vec


def _pair_sample(embed: LabelEmbedder, image: ImageRecord, subject: Instance, obj: Instance, target: int) -> PairSample:
    p_s = normalize_box(subject.bbox, image.width, image.height)
    p_o = normalize_box(obj.bbox, image.width, image.height)
    p_j = PairGeometry(pair_embeddings(p_s.as_array()[None, :], p_o.as_array()[None, :])[0])
    return PairSample(embed(subject.object_label), embed(obj.object_label), p_s, p_o, p_j, target)


def build_samples(dataset: Dataset, table: EmbeddingTable) -> List[PairSample]:
    """One PairSample per triplet; a pair with several predicates yields several samples"""
    if table.dim is None:
        raise DataError("embedding table is empty")
    embed = LabelEmbedder(table, dataset.object_vocab.labels)
    samples = []
    for image in dataset.images:
        index = image.instance_index
        for trip in image.triplets:
            samples.append(_pair_sample(embed, image, index[trip.subject_id], index[trip.object_id], trip.predicate))
    if embed.oov:
        logger.warning(f"{len(embed.oov)} object labels have no word vector: {embed.oov[:10]}")
    logger.info(f"Built {len(samples)} pair samples from {len(dataset.images)} images")
    return samples


class VDNetPredictor:
    """Scores (subject, object) pairs of an image with a trained VD-Net"""

    def __init__(self, params: VDNetParams, table: EmbeddingTable, object_labels: Sequence[str]):
        self.params = params
        self.embed = LabelEmbedder(table, object_labels)

    def score_pairs(self, image: ImageRecord, pairs: Sequence[Tuple[Instance, Instance]]) -> np.ndarray:
        if not pairs:
            return np.zeros((0, self.params.n_predicates))
        samples = [_pair_sample(self.embed, image, s, o, 0) for s, o in pairs]
        return predict_proba(self.params, samples)

    def __call__(self, image: ImageRecord, subject: Instance, obj: Instance) -> np.ndarray:
        return self.score_pairs(image, [(subject, obj)])[0]


# ----------------------------------------------------------------------------
# Checkpoints
# ----------------------------------------------------------------------------


def save_params(params: VDNetParams, path: Path) -> None:
    """Versioned .npz checkpoint"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays = {name: arr for name, arr in params.learnable().items()}
    arrays.update(
        {
            "bn_1.running_mean": params.bn_1.running_mean,
            "bn_1.running_var": params.bn_1.running_var,
            "bn_2.running_mean": params.bn_2.running_mean,
            "bn_2.running_var": params.bn_2.running_var,
            "format_version": np.array(CHECKPOINT_VERSION),
            "bn_settings": np.array([params.bn_momentum, params.bn_epsilon]),
            "use_batchnorm": np.array(params.use_batchnorm),
            "geo_mean": params.geo_mean,
            "geo_std": params.geo_std,
            "geo_fitted": np.array(params.geo_fitted),
        }
    )
    with path.open("wb") as f:
        np.savez(f, **arrays)


def load_params(path: Path) -> VDNetParams:
    with np.load(Path(path)) as archive:
        version = int(archive["format_version"]) if "format_version" in archive.files else None
        if version != CHECKPOINT_VERSION:
            raise DataError(f"{path}: unsupported VD-Net checkpoint version {version}")
        a = {name: archive[name] for name in archive.files}
    momentum, epsilon = a["bn_settings"].tolist()
    return VDNetParams(
        W_s=a["W_s"],
        b_s=a["b_s"],
        W_o=a["W_o"],
        b_o=a["b_o"],
        W_1=a["W_1"],
        b_1=a["b_1"],
        bn_1=BatchNormState(a["bn_1.gamma"], a["bn_1.beta"], a["bn_1.running_mean"], a["bn_1.running_var"]),
        W_2=a["W_2"],
        b_2=a["b_2"],
        bn_2=BatchNormState(a["bn_2.gamma"], a["bn_2.beta"], a["bn_2.running_mean"], a["bn_2.running_var"]),
        bn_momentum=momentum,
        bn_epsilon=epsilon,
        use_batchnorm=bool(a["use_batchnorm"]),
        geo_mean=a["geo_mean"],
        geo_std=a["geo_std"],
        geo_fitted=bool(a["geo_fitted"]),
    )


def write_loss_history(history: Sequence[float], path: Path) -> None:
    """CSV with columns epoch, mean_loss"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame({"epoch": np.arange(1, len(history) + 1), "mean_loss": list(history)})
    frame.to_csv(path, index=False)
