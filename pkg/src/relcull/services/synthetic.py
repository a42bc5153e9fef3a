"""
Synthetic scene-graph generator with known predicate predictability
"""

import logging
from typing import List, Optional

import numpy as np

from src.relcull.exceptions import PreconditionError
from src.relcull.models.scene_graph import BBox, Dataset, ImageRecord, Instance, Triplet, Vocab, normalize_label
from src.relcull.models.synth import GeometricRelation, PredicateRule, RuleKind, SynthSpec
from src.relcull.services.embeddings import EmbeddingTable, random_embeddings

logger = logging.getLogger(__name__)

MIN_BOX_SHARE = 0.1
MAX_BOX_SHARE = 0.4


def class_labels(n_classes: int) -> List[str]:
    return [f"obj{i}" for i in range(n_classes)]


def rule_holds(relation: GeometricRelation, subject: BBox, obj: BBox) -> bool:
    """Geometric condition between subject and object boxes (pixel or normalized units)"""
    if relation == GeometricRelation.ABOVE:
        return subject.y + subject.h / 2.0 < obj.y + obj.h / 2.0
    if relation == GeometricRelation.LEFT_OF:
        return subject.x + subject.w / 2.0 < obj.x + obj.w / 2.0
    return (
        subject.x <= obj.x
        and subject.y <= obj.y
        and subject.x + subject.w >= obj.x + obj.w
        and subject.y + subject.h >= obj.y + obj.h
    )


def validate_spec(spec: SynthSpec) -> None:
    """Raise PreconditionError for a rule set that cannot be generated"""
    names = [rule.name for rule in spec.rules]
    for name in names:
        if not name or normalize_label(name) != name or " " in name:
            raise PreconditionError(f"rule name '{name}' must be a single normalized token")
    if len(set(names)) != len(names):
        raise PreconditionError(f"rule names are not unique: {names}")
    coins = [rule for rule in spec.rules if rule.kind == RuleKind.COIN]
    for rule in coins:
        if rule.n_outcomes != len(coins):
            raise PreconditionError(
                f"coin rule '{rule.name}' declares {rule.n_outcomes} outcomes but the coin has {len(coins)} sides"
            )
    if not coins and spec.geometric_share == 0.0:
        raise PreconditionError("no coin rules and geometric_share is 0: no predicate can ever be emitted")


def _random_box(rng: np.random.Generator, size: float) -> BBox:
    w, h = rng.uniform(MIN_BOX_SHARE * size, MAX_BOX_SHARE * size, size=2)
    x = rng.uniform(0.0, size - w)
    y = rng.uniform(0.0, size - h)
    return BBox(x=float(x), y=float(y), w=float(w), h=float(h))


def _emit(
    rng: np.random.Generator,
    spec: SynthSpec,
    geometric: List[PredicateRule],
    coins: List[PredicateRule],
    subject: BBox,
    obj: BBox,
) -> Optional[str]:
    # both draws happen for every pair so the stream stays aligned
    family, side = rng.random(), rng.integers(0, max(len(coins), 1))
    if family < spec.geometric_share:
        for rule in geometric:
            if rule_holds(rule.relation, subject, obj):
                return rule.name
    if coins:
        return coins[int(side)].name
    return None


def gen_synthetic(spec: SynthSpec) -> Dataset:
    """Random images whose predicates follow the rules of spec, deterministic per seed"""
    validate_spec(spec)
    rng = np.random.default_rng(spec.seed)
    geometric = [rule for rule in spec.rules if rule.kind == RuleKind.GEOMETRIC]
    coins = [rule for rule in spec.rules if rule.kind == RuleKind.COIN]
    object_vocab = Vocab.from_labels(class_labels(spec.n_classes))
    predicate_vocab = Vocab.from_labels(rule.name for rule in spec.rules)
    object_index, predicate_index = object_vocab.index, predicate_vocab.index
    names = class_labels(spec.n_classes)

    images = []
    next_instance = 0
    k = spec.instances_per_image
    all_pairs = [(i, j) for i in range(k) for j in range(k) if i != j]
    n_pairs = min(spec.pairs_per_image, len(all_pairs))
    for image_id in range(spec.n_images):
        instances = []
        for _ in range(k):
            label = names[int(rng.integers(0, spec.n_classes))]
            instances.append(
                Instance(
                    instance_id=next_instance,
                    image_id=image_id,
                    bbox=_random_box(rng, spec.image_size),
                    object_label=object_index[label],
                )
            )
            next_instance += 1
        triplets = []
        for p in rng.choice(len(all_pairs), size=n_pairs, replace=False):
            i, j = all_pairs[int(p)]
            predicate = _emit(rng, spec, geometric, coins, instances[i].bbox, instances[j].bbox)
            if predicate is not None:
                triplets.append(
                    Triplet(
                        subject_id=instances[i].instance_id,
                        predicate=predicate_index[predicate],
                        object_id=instances[j].instance_id,
                    )
                )
        images.append(
            ImageRecord(
                image_id=image_id,
                width=spec.image_size,
                height=spec.image_size,
                instances=tuple(instances),
                triplets=tuple(triplets),
            )
        )

    dataset = Dataset.build(images, object_vocab, predicate_vocab, Vocab())
    counts = dict(zip(dataset.predicate_vocab.labels, dataset.predicate_vocab.counts))
    logger.info(f"Generated {len(images)} synthetic images, {dataset.n_triplets} triplets: {counts}")
    return dataset


def synthetic_embeddings(spec: SynthSpec, dim: int = 300, seed: Optional[int] = None) -> EmbeddingTable:
    """Seeded random word vectors covering every class and rule name"""
    tokens = class_labels(spec.n_classes) + [rule.name for rule in spec.rules]
    return random_embeddings(tokens, dim, spec.seed if seed is None else seed)
