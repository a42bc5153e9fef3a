"""
Label-space construction: frequency pre-selection and predicate clustering
"""

import json
import logging
from collections import defaultdict
from typing import Dict, List

import numpy as np
from pydantic import Field, model_validator
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import pdist

from src.relcull.exceptions import MappingError, PreconditionError
from src.relcull.models.base import RecordModel
from src.relcull.models.configs import Linkage
from src.relcull.models.scene_graph import Dataset, Vocab, remap_image
from src.relcull.services.embeddings import EmbeddingTable, phrase_vector

logger = logging.getLogger(__name__)


class ClusterMapping(RecordModel):
    """Original predicate id -> canonical predicate id, plus the clusters it induces"""
    mapping: Dict[int, int]
    clusters: Dict[int, List[int]]
    labels: List[str] = Field(description="Predicate labels of the clustered vocabulary, by id")
    linkage: Linkage = Linkage.AVERAGE
    distance_threshold: float = Field(default=0.35, ge=0.0, le=2.0)

    @model_validator(mode="after")
    def _partition(self) -> "ClusterMapping":
        members = sorted(m for group in self.clusters.values() for m in group)
        if members != sorted(self.mapping):
            raise ValueError("clusters do not partition the mapped ids")
        for canonical, group in self.clusters.items():
            if canonical not in group:
                raise ValueError(f"canonical id {canonical} is not a member of its own cluster")
            if any(self.mapping[m] != canonical for m in group):
                raise ValueError(f"cluster {canonical} disagrees with the mapping")
        return self

    @classmethod
    def identity(cls, vocab: Vocab) -> "ClusterMapping":
        ids = range(vocab.size)
        return cls(mapping={i: i for i in ids}, clusters={i: [i] for i in ids}, labels=list(vocab.labels))

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    def to_json(self) -> str:
        """Audit form {canonical label: [member labels...]}"""
        audit = {
            self.labels[canonical]: sorted(self.labels[m] for m in group)
            for canonical, group in sorted(self.clusters.items())
        }
        return json.dumps(audit, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str, vocab: Vocab) -> "ClusterMapping":
        """Rebuild from the audit form against the vocabulary it was made for"""
        audit = json.loads(text)
        mapping, clusters = {}, {}
        for canonical_label, member_labels in audit.items():
            try:
                canonical = vocab.id_of(canonical_label)
                group = sorted(vocab.id_of(label) for label in member_labels)
            except KeyError as e:
                raise MappingError(str(e.args[0])) from e
            clusters[canonical] = group
            for member in group:
                mapping[member] = canonical
        return cls(mapping=mapping, clusters=clusters, labels=list(vocab.labels))


def select_top_labels(dataset: Dataset, n_objects: int, n_predicates: int) -> Dataset:
    """Keep the n most frequent object and predicate labels (ties by label), drop what uses the rest"""
    if n_objects < 1 or n_predicates < 1:
        raise PreconditionError("n_objects and n_predicates must be at least 1")
    data = dataset.recounted()
    keep_objects = _top_ids(data.object_vocab, n_objects)
    keep_predicates = _top_ids(data.predicate_vocab, n_predicates)

    images = []
    dropped_instances = dropped_triplets = 0
    for image in data.images:
        instances = tuple(inst for inst in image.instances if inst.object_label in keep_objects)
        alive = {inst.instance_id for inst in instances}
        triplets = tuple(
            t for t in image.triplets if t.predicate in keep_predicates and t.subject_id in alive and t.object_id in alive
        )
        dropped_instances += len(image.instances) - len(instances)
        dropped_triplets += len(image.triplets) - len(triplets)
        images.append(image.model_copy(update={"instances": instances, "triplets": triplets}))

    result = data.with_images(images, data.split_tags).densified()
    logger.info(
        f"Top-label selection kept {result.object_vocab.size} objects / {result.predicate_vocab.size} predicates; "
        f"dropped {dropped_instances} instances, {dropped_triplets} triplets"
    )
    return result


def _top_ids(vocab: Vocab, n: int) -> set:
    ranked = sorted(
        (i for i in range(vocab.size) if vocab.counts[i] > 0),
        key=lambda i: (-vocab.counts[i], vocab.labels[i]),
    )
    return set(ranked[:n])


def cluster_predicates(
    predicate_vocab: Vocab,
    embedding_table: EmbeddingTable,
    linkage_method: Linkage = Linkage.AVERAGE,
    distance_threshold: float = 0.35,
) -> ClusterMapping:
    """Agglomerative clustering of predicate phrase vectors under cosine distance"""
    if predicate_vocab.size == 0:
        raise PreconditionError("cannot cluster an empty predicate vocabulary")
    if not 0.0 <= distance_threshold <= 2.0:
        raise PreconditionError(f"distance_threshold must lie in [0, 2], got {distance_threshold}")
    linkage_method = Linkage(linkage_method)

    phrases = [phrase_vector(embedding_table, label) for label in predicate_vocab.labels]
    known = [i for i, p in enumerate(phrases) if not p.oov and np.linalg.norm(p.vector) > 0]
    oov = [i for i in range(predicate_vocab.size) if i not in set(known)]
    if oov:
        logger.warning(f"{len(oov)} predicates have no word vector and stay unmerged")

    # cluster label per predicate id; OOV predicates are singletons
    assignment: Dict[int, int] = {}
    if len(known) >= 2:
        vectors = np.stack([phrases[i].vector for i in known])
        distances = np.clip(pdist(vectors, metric="cosine"), 0.0, 2.0)
        tree = linkage(distances, method=linkage_method.value)
        flat = fcluster(tree, t=distance_threshold, criterion="distance")
        for i, cluster_label in zip(known, flat):
            assignment[i] = int(cluster_label)
    elif known:
        assignment[known[0]] = 1
    next_label = max(assignment.values(), default=0) + 1
    for i in oov:
        assignment[i] = next_label
        next_label += 1

    groups: Dict[int, List[int]] = defaultdict(list)
    for i in range(predicate_vocab.size):
        groups[assignment[i]].append(i)

    mapping, clusters = {}, {}
    for group in groups.values():
        canonical = min(group, key=lambda i: (-predicate_vocab.counts[i], predicate_vocab.labels[i]))
        clusters[canonical] = sorted(group)
        for member in group:
            mapping[member] = canonical
    clusters = dict(sorted(clusters.items()))

    result = ClusterMapping(
        mapping=dict(sorted(mapping.items())),
        clusters=clusters,
        labels=list(predicate_vocab.labels),
        linkage=linkage_method,
        distance_threshold=distance_threshold,
    )
    logger.info(f"Clustered {predicate_vocab.size} predicates into {result.n_clusters} canonical labels")
    return result


def apply_mapping(dataset: Dataset, mapping: ClusterMapping) -> Dataset:
    """Rewrite predicates to their canonical ids, dedupe merged triplets, shrink the vocabulary"""
    vocab = dataset.predicate_vocab
    for idx, label in enumerate(vocab.labels):
        if idx not in mapping.mapping:
            raise MappingError(label)
    canonical_ids = sorted(set(mapping.mapping[i] for i in range(vocab.size)))
    new_vocab, remap = vocab.subset(canonical_ids)
    predicate_map = {i: remap[mapping.mapping[i]] for i in range(vocab.size)}

    images = []
    duplicates = 0
    for image in dataset.images:
        rewritten = remap_image(image, predicate_map=predicate_map)
        seen, triplets = set(), []
        for trip in rewritten.triplets:
            key = (trip.subject_id, trip.predicate, trip.object_id)
            if key in seen:
                duplicates += 1
                continue
            seen.add(key)
            triplets.append(trip)
        images.append(rewritten.model_copy(update={"triplets": tuple(triplets)}))

    result = Dataset.build(images, dataset.object_vocab, new_vocab, dataset.attribute_vocab, dataset.split_tags)
    logger.info(f"Applied cluster mapping: {vocab.size} -> {new_vocab.size} predicates, {duplicates} duplicate triplets merged")
    return result
