"""
Tests for top-label selection, predicate clustering and mapping
"""

import numpy as np
import pytest

from src.relcull.exceptions import MappingError, PreconditionError
from src.relcull.models.configs import Linkage
from src.relcull.models.scene_graph import Vocab
from src.relcull.services.label_space import ClusterMapping, apply_mapping, cluster_predicates, select_top_labels
from tests.helpers import make_dataset, make_table

BOX = (0, 0, 10, 10)


def _abc_dataset():
    """Predicate counts a:3, b:2, c:1 over one image"""
    instances = [(i, "thing", BOX) for i in range(1, 5)]
    triplets = [(1, "a", 2), (2, "a", 3), (3, "a", 4), (1, "b", 3), (2, "b", 4), (1, "c", 4)]
    return make_dataset([(1, instances, triplets)], ["thing"], ["a", "b", "c"])


def test_select_top_predicates():
    result = select_top_labels(_abc_dataset(), n_objects=10, n_predicates=2)
    assert result.predicate_vocab.labels == ("a", "b")
    assert result.predicate_vocab.counts == (3, 2)
    assert result.n_triplets == 5


def test_select_top_larger_than_vocab_is_identity():
    data = _abc_dataset()
    assert select_top_labels(data, 100, 100) == data


def test_select_top_is_idempotent():
    once = select_top_labels(_abc_dataset(), 1, 2)
    assert select_top_labels(once, 1, 2) == once


def test_select_top_ties_lexicographic():
    data = make_dataset([(1, [(1, "x", BOX), (2, "y", BOX)], [(1, "b", 2), (2, "a", 1)])], ["x", "y"], ["a", "b"])
    assert select_top_labels(data, 5, 1).predicate_vocab.labels == ("a",)


def test_select_top_rejects_zero():
    with pytest.raises(PreconditionError):
        select_top_labels(_abc_dataset(), 0, 1)


def _vocab(labels, counts):
    return Vocab(labels=tuple(labels), counts=tuple(counts))


def test_three_vectors_two_clusters():
    # p and q at cosine distance ~0.01, r nearly orthogonal to both
    theta = np.arccos(0.99)
    table = make_table({"p": [1.0, 0.0, 0.0], "q": [np.cos(theta), np.sin(theta), 0.0], "r": [0.1, 0.0, 1.0]})
    mapping = cluster_predicates(_vocab(["p", "q", "r"], [5, 3, 1]), table, Linkage.AVERAGE, 0.3)
    assert mapping.n_clusters == 2
    assert mapping.mapping == {0: 0, 1: 0, 2: 2}


def test_single_predicate_identity():
    table = make_table({"on": [1.0, 2.0]})
    mapping = cluster_predicates(_vocab(["on"], [4]), table)
    assert mapping == ClusterMapping.identity(_vocab(["on"], [4]))


def test_wears_absorbs_is_wearing_a():
    table = make_table(
        {
            "wears": [1.0, 0.05, 0.0, 0.0],
            "is": [0.9, 0.0, 0.1, 0.0],
            "wearing": [1.0, 0.1, 0.0, 0.0],
            "a": [1.1, 0.0, -0.1, 0.0],
            "under": [0.0, 0.0, 0.0, 1.0],
        }
    )
    vocab = _vocab(["is wearing a", "under", "wears"], [2, 7, 9])
    mapping = cluster_predicates(vocab, table, Linkage.AVERAGE, 0.35)
    assert mapping.mapping[0] == mapping.mapping[2] == 2
    assert mapping.mapping[1] == 1


def test_oov_never_merged():
    table = make_table({"x": [1.0, 0.0]})
    vocab = _vocab(["unknown one", "unknown two", "x"], [1, 1, 1])
    mapping = cluster_predicates(vocab, table, Linkage.SINGLE, 2.0)
    assert mapping.n_clusters == 3


def test_empty_vocab_rejected():
    with pytest.raises(PreconditionError):
        cluster_predicates(Vocab(), make_table({"x": [1.0]}))


def test_planted_clusters_deterministic():
    rng = np.random.default_rng(5)
    centers = rng.standard_normal((4, 50))
    vectors, labels, counts = {}, [], []
    for c in range(4):
        for m in range(3):
            token = f"p{c}m{m}"
            vectors[token] = centers[c] + 0.01 * rng.standard_normal(50)
            labels.append(token)
            counts.append(10 - m)
    table = make_table(vectors)
    order = sorted(range(len(labels)), key=lambda i: labels[i])
    vocab = _vocab([labels[i] for i in order], [counts[i] for i in order])
    first = cluster_predicates(vocab, table, Linkage.AVERAGE, 0.35)
    assert first.n_clusters == 4
    assert first == cluster_predicates(vocab, table, Linkage.AVERAGE, 0.35)
    for canonical in first.clusters:
        assert vocab.labels[canonical].endswith("m0")


def test_cluster_count_monotone_in_threshold():
    rng = np.random.default_rng(1)
    table = make_table({f"t{i}": rng.standard_normal(6) for i in range(8)})
    vocab = _vocab([f"t{i}" for i in range(8)], [1] * 8)
    sizes = [cluster_predicates(vocab, table, Linkage.AVERAGE, t).n_clusters for t in np.linspace(0.0, 2.0, 11)]
    assert all(b <= a for a, b in zip(sizes, sizes[1:]))


def test_identity_mapping_unchanged():
    data = _abc_dataset()
    assert apply_mapping(data, ClusterMapping.identity(data.predicate_vocab)) == data


def test_merge_sums_counts():
    instances = [(i, "thing", BOX) for i in range(1, 5)]
    triplets = [(1, "a", 2), (2, "a", 3), (3, "a", 4), (1, "b", 3), (2, "b", 4)]
    data = make_dataset([(1, instances, triplets)], ["thing"], ["a", "b"])
    mapping = ClusterMapping(mapping={0: 0, 1: 0}, clusters={0: [0, 1]}, labels=["a", "b"])
    merged = apply_mapping(data, mapping)
    assert merged.predicate_vocab.labels == ("a",)
    assert merged.predicate_vocab.counts == (5,)


def test_merge_dedupes_same_pair():
    data = make_dataset([(1, [(1, "x", BOX), (2, "y", BOX)], [(1, "b", 2), (1, "a", 2)])], ["x", "y"], ["a", "b"])
    mapping = ClusterMapping(mapping={0: 0, 1: 0}, clusters={0: [0, 1]}, labels=["a", "b"])
    merged = apply_mapping(data, mapping)
    assert merged.n_triplets == 1
    assert merged.counts_consistent()


def test_missing_label_named():
    data = _abc_dataset()
    mapping = ClusterMapping(mapping={0: 0, 1: 1}, clusters={0: [0], 1: [1]}, labels=["a", "b", "c"])
    with pytest.raises(MappingError) as info:
        apply_mapping(data, mapping)
    assert info.value.label == "c"


def test_audit_json_round_trip():
    vocab = _vocab(["a", "b", "c"], [3, 2, 1])
    mapping = ClusterMapping(mapping={0: 0, 1: 0, 2: 2}, clusters={0: [0, 1], 2: [2]}, labels=list(vocab.labels))
    assert ClusterMapping.from_json(mapping.to_json(), vocab).mapping == mapping.mapping
