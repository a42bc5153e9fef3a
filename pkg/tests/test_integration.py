"""
Full Visual Genome runs. Set RELCULL_VG_DIR to a directory holding objects.json,
relationships.json, attributes.json and image_data.json, and RELCULL_WORD_VECTORS
to a GloVe-style text file for the curation run.
"""

import os
from pathlib import Path

import pytest

from src.relcull.models.configs import CurateConfig
from src.relcull.services.curation import curate
from src.relcull.services.dataset_store import dataset_stats
from src.relcull.services.embeddings import load_embeddings
from src.relcull.services.vg_ingest import VGIngestor

VG_DIR = os.environ.get("RELCULL_VG_DIR")
WORD_VECTORS = os.environ.get("RELCULL_WORD_VECTORS")

pytestmark = [
    pytest.mark.integration,
    pytest.mark.skipif(not VG_DIR, reason="RELCULL_VG_DIR is not set"),
]


@pytest.fixture(scope="module")
def visual_genome():
    root = Path(VG_DIR)
    attributes = root / "attributes.json"
    ingestor = VGIngestor(threads=4)
    dataset = ingestor.ingest(
        root / "objects.json",
        root / "relationships.json",
        attributes if attributes.exists() else None,
        root / "image_data.json",
    )
    return dataset, ingestor.report


def test_ingest_counts_consistent(visual_genome):
    dataset, report = visual_genome
    assert dataset.counts_consistent()
    assert report.images == len(dataset.images)
    stats = dataset_stats(dataset)
    assert stats.n_images > 100_000
    assert stats.n_predicate_categories > 1000


@pytest.mark.skipif(not WORD_VECTORS, reason="RELCULL_WORD_VECTORS is not set")
def test_curation_drops_some_predicates(visual_genome):
    dataset, _ = visual_genome
    table = load_embeddings(Path(WORD_VECTORS))
    result = curate(dataset, table, CurateConfig(n_objects=150, n_predicates=50))
    assert result.dropped
    assert result.vrr.n_triplets < result.rvg.n_triplets
