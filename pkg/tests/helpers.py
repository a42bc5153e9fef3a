"""
Builders shared by the test modules
"""

import json
from pathlib import Path
from typing import Dict

import numpy as np

from src.relcull.models.scene_graph import BBox, Dataset, ImageRecord, Instance, Triplet, Vocab
from src.relcull.services.embeddings import EmbeddingTable


def write_json_file(path: Path, payload) -> Path:
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def make_table(vectors: Dict[str, list]) -> EmbeddingTable:
    dim = len(next(iter(vectors.values())))
    return EmbeddingTable({token: np.asarray(vec, dtype=np.float64) for token, vec in vectors.items()}, dim)


def make_dataset(images_spec, object_labels, predicate_labels, size: float = 100.0) -> Dataset:
    """Build a dataset from [(image_id, [(instance_id, label, (x, y, w, h))], [(s, predicate, o)])]"""
    object_vocab = Vocab.from_labels(object_labels)
    predicate_vocab = Vocab.from_labels(predicate_labels)
    images = []
    for image_id, instances, triplets in images_spec:
        records = tuple(
            Instance(
                instance_id=iid,
                image_id=image_id,
                bbox=BBox(x=box[0], y=box[1], w=box[2], h=box[3]),
                object_label=object_vocab.id_of(label),
            )
            for iid, label, box in instances
        )
        trips = tuple(Triplet(subject_id=s, predicate=predicate_vocab.id_of(p), object_id=o) for s, p, o in triplets)
        images.append(ImageRecord(image_id=image_id, width=size, height=size, instances=records, triplets=trips))
    return Dataset.build(images, object_vocab, predicate_vocab, Vocab())
