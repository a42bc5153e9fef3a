"""
Canonical dataset storage, deterministic splits and dataset statistics
"""

import json
import logging
import math
from collections import Counter
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ValidationError

from src.relcull.exceptions import DatasetParseError, FormatVersionError, PreconditionError
from src.relcull.models.reports import StatsReport
from src.relcull.models.scene_graph import Dataset, ImageRecord, SplitTag, Vocab

logger = logging.getLogger(__name__)

FORMAT_NAME = "sgds"
FORMAT_VERSION = 1


class _Header(BaseModel):
    format: str
    version: int


class _Sidecar(BaseModel):
    object_vocab: Vocab
    predicate_vocab: Vocab
    attribute_vocab: Vocab
    split_tags: Optional[Dict[int, SplitTag]] = None


def vocab_path(path: Path) -> Path:
    """Sidecar vocabulary file next to a canonical JSONL file"""
    path = Path(path)
    return path.with_name(path.name + ".vocab.json")


def save_dataset(dataset: Dataset, path: Path) -> None:
    """Write JSONL (header line + one image per line) and the vocabulary sidecar"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = _Header(format=FORMAT_NAME, version=FORMAT_VERSION)
    with path.open("w", encoding="utf-8") as f:
        f.write(header.model_dump_json() + "\n")
        for image in dataset.images:
            f.write(image.model_dump_json() + "\n")
    sidecar = _Sidecar(
        object_vocab=dataset.object_vocab,
        predicate_vocab=dataset.predicate_vocab,
        attribute_vocab=dataset.attribute_vocab,
        split_tags=dataset.split_tags,
    )
    vocab_path(path).write_text(sidecar.model_dump_json(indent=1), encoding="utf-8")
    logger.info(f"Saved {len(dataset.images)} images to {path}")


def load_dataset(path: Path) -> Dataset:
    """Read a canonical dataset written by save_dataset"""
    path = Path(path)
    with path.open("r", encoding="utf-8") as f:
        lines = f.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise DatasetParseError("missing header", source=path.name, line=1)

    try:
        header = _Header.model_validate_json(lines[0])
    except ValidationError as e:
        raise DatasetParseError(f"bad header: {e.errors()[0]['msg']}", source=path.name, line=1) from e
    if header.format != FORMAT_NAME or header.version != FORMAT_VERSION:
        raise FormatVersionError(
            f"{path.name}: expected {FORMAT_NAME} v{FORMAT_VERSION}, found {header.format} v{header.version}"
        )

    images = []
    for line_no, line in enumerate(lines[1:], start=2):
        try:
            images.append(ImageRecord.model_validate_json(line))
        except ValidationError as e:
            raise DatasetParseError(e.errors()[0]["msg"], source=path.name, line=line_no) from e

    sidecar_file = vocab_path(path)
    try:
        sidecar = _Sidecar.model_validate_json(sidecar_file.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise DatasetParseError(e.errors()[0]["msg"], source=sidecar_file.name) from e

    try:
        return Dataset(
            images=tuple(images),
            object_vocab=sidecar.object_vocab,
            predicate_vocab=sidecar.predicate_vocab,
            attribute_vocab=sidecar.attribute_vocab,
            split_tags=sidecar.split_tags,
        )
    except ValidationError as e:
        raise DatasetParseError(e.errors()[0]["msg"], source=path.name) from e


def split_dataset(dataset: Dataset, train_fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """Split by image; |train| = round(train_fraction * n_images), half rounding up"""
    if not 0.0 <= train_fraction <= 1.0:
        raise PreconditionError(f"train_fraction must lie in [0, 1], got {train_fraction}")
    image_ids = sorted(dataset.image_ids)
    n_train = int(math.floor(train_fraction * len(image_ids) + 0.5))
    order = np.random.default_rng(seed).permutation(len(image_ids))
    train_ids = {image_ids[i] for i in order[:n_train]}

    tags = {image_id: SplitTag.TRAIN if image_id in train_ids else SplitTag.TEST for image_id in image_ids}
    train = dataset.with_images([im for im in dataset.images if im.image_id in train_ids], split_tags=tags)
    test = dataset.with_images([im for im in dataset.images if im.image_id not in train_ids], split_tags=tags)
    logger.info(f"Split {len(image_ids)} images into {len(train.images)} train / {len(test.images)} test (seed {seed})")
    return train, test


def dataset_stats(dataset: Dataset) -> StatsReport:
    """Category, annotation, triplet-type and image counts"""
    triplet_types = set()
    duplicate_boxes = 0
    attribute_annotations = 0
    for image in dataset.images:
        labels = image.instance_index
        seen = Counter()
        for inst in image.instances:
            box = inst.bbox
            seen[(box.x, box.y, box.w, box.h, inst.object_label)] += 1
            attribute_annotations += len(inst.attribute_labels)
        duplicate_boxes += sum(n - 1 for n in seen.values() if n > 1)
        for trip in image.triplets:
            triplet_types.add(
                (labels[trip.subject_id].object_label, trip.predicate, labels[trip.object_id].object_label)
            )

    report = StatsReport(
        n_object_categories=sum(1 for c in dataset.object_vocab.counts if c > 0),
        n_instances=dataset.n_instances,
        n_predicate_categories=sum(1 for c in dataset.predicate_vocab.counts if c > 0),
        n_triplet_types=len(triplet_types),
        n_images=len(dataset.images),
        n_triplets=dataset.n_triplets,
        n_attribute_categories=sum(1 for c in dataset.attribute_vocab.counts if c > 0),
        n_attribute_annotations=attribute_annotations,
        n_duplicate_boxes=duplicate_boxes,
    )
    if duplicate_boxes:
        logger.warning(f"{duplicate_boxes} duplicate boxes kept in dataset")
    return report


def write_json(model: BaseModel, path: Path) -> None:
    """Write a record as stable, key-sorted JSON"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = json.loads(model.model_dump_json())
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
