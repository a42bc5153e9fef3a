"""
Visual Genome JSON ingestion service
"""

import json
import logging
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Set, Tuple, Type, TypeVar

from pydantic import AliasChoices, BaseModel, ConfigDict, Field, ValidationError

from src.relcull.exceptions import DatasetParseError, SchemaError
from src.relcull.models.reports import IngestReport
from src.relcull.models.scene_graph import (
    BBox,
    Dataset,
    ImageRecord,
    Instance,
    Triplet,
    Vocab,
    normalize_label,
)

logger = logging.getLogger(__name__)


class _Raw(BaseModel):
    model_config = ConfigDict(extra="ignore", populate_by_name=True)


class RawObject(_Raw):
    object_id: int
    x: float
    y: float
    w: float
    h: float
    names: List[str] = Field(default_factory=list)
    attributes: List[str] = Field(default_factory=list)


class RawObjectsEntry(_Raw):
    image_id: int
    objects: List[RawObject] = Field(default_factory=list)


class RawEndpoint(_Raw):
    object_id: int


class RawRelationship(_Raw):
    predicate: str
    subject: RawEndpoint
    object: RawEndpoint


class RawRelationshipsEntry(_Raw):
    image_id: int
    relationships: List[RawRelationship] = Field(default_factory=list)


class RawAttributeObject(_Raw):
    object_id: int
    attributes: List[str] = Field(default_factory=list)


class RawAttributesEntry(_Raw):
    image_id: int
    attributes: List[RawAttributeObject] = Field(default_factory=list)


class RawImageMeta(_Raw):
    image_id: int = Field(validation_alias=AliasChoices("image_id", "id"))
    width: float = Field(gt=0)
    height: float = Field(gt=0)


RawT = TypeVar("RawT", bound=_Raw)


class _PendingImage:
    """Per-image scratch state before vocabularies are fixed"""

    def __init__(self, image_id: int, width: float, height: float):
        self.image_id = image_id
        self.width = width
        self.height = height
        # instance_id -> (bbox, object label string, attribute strings)
        self.objects: Dict[int, Tuple[BBox, str, Set[str]]] = {}
        # (subject_id, predicate string, object_id)
        self.relations: List[Tuple[int, str, int]] = []


class VGIngestor:
    """Service turning VG-style JSON documents into a canonical Dataset"""

    def __init__(self, threads: int = 1):
        self.threads = max(1, threads)
        self.report = IngestReport()
        self._counts: Dict[str, int] = defaultdict(int)

    def ingest(
        self,
        objects_source: Path,
        relationships_source: Path,
        attributes_source: Optional[Path],
        image_meta_source: Path,
    ) -> Dataset:
        """Ingest the four VG documents"""
        self._counts = defaultdict(int)
        try:
            meta_entries = self._load(image_meta_source, RawImageMeta)
            object_entries = self._load(objects_source, RawObjectsEntry)
            relation_entries = self._load(relationships_source, RawRelationshipsEntry)
            attribute_entries = self._load(attributes_source, RawAttributesEntry) if attributes_source else []
        except Exception as e:
            logger.error(f"Failed to load VG sources: {e}")
            raise

        pending = self._collect(meta_entries, object_entries, relation_entries, attribute_entries)
        self._check_unique_objects(pending, Path(objects_source).name)
        dataset = self._finalize(pending)

        self.report = IngestReport(
            images=len(dataset.images),
            instances=dataset.n_instances,
            triplets=dataset.n_triplets,
            **self._counts,
        )
        logger.info(
            f"Ingested {self.report.images} images, {self.report.instances} instances, "
            f"{self.report.triplets} triplets"
        )
        dropped = {k: v for k, v in self.report.to_dict().items() if k not in ("images", "instances", "triplets") and v}
        if dropped:
            logger.warning(f"Ingest fix-ups: {dropped}")
        return dataset

    def _load(self, path: Path, model: Type[RawT]) -> List[RawT]:
        """Parse one JSON array document into raw records"""
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        try:
            document = json.loads(text)
        except json.JSONDecodeError as e:
            offset = len(text[: e.pos].encode("utf-8"))
            raise DatasetParseError(e.msg, source=path.name, offset=offset) from e
        if not isinstance(document, list):
            raise SchemaError("<root array>", source=path.name, detail="expected a JSON array")
        records = []
        for position, entry in enumerate(document):
            try:
                records.append(model.model_validate(entry))
            except ValidationError as e:
                first = e.errors()[0]
                field = ".".join(str(part) for part in first["loc"]) or "<entry>"
                raise SchemaError(field, source=f"{path.name}[{position}]", detail=first["msg"]) from e
        return records

    def _collect(
        self,
        meta_entries: List[RawImageMeta],
        object_entries: List[RawObjectsEntry],
        relation_entries: List[RawRelationshipsEntry],
        attribute_entries: List[RawAttributesEntry],
    ) -> Dict[int, _PendingImage]:
        pending = {meta.image_id: _PendingImage(meta.image_id, meta.width, meta.height) for meta in meta_entries}

        for entry in object_entries:
            image = pending.get(entry.image_id)
            if image is None:
                self._counts["images_without_meta"] += 1
                continue
            for obj in entry.objects:
                self._add_object(image, obj)

        for entry in attribute_entries:
            image = pending.get(entry.image_id)
            if image is None:
                continue
            for attr in entry.attributes:
                if attr.object_id in image.objects:
                    labels = {normalize_label(a) for a in attr.attributes if normalize_label(a)}
                    image.objects[attr.object_id][2].update(labels)

        for entry in relation_entries:
            image = pending.get(entry.image_id)
            if image is None:
                self._counts["dropped_triplets"] += len(entry.relationships)
                continue
            for rel in entry.relationships:
                subject_id, object_id = rel.subject.object_id, rel.object.object_id
                predicate = normalize_label(rel.predicate)
                if subject_id not in image.objects or object_id not in image.objects or not predicate:
                    self._counts["dropped_triplets"] += 1
                    continue
                if subject_id == object_id:
                    self._counts["self_loop_triplets"] += 1
                    continue
                image.relations.append((subject_id, predicate, object_id))
        return pending

    def _check_unique_objects(self, pending: Dict[int, _PendingImage], source: str) -> None:
        """Object ids are global: one id may not label objects in two images"""
        owner: Dict[int, int] = {}
        for image_id in sorted(pending):
            for object_id in pending[image_id].objects:
                first = owner.setdefault(object_id, image_id)
                if first != image_id:
                    raise SchemaError(
                        "object_id", source=source, detail=f"object {object_id} appears in images {first} and {image_id}"
                    )

    def _add_object(self, image: _PendingImage, obj: RawObject) -> None:
        names = [normalize_label(name) for name in obj.names if normalize_label(name)]
        if not names:
            self._counts["unlabeled_objects"] += 1
            return
        if len(names) > 1:
            self._counts["multi_name_objects"] += 1
        bbox = self._clamp(obj, image.width, image.height)
        if bbox is None:
            self._counts["dropped_degenerate_boxes"] += 1
            return
        attributes = {normalize_label(a) for a in obj.attributes if normalize_label(a)}
        if obj.object_id in image.objects:
            # repeated object id inside one image: merge attributes, keep the first box
            image.objects[obj.object_id][2].update(attributes)
            return
        image.objects[obj.object_id] = (bbox, names[0], attributes)

    def _clamp(self, obj: RawObject, width: float, height: float) -> Optional[BBox]:
        """Clip a box to the image; None when nothing of positive area remains"""
        if obj.w <= 0 or obj.h <= 0:
            return None
        x1, y1 = max(0.0, obj.x), max(0.0, obj.y)
        x2, y2 = min(width, obj.x + obj.w), min(height, obj.y + obj.h)
        if x2 - x1 <= 0 or y2 - y1 <= 0:
            return None
        if (x1, y1, x2, y2) != (obj.x, obj.y, obj.x + obj.w, obj.y + obj.h):
            self._counts["clamped_boxes"] += 1
        return BBox(x=x1, y=y1, w=x2 - x1, h=y2 - y1)

    def _finalize(self, pending: Dict[int, _PendingImage]) -> Dataset:
        """Fix vocabularies (sorted labels) and build immutable records"""
        object_labels, predicate_labels, attribute_labels = set(), set(), set()
        for image in pending.values():
            for _, label, attrs in image.objects.values():
                object_labels.add(label)
                attribute_labels.update(attrs)
            predicate_labels.update(predicate for _, predicate, _ in image.relations)

        object_vocab = Vocab.from_labels(object_labels)
        predicate_vocab = Vocab.from_labels(predicate_labels)
        attribute_vocab = Vocab.from_labels(attribute_labels)
        object_index, predicate_index, attribute_index = object_vocab.index, predicate_vocab.index, attribute_vocab.index

        def build(image: _PendingImage) -> ImageRecord:
            instances = tuple(
                Instance(
                    instance_id=instance_id,
                    image_id=image.image_id,
                    bbox=bbox,
                    object_label=object_index[label],
                    attribute_labels=tuple(attribute_index[a] for a in attrs),
                )
                for instance_id, (bbox, label, attrs) in sorted(image.objects.items())
            )
            triplets = tuple(
                Triplet(subject_id=s, predicate=predicate_index[p], object_id=o) for s, p, o in image.relations
            )
            return ImageRecord(
                image_id=image.image_id,
                width=image.width,
                height=image.height,
                instances=instances,
                triplets=triplets,
            )

        ordered = [pending[image_id] for image_id in sorted(pending)]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            images = list(pool.map(build, ordered))
        return Dataset.build(images, object_vocab, predicate_vocab, attribute_vocab)


def ingest_vg(
    objects_source: Path,
    relationships_source: Path,
    attributes_source: Optional[Path],
    image_meta_source: Path,
    threads: int = 1,
) -> Dataset:
    """Ingest VG-style JSON documents into a canonical Dataset"""
    return VGIngestor(threads=threads).ingest(objects_source, relationships_source, attributes_source, image_meta_source)
