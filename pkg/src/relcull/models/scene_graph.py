"""
Scene-graph data model: boxes, instances, triplets, images, vocabularies
"""

import re
from collections import Counter
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from pydantic import Field, field_validator, model_validator

from .base import RecordModel

_WHITESPACE = re.compile(r"\s+")


def normalize_label(text: str) -> str:
    """Lowercase, trim and collapse internal whitespace"""
    return _WHITESPACE.sub(" ", text.strip().lower())


class SplitTag(str, Enum):
    """Split membership of an image"""
    TRAIN = "train"
    TEST = "test"


class BBox(RecordModel):
    """Axis-aligned box, top-left corner plus extent, in pixels"""
    x: float = Field(ge=0, description="Left edge (pixels)")
    y: float = Field(ge=0, description="Top edge (pixels)")
    w: float = Field(gt=0, description="Width (pixels)")
    h: float = Field(gt=0, description="Height (pixels)")


class Instance(RecordModel):
    """One annotated object in an image"""
    instance_id: int
    image_id: int
    bbox: BBox
    object_label: int = Field(ge=0)
    attribute_labels: Tuple[int, ...] = ()

    @field_validator("attribute_labels")
    @classmethod
    def _as_sorted_set(cls, value: Tuple[int, ...]) -> Tuple[int, ...]:
        return tuple(sorted(set(value)))


class Triplet(RecordModel):
    """A <subject, predicate, object> annotation between two instances"""
    subject_id: int
    predicate: int = Field(ge=0)
    object_id: int

    @model_validator(mode="after")
    def _distinct_endpoints(self) -> "Triplet":
        if self.subject_id == self.object_id:
            raise ValueError(f"triplet subject and object are the same instance ({self.subject_id})")
        return self


class ImageRecord(RecordModel):
    """All annotations of a single image"""
    image_id: int
    width: float = Field(gt=0)
    height: float = Field(gt=0)
    instances: Tuple[Instance, ...] = ()
    triplets: Tuple[Triplet, ...] = ()

    @model_validator(mode="after")
    def _consistent(self) -> "ImageRecord":
        ids = set()
        for inst in self.instances:
            if inst.image_id != self.image_id:
                raise ValueError(f"instance {inst.instance_id} belongs to image {inst.image_id}, not {self.image_id}")
            box = inst.bbox
            if box.x + box.w > self.width + 1e-6 or box.y + box.h > self.height + 1e-6:
                raise ValueError(f"instance {inst.instance_id} box exceeds image extent")
            if inst.instance_id in ids:
                raise ValueError(f"instance id {inst.instance_id} repeats in image {self.image_id}")
            ids.add(inst.instance_id)
        for trip in self.triplets:
            if trip.subject_id not in ids or trip.object_id not in ids:
                raise ValueError(
                    f"triplet ({trip.subject_id}, {trip.object_id}) references an instance outside image {self.image_id}"
                )
        return self

    @property
    def instance_index(self) -> Dict[int, Instance]:
        """Instance id -> instance"""
        return {inst.instance_id: inst for inst in self.instances}


class Vocab(RecordModel):
    """Dense label <-> id map with per-id frequency"""
    labels: Tuple[str, ...] = ()
    counts: Tuple[int, ...] = ()

    @model_validator(mode="after")
    def _valid(self) -> "Vocab":
        if len(self.labels) != len(self.counts):
            raise ValueError("labels and counts differ in length")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("vocabulary labels are not unique")
        for label in self.labels:
            if label != normalize_label(label) or not label:
                raise ValueError(f"vocabulary label '{label}' is not normalized")
        if any(count < 0 for count in self.counts):
            raise ValueError("vocabulary counts must be non-negative")
        return self

    @classmethod
    def from_labels(cls, labels: Iterable[str]) -> "Vocab":
        """Vocabulary over the given labels, sorted lexicographically, zero counts"""
        unique = sorted({normalize_label(label) for label in labels})
        return cls(labels=tuple(unique), counts=(0,) * len(unique))

    @property
    def index(self) -> Dict[str, int]:
        """Label -> id"""
        return {label: idx for idx, label in enumerate(self.labels)}

    @property
    def size(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def id_of(self, label: str) -> int:
        return self.index[normalize_label(label)]

    def label_of(self, idx: int) -> str:
        return self.labels[idx]

    def with_counts(self, counts: Mapping[int, int]) -> "Vocab":
        """Same entries, counts replaced (missing ids count zero)"""
        return Vocab(labels=self.labels, counts=tuple(int(counts.get(i, 0)) for i in range(self.size)))

    def subset(self, keep_ids: Sequence[int]) -> Tuple["Vocab", Dict[int, int]]:
        """Restrict to keep_ids (relative order preserved); returns the new vocab and old->new id map"""
        ordered = sorted(set(keep_ids))
        remap = {old: new for new, old in enumerate(ordered)}
        vocab = Vocab(labels=tuple(self.labels[i] for i in ordered), counts=tuple(self.counts[i] for i in ordered))
        return vocab, remap


class Dataset(RecordModel):
    """Images plus their three vocabularies"""
    images: Tuple[ImageRecord, ...] = ()
    object_vocab: Vocab = Field(default_factory=Vocab)
    predicate_vocab: Vocab = Field(default_factory=Vocab)
    attribute_vocab: Vocab = Field(default_factory=Vocab)
    split_tags: Optional[Dict[int, SplitTag]] = None

    @model_validator(mode="after")
    def _ids_resolve(self) -> "Dataset":
        n_obj, n_pred, n_attr = self.object_vocab.size, self.predicate_vocab.size, self.attribute_vocab.size
        owner: Dict[int, int] = {}
        for image in self.images:
            for inst in image.instances:
                first = owner.setdefault(inst.instance_id, image.image_id)
                if first != image.image_id:
                    raise ValueError(f"instance id {inst.instance_id} is used in images {first} and {image.image_id}")
                if inst.object_label >= n_obj:
                    raise ValueError(f"instance {inst.instance_id} has unknown object label id {inst.object_label}")
                if any(a >= n_attr for a in inst.attribute_labels):
                    raise ValueError(f"instance {inst.instance_id} has unknown attribute label id")
            for trip in image.triplets:
                if trip.predicate >= n_pred:
                    raise ValueError(f"triplet in image {image.image_id} has unknown predicate id {trip.predicate}")
        return self

    @classmethod
    def build(
        cls,
        images: Iterable[ImageRecord],
        object_vocab: Vocab,
        predicate_vocab: Vocab,
        attribute_vocab: Vocab,
        split_tags: Optional[Dict[int, SplitTag]] = None,
    ) -> "Dataset":
        """Assemble a dataset, sorting images by id and recounting every vocabulary"""
        ordered = tuple(sorted(images, key=lambda image: image.image_id))
        obj_counts, pred_counts, attr_counts = _tally(ordered)
        return cls(
            images=ordered,
            object_vocab=object_vocab.with_counts(obj_counts),
            predicate_vocab=predicate_vocab.with_counts(pred_counts),
            attribute_vocab=attribute_vocab.with_counts(attr_counts),
            split_tags=split_tags,
        )

    @classmethod
    def empty(cls) -> "Dataset":
        return cls()

    @property
    def image_ids(self) -> List[int]:
        return [image.image_id for image in self.images]

    @property
    def n_instances(self) -> int:
        return sum(len(image.instances) for image in self.images)

    @property
    def n_triplets(self) -> int:
        return sum(len(image.triplets) for image in self.images)

    def with_images(self, images: Iterable[ImageRecord], split_tags: Optional[Dict[int, SplitTag]] = None) -> "Dataset":
        """Same vocabularies (ids unchanged), new records, counts recounted"""
        return Dataset.build(images, self.object_vocab, self.predicate_vocab, self.attribute_vocab, split_tags)

    def recounted(self) -> "Dataset":
        return self.with_images(self.images, self.split_tags)

    def counts_consistent(self) -> bool:
        """True when every vocabulary count equals a recount over the records"""
        obj_counts, pred_counts, attr_counts = _tally(self.images)
        return (
            self.object_vocab == self.object_vocab.with_counts(obj_counts)
            and self.predicate_vocab == self.predicate_vocab.with_counts(pred_counts)
            and self.attribute_vocab == self.attribute_vocab.with_counts(attr_counts)
        )

    def densified(self) -> "Dataset":
        """Drop zero-count vocabulary entries and remap ids, relative order preserved"""
        data = self.recounted()
        obj_vocab, obj_map = data.object_vocab.subset([i for i, c in enumerate(data.object_vocab.counts) if c > 0])
        pred_vocab, pred_map = data.predicate_vocab.subset(
            [i for i, c in enumerate(data.predicate_vocab.counts) if c > 0]
        )
        attr_vocab, attr_map = data.attribute_vocab.subset(
            [i for i, c in enumerate(data.attribute_vocab.counts) if c > 0]
        )
        images = [remap_image(image, obj_map, pred_map, attr_map) for image in data.images]
        return Dataset.build(images, obj_vocab, pred_vocab, attr_vocab, data.split_tags)


def remap_image(
    image: ImageRecord,
    object_map: Optional[Mapping[int, int]] = None,
    predicate_map: Optional[Mapping[int, int]] = None,
    attribute_map: Optional[Mapping[int, int]] = None,
) -> ImageRecord:
    """Rewrite label ids of one image through the given maps (None = identity)"""
    instances = []
    for inst in image.instances:
        label = object_map[inst.object_label] if object_map is not None else inst.object_label
        attrs = inst.attribute_labels
        if attribute_map is not None:
            attrs = tuple(attribute_map[a] for a in attrs)
        instances.append(inst.model_copy(update={"object_label": label, "attribute_labels": tuple(sorted(set(attrs)))}))
    triplets = []
    for trip in image.triplets:
        predicate = predicate_map[trip.predicate] if predicate_map is not None else trip.predicate
        triplets.append(trip.model_copy(update={"predicate": predicate}))
    return image.model_copy(update={"instances": tuple(instances), "triplets": tuple(triplets)})


def _tally(images: Iterable[ImageRecord]) -> Tuple[Counter, Counter, Counter]:
    obj_counts: Counter = Counter()
    pred_counts: Counter = Counter()
    attr_counts: Counter = Counter()
    for image in images:
        for inst in image.instances:
            obj_counts[inst.object_label] += 1
            attr_counts.update(inst.attribute_labels)
        pred_counts.update(trip.predicate for trip in image.triplets)
    return obj_counts, pred_counts, attr_counts
