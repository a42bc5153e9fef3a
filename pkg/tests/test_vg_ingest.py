"""
Tests for VG ingestion
"""

import copy

import pytest

from src.relcull.exceptions import DatasetParseError, SchemaError
from src.relcull.services.vg_ingest import VGIngestor, ingest_vg
from tests.conftest import VG_IMAGE_DATA, VG_OBJECTS, VG_RELATIONSHIPS
from tests.helpers import write_json_file


def _ingest(sources):
    return ingest_vg(sources["objects"], sources["relationships"], sources["attributes"], sources["image_meta"])


def test_fixture_counts(vg_sources):
    dataset = _ingest(vg_sources)
    assert len(dataset.images) == 2
    assert dataset.n_instances == 5
    assert dataset.n_triplets == 3
    assert dataset.object_vocab.labels == ("horse", "man", "nose", "shirt")
    assert dataset.predicate_vocab.labels == ("has", "riding", "wearing")
    assert dataset.attribute_vocab.labels == ("tall", "white")
    assert dataset.object_vocab.counts == (1, 2, 1, 1)
    assert dataset.counts_consistent()


def test_first_name_used_and_attributes_merged(vg_sources):
    ingestor = VGIngestor()
    dataset = ingestor.ingest(
        vg_sources["objects"], vg_sources["relationships"], vg_sources["attributes"], vg_sources["image_meta"]
    )
    shirt = dataset.images[0].instance_index[12]
    assert dataset.object_vocab.label_of(shirt.object_label) == "shirt"
    assert shirt.attribute_labels == (dataset.attribute_vocab.id_of("white"),)
    assert ingestor.report.multi_name_objects == 1


def test_empty_sources(tmp_path):
    paths = {name: write_json_file(tmp_path / f"{name}.json", []) for name in ("o", "r", "a", "m")}
    dataset = ingest_vg(paths["o"], paths["r"], paths["a"], paths["m"])
    assert dataset.images == ()
    assert dataset.object_vocab.size == 0
    assert dataset.predicate_vocab.size == 0


def test_dangling_triplet_dropped(vg_sources, tmp_path):
    relationships = copy.deepcopy(VG_RELATIONSHIPS)
    relationships[1]["relationships"].append(
        {"predicate": "near", "subject": {"object_id": 20}, "object": {"object_id": 99}}
    )
    rel_path = write_json_file(tmp_path / "rel_dangling.json", relationships)
    ingestor = VGIngestor()
    dataset = ingestor.ingest(vg_sources["objects"], rel_path, None, vg_sources["image_meta"])
    assert dataset.n_triplets == 3
    assert ingestor.report.dropped_triplets == 1


def test_clamp_and_degenerate(vg_sources, tmp_path):
    objects = copy.deepcopy(VG_OBJECTS)
    objects[0]["objects"].append({"object_id": 13, "x": 90, "y": 0, "w": 20, "h": 10, "names": ["hat"]})
    objects[0]["objects"].append({"object_id": 14, "x": 5, "y": 5, "w": 0, "h": 10, "names": ["ghost"]})
    relationships = copy.deepcopy(VG_RELATIONSHIPS)
    relationships[0]["relationships"].append(
        {"predicate": "near", "subject": {"object_id": 14}, "object": {"object_id": 10}}
    )
    ingestor = VGIngestor()
    dataset = ingestor.ingest(
        write_json_file(tmp_path / "o.json", objects),
        write_json_file(tmp_path / "r.json", relationships),
        None,
        vg_sources["image_meta"],
    )
    hat = dataset.images[0].instance_index[13]
    assert hat.bbox.w == pytest.approx(10.0)
    assert 14 not in dataset.images[0].instance_index
    assert ingestor.report.clamped_boxes == 1
    assert ingestor.report.dropped_degenerate_boxes == 1
    assert ingestor.report.dropped_triplets == 1


def test_malformed_json_reports_offset(vg_sources, tmp_path):
    broken = tmp_path / "objects.json"
    broken.write_text('[{"image_id": 1, "objects": [', encoding="utf-8")
    with pytest.raises(DatasetParseError) as info:
        ingest_vg(broken, vg_sources["relationships"], None, vg_sources["image_meta"])
    assert info.value.offset is not None
    assert "byte offset" in str(info.value)


def test_missing_field_names_it(vg_sources, tmp_path):
    objects = copy.deepcopy(VG_OBJECTS)
    del objects[1]["objects"][0]["x"]
    with pytest.raises(SchemaError) as info:
        ingest_vg(write_json_file(tmp_path / "o.json", objects), vg_sources["relationships"], None, vg_sources["image_meta"])
    assert info.value.field.endswith("x")


def test_missing_image_size_names_it(vg_sources, tmp_path):
    meta = copy.deepcopy(VG_IMAGE_DATA)
    del meta[0]["width"]
    with pytest.raises(SchemaError) as info:
        ingest_vg(vg_sources["objects"], vg_sources["relationships"], None, write_json_file(tmp_path / "m.json", meta))
    assert info.value.field == "width"


def test_ingest_is_idempotent(vg_sources):
    assert _ingest(vg_sources) == _ingest(vg_sources)


def test_parallel_ingest_matches_serial(vg_sources):
    serial = _ingest(vg_sources)
    parallel = ingest_vg(
        vg_sources["objects"], vg_sources["relationships"], vg_sources["attributes"], vg_sources["image_meta"], threads=4
    )
    assert serial == parallel


def test_zero_image_width_is_schema_error(vg_sources, tmp_path):
    meta = copy.deepcopy(VG_IMAGE_DATA)
    meta[1]["width"] = 0
    with pytest.raises(SchemaError) as info:
        ingest_vg(vg_sources["objects"], vg_sources["relationships"], None, write_json_file(tmp_path / "m.json", meta))
    assert info.value.field == "width"


def test_object_id_shared_by_two_images_rejected(vg_sources, tmp_path):
    objects = copy.deepcopy(VG_OBJECTS)
    objects[1]["objects"][0]["object_id"] = 10
    with pytest.raises(SchemaError) as info:
        ingest_vg(write_json_file(tmp_path / "o.json", objects), vg_sources["relationships"], None, vg_sources["image_meta"])
    assert info.value.field == "object_id"
    assert "images 1 and 2" in str(info.value)
