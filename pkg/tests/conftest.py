"""
Shared fixtures: a two-image VG-style corpus, small word-vector files and
ready-made datasets
"""

from pathlib import Path
from typing import Dict

import pytest

from src.relcull.models.scene_graph import Dataset
from tests.helpers import make_dataset, write_json_file

VG_OBJECTS = [
    {
        "image_id": 1,
        "objects": [
            {"object_id": 10, "x": 10, "y": 20, "w": 50, "h": 40, "names": ["Man"], "attributes": ["tall"]},
            {"object_id": 11, "x": 20, "y": 30, "w": 10, "h": 10, "names": ["nose"]},
            {"object_id": 12, "x": 0, "y": 60, "w": 60, "h": 80, "names": ["shirt", "top"], "synsets": ["shirt.n.01"]},
        ],
    },
    {
        "image_id": 2,
        "objects": [
            {"object_id": 20, "x": 0, "y": 0, "w": 30, "h": 30, "names": ["man"]},
            {"object_id": 21, "x": 10, "y": 10, "w": 40, "h": 40, "names": ["horse"]},
        ],
    },
]

VG_RELATIONSHIPS = [
    {
        "image_id": 1,
        "relationships": [
            {"predicate": "has", "subject": {"object_id": 10}, "object": {"object_id": 11}},
            {"predicate": "Wearing ", "subject": {"object_id": 10}, "object": {"object_id": 12}},
        ],
    },
    {
        "image_id": 2,
        "relationships": [
            {"predicate": "riding", "subject": {"object_id": 20}, "object": {"object_id": 21}},
        ],
    },
]

VG_ATTRIBUTES = [
    {"image_id": 1, "attributes": [{"object_id": 12, "attributes": ["white"]}]},
]

VG_IMAGE_DATA = [
    {"image_id": 1, "width": 100, "height": 200, "url": "ignored"},
    {"id": 2, "width": 50, "height": 50},
]


@pytest.fixture
def vg_sources(tmp_path) -> Dict[str, Path]:
    """Paths of the four VG documents of the two-image corpus"""
    return {
        "objects": write_json_file(tmp_path / "objects.json", VG_OBJECTS),
        "relationships": write_json_file(tmp_path / "relationships.json", VG_RELATIONSHIPS),
        "attributes": write_json_file(tmp_path / "attributes.json", VG_ATTRIBUTES),
        "image_meta": write_json_file(tmp_path / "image_data.json", VG_IMAGE_DATA),
    }


@pytest.fixture
def embeddings_file(tmp_path) -> Path:
    path = tmp_path / "vectors.txt"
    path.write_text("cat 1.0 0.0 0.0\ndog 0.0 1.0 0.0\n", encoding="utf-8")
    return path


@pytest.fixture
def man_nose_dataset() -> Dataset:
    """(man, nose) pairs: has x3, on x1; plus one (man, horse) riding"""
    box = (0, 0, 10, 10)
    other = (50, 50, 10, 10)
    return make_dataset(
        [
            (1, [(1, "man", box), (2, "nose", other)], [(1, "has", 2)]),
            (2, [(3, "man", box), (4, "nose", other)], [(3, "has", 4), (3, "on", 4)]),
            (3, [(5, "man", box), (6, "nose", other), (7, "horse", other)], [(5, "has", 6), (5, "riding", 7)]),
        ],
        ["man", "nose", "horse"],
        ["has", "on", "riding"],
    )
