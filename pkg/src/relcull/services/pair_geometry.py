"""
Normalized boxes and the 12-component joint position embedding of a
subject/object pair
"""

from dataclasses import dataclass

import numpy as np

from src.relcull.exceptions import PreconditionError
from src.relcull.models.scene_graph import BBox

PAIR_DIM = 12
BOX_DIM = 4


@dataclass(frozen=True)
class NormBox:
    """Box in image-normalized units: x, w divided by image width; y, h by image height"""
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (0.0 <= self.x <= 1.0 and 0.0 <= self.y <= 1.0):
            raise PreconditionError(f"normalized corner ({self.x}, {self.y}) outside [0, 1]")
        if not (0.0 < self.w <= 1.0 and 0.0 < self.h <= 1.0):
            raise PreconditionError(f"normalized extent ({self.w}, {self.h}) outside (0, 1]")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.w, self.h], dtype=np.float64)


@dataclass(frozen=True)
class PairGeometry:
    """[o_x, o_y, w_o, w_s, h_o, h_s, dx/w_s, dy/h_s, (dx/w_s)^2, (dy/h_s)^2, log(w_o/w_s), log(h_o/h_s)]"""
    v: np.ndarray


def normalize_box(bbox: BBox, image_width: float, image_height: float) -> NormBox:
    """Divide a pixel box by the image extent"""
    if image_width <= 0 or image_height <= 0:
        raise PreconditionError(f"image dimensions must be positive, got {image_width}x{image_height}")
    # clamp away last-ulp overshoot from division
    return NormBox(
        x=min(bbox.x / image_width, 1.0),
        y=min(bbox.y / image_height, 1.0),
        w=min(bbox.w / image_width, 1.0),
        h=min(bbox.h / image_height, 1.0),
    )


def pair_embeddings(subjects: np.ndarray, objects: np.ndarray) -> np.ndarray:
    """Row-wise joint embedding for (n, 4) arrays of normalized (x, y, w, h) boxes; returns (n, 12)"""
    subjects = np.atleast_2d(np.asarray(subjects, dtype=np.float64))
    objects = np.atleast_2d(np.asarray(objects, dtype=np.float64))
    xs, ys, ws, hs = subjects.T
    xo, yo, wo, ho = objects.T
    if np.any(ws <= 0) or np.any(hs <= 0):
        raise PreconditionError("subject box has zero width or height")
    if np.any(wo <= 0) or np.any(ho <= 0):
        raise PreconditionError("object box has zero width or height")

    dx = (xs + ws / 2.0) - (xo + wo / 2.0)
    dy = (ys + hs / 2.0) - (yo + ho / 2.0)
    rx = dx / ws
    ry = dy / hs
    return np.stack(
        [
            xs - xo,
            ys - yo,
            wo,
            ws,
            ho,
            hs,
            rx,
            ry,
            rx * rx,
            ry * ry,
            np.log(wo) - np.log(ws),
            np.log(ho) - np.log(hs),
        ],
        axis=1,
    )


def pair_embedding(subject: NormBox, obj: NormBox) -> PairGeometry:
    """Joint position embedding of one subject/object pair"""
    return PairGeometry(pair_embeddings(subject.as_array()[None, :], obj.as_array()[None, :])[0])
