"""
Typed configuration blocks for the discriminator, the relationship heads and
the curation pipeline
"""

from enum import Enum

from pydantic import Field

from .base import ConfigModel


class Linkage(str, Enum):
    """Agglomerative linkage rule"""
    SINGLE = "single"
    COMPLETE = "complete"
    AVERAGE = "average"


class VDNetConfig(ConfigModel):
    """Visual discriminator hyperparameters"""
    word_proj_dim: int = Field(default=64, ge=1, description="Width of the subject/object word projections")
    hidden_dim: int = Field(default=128, ge=1, description="Width of the hidden layer")
    learning_rate: float = Field(default=1e-3, gt=0.0, description="SGD learning rate")
    momentum: float = Field(default=0.9, ge=0.0, lt=1.0, description="SGD momentum")
    epochs: int = Field(default=20, ge=0, description="Training epochs")
    batch_size: int = Field(default=256, ge=2, description="Mini-batch size")
    seed: int = Field(default=0, description="Seed for init and shuffling")
    bn_momentum: float = Field(default=0.9, gt=0.0, lt=1.0, description="Running-statistics momentum")
    bn_epsilon: float = Field(default=1e-5, gt=0.0, description="Batchnorm variance epsilon")
    standardize_geometry: bool = Field(default=True, description="Fit a mean/std scaling of the geometry inputs before training")


class LossWeights(ConfigModel):
    """Weights of the four supervision terms of the relationship heads"""
    w_loc: float = Field(default=1.0, description="Box regression weight")
    w_cls: float = Field(default=1.0, description="Object classification weight")
    w_attr: float = Field(default=1.0, description="Attribute multi-label weight")
    w_rel: float = Field(default=1.0, description="Relation classification weight")


class HeadsConfig(ConfigModel):
    """Relationship-aware head training settings"""
    hidden_attr: int = Field(default=32, ge=1, description="Attribute head hidden width")
    hidden_rel: int = Field(default=32, ge=1, description="Relation embedding width")
    learning_rate: float = Field(default=1e-2, gt=0.0)
    momentum: float = Field(default=0.9, ge=0.0, lt=1.0)
    epochs: int = Field(default=10, ge=0)
    seed: int = Field(default=0)
    loss_weights: LossWeights = Field(default_factory=LossWeights)


class CurateConfig(ConfigModel):
    """Settings for the full curation pipeline"""
    n_objects: int = Field(default=1600, ge=1, description="Object labels kept by frequency")
    n_predicates: int = Field(default=500, ge=1, description="Predicate labels kept by frequency")
    linkage: Linkage = Field(default=Linkage.AVERAGE)
    distance_threshold: float = Field(default=0.35, ge=0.0, le=2.0)
    alpha: float = Field(default=0.5, ge=0.0, le=1.0, description="Accuracy above which a predicate is dropped")
    vdnet: VDNetConfig = Field(default_factory=VDNetConfig)
    train_fraction: float = Field(default=0.7, ge=0.0, le=1.0)
    split_seed: int = Field(default=0)
    support_floor: int = Field(default=20, ge=0, description="Held-out support below which a predicate is kept unjudged")
