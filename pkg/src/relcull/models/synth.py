"""
Synthetic dataset specification used as a testing oracle
"""

from enum import Enum
from typing import List, Optional

from pydantic import Field, model_validator

from .base import ConfigModel


class RuleKind(str, Enum):
    """How a synthetic predicate is emitted"""
    GEOMETRIC = "geometric"
    COIN = "coin"


class GeometricRelation(str, Enum):
    """Geometric condition between subject and object boxes"""
    ABOVE = "above"
    LEFT_OF = "left_of"
    CONTAINS = "contains"


class PredicateRule(ConfigModel):
    """One synthetic predicate and the rule emitting it"""
    name: str
    kind: RuleKind
    relation: Optional[GeometricRelation] = None
    n_outcomes: int = Field(default=2, ge=2)

    @model_validator(mode="after")
    def _relation_for_geometric(self) -> "PredicateRule":
        if self.kind == RuleKind.GEOMETRIC and self.relation is None:
            raise ValueError(f"geometric rule '{self.name}' needs a relation")
        return self


class SynthSpec(ConfigModel):
    """Generator settings for an oracle dataset"""
    n_images: int = Field(default=200, ge=0)
    instances_per_image: int = Field(default=6, ge=2)
    pairs_per_image: int = Field(default=12, ge=1, description="Ordered pairs drawn per image")
    rules: List[PredicateRule] = Field(min_length=1)
    n_classes: int = Field(default=10, ge=1, description="Object class vocabulary size")
    geometric_share: float = Field(default=0.6, ge=0.0, le=1.0, description="Probability a pair goes to the geometric family")
    image_size: float = Field(default=100.0, gt=0.0)
    seed: int = 0

    @classmethod
    def default(cls, n_images: int = 200, seed: int = 0) -> "SynthSpec":
        """Two geometric rules plus a two-sided coin"""
        return cls(
            n_images=n_images,
            seed=seed,
            rules=[
                PredicateRule(name="above", kind=RuleKind.GEOMETRIC, relation=GeometricRelation.ABOVE),
                PredicateRule(name="left_of", kind=RuleKind.GEOMETRIC, relation=GeometricRelation.LEFT_OF),
                PredicateRule(name="heads", kind=RuleKind.COIN, n_outcomes=2),
                PredicateRule(name="tails", kind=RuleKind.COIN, n_outcomes=2),
            ],
        )
