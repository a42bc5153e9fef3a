"""
Configuration settings for relcull
"""

from pathlib import Path
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.relcull.models.configs import CurateConfig, HeadsConfig, Linkage, LossWeights, VDNetConfig


class Settings(BaseSettings):
    """Application settings"""

    model_config = SettingsConfigDict(
        env_prefix="RELCULL_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # App settings
    app_name: str = "relcull"
    app_version: str = "0.1.0"
    log_level: str = Field(default="INFO", description="Root log level")
    threads: int = Field(default=1, ge=1, description="Cap on internal parallelism")
    seed: int = Field(default=0, description="Global seed for splits, init and shuffling")
    out_dir: Path = Field(default=Path("./out"), description="Directory for outputs and manifests")

    # Label space settings
    n_objects: int = Field(default=1600, ge=1)
    n_predicates: int = Field(default=500, ge=1)
    cluster_linkage: Linkage = Field(default=Linkage.AVERAGE)
    cluster_threshold: float = Field(default=0.35, ge=0.0, le=2.0)

    # Curation settings
    alpha: float = Field(default=0.5, ge=0.0, le=1.0)
    train_fraction: float = Field(default=0.7, ge=0.0, le=1.0)
    support_floor: int = Field(default=20, ge=0)

    # VD-Net settings
    embed_dim: int = Field(default=300, ge=1)
    word_proj_dim: int = Field(default=64, ge=1)
    hidden_dim: int = Field(default=128, ge=1)
    learning_rate: float = Field(default=1e-3, gt=0.0)
    epochs: int = Field(default=20, ge=0)
    batch_size: int = Field(default=256, ge=2)
    bn_momentum: float = Field(default=0.9, gt=0.0, lt=1.0)
    bn_epsilon: float = Field(default=1e-5, gt=0.0)
    standardize_geometry: bool = Field(default=True)

    # Relationship head settings
    heads_hidden_attr: int = Field(default=32, ge=1)
    heads_hidden_rel: int = Field(default=32, ge=1)
    heads_learning_rate: float = Field(default=1e-2, gt=0.0)
    heads_epochs: int = Field(default=10, ge=0)

    # Evaluation settings
    recall_ks: list[int] = Field(default=[50, 100])

    def vdnet_config(self) -> VDNetConfig:
        """Build the discriminator config from the flat settings"""
        return VDNetConfig(
            word_proj_dim=self.word_proj_dim,
            hidden_dim=self.hidden_dim,
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            batch_size=self.batch_size,
            seed=self.seed,
            bn_momentum=self.bn_momentum,
            bn_epsilon=self.bn_epsilon,
            standardize_geometry=self.standardize_geometry,
        )

    def curate_config(self) -> CurateConfig:
        """Build the curation pipeline config from the flat settings"""
        return CurateConfig(
            n_objects=self.n_objects,
            n_predicates=self.n_predicates,
            linkage=self.cluster_linkage,
            distance_threshold=self.cluster_threshold,
            alpha=self.alpha,
            vdnet=self.vdnet_config(),
            train_fraction=self.train_fraction,
            split_seed=self.seed,
            support_floor=self.support_floor,
        )

    def heads_config(self, relation_loss: bool = True) -> HeadsConfig:
        """Build the relationship-head training config"""
        weights = LossWeights() if relation_loss else LossWeights(w_rel=0.0)
        return HeadsConfig(
            hidden_attr=self.heads_hidden_attr,
            hidden_rel=self.heads_hidden_rel,
            learning_rate=self.heads_learning_rate,
            epochs=self.heads_epochs,
            seed=self.seed,
            loss_weights=weights,
        )


def load_settings(config_file: Optional[Path] = None, **overrides) -> Settings:
    """Resolve settings: overrides > environment > config file > defaults"""
    if config_file is not None:
        base = Settings(_env_file=(".env", str(config_file)))
    else:
        base = Settings()
    clean = {key: value for key, value in overrides.items() if value is not None}
    if not clean:
        return base
    # Re-validate so flag values get the same checks as env values
    return Settings.model_validate({**base.model_dump(), **clean})


# Global settings instance
settings = Settings()
