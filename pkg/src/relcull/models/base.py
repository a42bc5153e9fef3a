"""
Base record model configuration
"""

from typing import Any, Dict

from pydantic import BaseModel, ConfigDict


class RecordModel(BaseModel):
    """Base class for all immutable records"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    def to_dict(self) -> Dict[str, Any]:
        """Return as dictionary format"""
        return self.model_dump(mode="json")


class ConfigModel(BaseModel):
    """Base class for validated, immutable configuration blocks"""

    model_config = ConfigDict(frozen=True, extra="forbid", validate_default=True)

    def to_dict(self) -> Dict[str, Any]:
        """Return as dictionary format"""
        return self.model_dump(mode="json")
