"""
Per-invocation state shared by subcommands, and the run manifest
"""

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from src.relcull import __version__
from src.relcull.config import Settings
from src.relcull.exceptions import UsageError

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def sha256_of(path: Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class RunContext:
    """Resolved settings plus what the command read and wrote"""
    command: str
    argv: List[str]
    settings: Settings
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: List[str] = field(default_factory=list)

    @property
    def out_dir(self) -> Path:
        return Path(self.settings.out_dir)

    def input(self, path: Optional[str], flag: str) -> Path:
        """Resolve a required input file and record its hash"""
        if not path:
            raise UsageError(f"{self.command}: {flag} is required")
        resolved = Path(path)
        if not resolved.is_file():
            raise UsageError(f"{self.command}: {flag} {path} does not exist")
        self.inputs[str(resolved)] = sha256_of(resolved)
        return resolved

    def output(self, name: str) -> Path:
        path = self.out_dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        self.outputs.append(name)
        return path

    def write_manifest(self) -> Path:
        """Command, argv, settings, seeds and input hashes; no timestamps"""
        manifest = {
            "command": self.command,
            "argv": self.argv,
            "version": __version__,
            "seed": self.settings.seed,
            "settings": self.settings.model_dump(mode="json"),
            "inputs": dict(sorted(self.inputs.items())),
            "outputs": sorted(set(self.outputs)),
        }
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / MANIFEST_NAME
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        logger.info(f"Manifest written to {path}")
        return path
