"""
Pre-trained word vector loading and phrase embeddings
"""

import gzip
import io
import logging
from pathlib import Path
from typing import Dict, Iterable, NamedTuple, Optional

import numpy as np

from src.relcull.exceptions import EmbeddingFormatError, PreconditionError
from src.relcull.models.scene_graph import normalize_label

logger = logging.getLogger(__name__)

DEFAULT_DIM = 300


class PhraseVector(NamedTuple):
    """Mean-pooled phrase embedding; oov is True when no token was known"""
    vector: np.ndarray
    oov: bool


class EmbeddingTable:
    """Immutable token -> vector table"""

    def __init__(self, vectors: Dict[str, np.ndarray], dim: Optional[int]):
        self.dim = dim
        self._vectors = {token: np.asarray(vec, dtype=np.float64) for token, vec in vectors.items()}
        for vec in self._vectors.values():
            vec.setflags(write=False)
            if vec.shape != (dim,):
                raise EmbeddingFormatError(f"vector of length {vec.shape[0]} in a table of dim {dim}")

    def __len__(self) -> int:
        return len(self._vectors)

    def __contains__(self, token: str) -> bool:
        return token in self._vectors

    def get(self, token: str) -> Optional[np.ndarray]:
        return self._vectors.get(token)

    def tokens(self) -> Iterable[str]:
        return self._vectors.keys()

    def save(self, path: Path) -> None:
        """Write the plain-text format (token followed by floats), gzip when the name ends in .gz"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        opener = gzip.open if path.suffix == ".gz" else open
        with opener(path, "wt", encoding="utf-8") as f:
            for token in sorted(self._vectors):
                values = " ".join(repr(float(v)) for v in self._vectors[token])
                f.write(f"{token} {values}\n")


def load_embeddings(path: Path, expected_dim: Optional[int] = None) -> EmbeddingTable:
    """Load a GloVe-style text file; dim is inferred from the first line when not given"""
    path = Path(path)
    raw = path.read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    vectors: Dict[str, np.ndarray] = {}
    dim = expected_dim

    for line_no, line in enumerate(io.StringIO(raw.decode("utf-8")), start=1):
        parts = line.rstrip("\n").split(" ")
        parts = [p for p in parts if p != ""]
        if not parts:
            continue
        token, values = parts[0], parts[1:]
        if dim is None:
            dim = len(values)
        if len(values) != dim:
            raise EmbeddingFormatError(f"expected {dim} floats for '{token}', found {len(values)}", line=line_no)
        if token in vectors:
            raise EmbeddingFormatError(f"duplicate token '{token}'", line=line_no)
        try:
            vectors[token] = np.asarray(values, dtype=np.float64)
        except ValueError as e:
            raise EmbeddingFormatError(f"non-numeric value for '{token}': {e}", line=line_no) from e

    if not vectors:
        logger.warning(f"Embedding file {path} is empty")
        return EmbeddingTable({}, expected_dim)
    logger.info(f"Loaded {len(vectors)} vectors of dim {dim} from {path}")
    return EmbeddingTable(vectors, dim)


def phrase_vector(table: EmbeddingTable, phrase: str) -> PhraseVector:
    """Mean of the in-vocabulary token vectors; zero vector with oov=True when none is known"""
    tokens = normalize_label(phrase).split(" ") if phrase else []
    tokens = [t for t in tokens if t]
    if not tokens:
        raise PreconditionError("phrase is empty")
    known = [table.get(t) for t in tokens if t in table]
    if not known:
        logger.debug(f"Phrase '{phrase}' is out of vocabulary")
        return PhraseVector(np.zeros(table.dim or 0), True)
    return PhraseVector(np.mean(np.stack(known), axis=0), False)


def random_embeddings(tokens: Iterable[str], dim: int, seed: int) -> EmbeddingTable:
    """Seeded Gaussian vectors for the given tokens (tokens processed in sorted order)"""
    rng = np.random.default_rng(seed)
    unique = sorted({t for token in tokens for t in normalize_label(token).split(" ") if t})
    return EmbeddingTable({token: rng.standard_normal(dim) for token in unique}, dim)
