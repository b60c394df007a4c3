"""Description embeddings: binary vector file format plus a hashed fallback.

The on-disk format is a little-endian binary container: magic ``EMB1``,
record count (u32), dimensionality (u32), then per record a u32 id byte
length, the UTF-8 id, and ``dim`` float32 components.  External encoders
(e.g. transformer sentence embedders) write this format; the package also
ships a deterministic hashed bag-of-words embedder so the full pipeline
runs without any model download.
"""

from __future__ import annotations

import hashlib
import struct
from collections import Counter
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .corpus import TokenizedDoc
from .errors import DataError

MAGIC = b"EMB1"


@dataclass
class EmbeddingMatrix:
    """Id-keyed dense vectors, all the same dimensionality."""

    dim: int
    vectors: dict[str, np.ndarray]

    def __len__(self) -> int:
        return len(self.vectors)

    def matrix_for(self, app_ids: list[str]) -> np.ndarray:
        """Stack vectors for the given ids, erroring on any id not present."""
        missing = [a for a in app_ids if a not in self.vectors]
        if missing:
            raise DataError(f"embedding file lacks vectors for "
                            f"{len(missing)} app ids (first missing: "
                            f"{missing[0]!r})")
        if not app_ids:
            return np.zeros((0, self.dim), dtype=np.float64)
        return np.stack([self.vectors[a] for a in app_ids]).astype(np.float64)


def write_embeddings(path: str, dim: int,
                     items: Iterable[tuple[str, np.ndarray]]) -> None:
    """Write id/vector pairs in container order."""
    items = list(items)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", len(items), dim))
        for app_id, vec in items:
            vec = np.asarray(vec, dtype=np.float32)
            if vec.shape != (dim,):
                raise ValueError(f"vector for {app_id!r} has shape "
                                 f"{vec.shape}, expected ({dim},)")
            raw = app_id.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(vec.tobytes())


def load_embeddings(path: str) -> EmbeddingMatrix:
    """Parse an embedding container, validating structure and values.

    Raises DataError on a bad magic string, truncation, duplicate ids, or
    non-finite components.
    """
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read embeddings {path}: {exc}") from exc
    if len(blob) < 12 or blob[:4] != MAGIC:
        raise DataError(f"{path}: not an embedding container "
                        f"(bad magic, expected {MAGIC!r})")
    count, dim = struct.unpack_from("<II", blob, 4)
    off = 12
    vectors: dict[str, np.ndarray] = {}
    for i in range(count):
        if off + 4 > len(blob):
            raise DataError(f"{path}: truncated at record {i} (id length)")
        (id_len,) = struct.unpack_from("<I", blob, off)
        off += 4
        if off + id_len + 4 * dim > len(blob):
            raise DataError(f"{path}: truncated at record {i}")
        app_id = blob[off:off + id_len].decode("utf-8")
        off += id_len
        vec = np.frombuffer(blob, dtype="<f4", count=dim, offset=off).copy()
        off += 4 * dim
        if not np.all(np.isfinite(vec)):
            raise DataError(f"{path}: non-finite component in record "
                            f"{app_id!r}")
        if app_id in vectors:
            raise DataError(f"{path}: duplicate id {app_id!r}")
        vectors[app_id] = vec
    if off != len(blob):
        raise DataError(f"{path}: {len(blob) - off} trailing bytes after "
                        f"last record")
    return EmbeddingMatrix(dim=dim, vectors=vectors)


def _token_sign_vector(token: str, dim: int, seed: int) -> np.ndarray:
    """Deterministic +-1 vector for a token, independent of platform."""
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8,
                             key=seed.to_bytes(8, "little")).digest()
    rng = np.random.default_rng(int.from_bytes(digest, "little"))
    return (rng.integers(0, 2, size=dim).astype(np.float64) * 2.0) - 1.0


def fallback_embed(tokens: tuple[str, ...] | list[str], dim: int, seed: int,
                   _cache: dict[str, np.ndarray] | None = None) -> np.ndarray:
    """Hashed bag-of-words embedding: sum of token sign vectors, L2-normed.

    Empty token lists map to the zero vector.  Same tokens in any order give
    the same vector; shared tokens raise cosine similarity, which is all the
    downstream topic stage needs from a fallback.
    """
    if dim < 8:
        raise ValueError(f"embedding dim must be >= 8, got {dim}")
    vec = np.zeros(dim, dtype=np.float64)
    if not tokens:
        return vec
    for token, count in Counter(tokens).items():
        if _cache is not None:
            sign = _cache.get(token)
            if sign is None:
                sign = _token_sign_vector(token, dim, seed)
                _cache[token] = sign
        else:
            sign = _token_sign_vector(token, dim, seed)
        vec += count * sign
    norm = float(np.linalg.norm(vec))
    if norm > 0.0:
        vec /= norm
    return vec


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two vectors; 0.0 if either is zero."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"vector shapes differ: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def embed_docs(docs: list[TokenizedDoc], dim: int,
               seed: int) -> EmbeddingMatrix:
    """Embed every document with the hashed fallback embedder."""
    cache: dict[str, np.ndarray] = {}
    vectors = {doc.app_id: fallback_embed(doc.tokens, dim, seed, cache)
               for doc in docs}
    return EmbeddingMatrix(dim=dim, vectors=vectors)


def embeddings_fingerprint(matrix: EmbeddingMatrix,
                           app_ids: list[str]) -> str:
    """sha256 over float32 bytes of the listed ids, in list order."""
    h = hashlib.sha256()
    for app_id in app_ids:
        h.update(app_id.encode("utf-8"))
        h.update(b"\x00")
        h.update(np.asarray(matrix.vectors[app_id],
                            dtype="<f4").tobytes())
    return h.hexdigest()
