"""Encode descriptions with a sentence encoder and write EMB1.

The default encoder is pinned in ``encoder.lock`` at the repository root
of this package.  Any model id the sentence-transformers loader accepts
works, including a local directory, which is what the offline tests use.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass

import numpy as np

from .dataset import read_apps
from .emb1 import write_emb1
from .errors import UsageError

DEFAULT_MODEL = "sentence-transformers/all-MiniLM-L6-v2"

_ZERO_NORM = 1e-12


@dataclass
class ExportJob:
    input_path: str
    output_path: str
    model_id: str = DEFAULT_MODEL
    batch_size: int = 32
    normalize: bool = True


@dataclass(frozen=True)
class ExportResult:
    count: int
    dim: int


def load_encoder(model_id: str):
    """Load a sentence-transformers model by hub id or local path."""
    looks_local = os.path.sep in model_id or model_id.startswith(".")
    if looks_local and not os.path.exists(model_id):
        raise UsageError(f"encoder path {model_id!r} does not exist")
    try:
        from sentence_transformers import SentenceTransformer
        return SentenceTransformer(model_id)
    except UsageError:
        raise
    except Exception as exc:
        raise UsageError(f"cannot load encoder {model_id!r}: "
                         f"{exc}") from exc


def _token_count(model, text: str) -> int | None:
    tokenizer = getattr(model, "tokenizer", None)
    if tokenizer is None or not hasattr(tokenizer, "tokenize"):
        return None
    try:
        return len(tokenizer.tokenize(text))
    except Exception:
        return None


def _sequence_limit(model) -> int | None:
    try:
        limit = model.max_seq_length
    except AttributeError:
        return None
    return int(limit) if limit else None


def export(job: ExportJob) -> ExportResult:
    """Encode every app description and write the container.

    One vector per input app, in file order.  Descriptions over the
    encoder's sequence limit are truncated by the encoder; a warning names
    each affected app.  With ``normalize`` (the default) vectors are
    L2-normalized; an all-zero vector (nothing the encoder recognizes) is
    left as-is with a warning.
    """
    if job.batch_size < 1:
        raise UsageError(f"batch size must be >= 1, got {job.batch_size}")
    apps = read_apps(job.input_path)
    model = load_encoder(job.model_id)
    # renamed in sentence-transformers 5.x; keep the old name as fallback
    get_dim = getattr(model, "get_embedding_dimension",
                      model.get_sentence_embedding_dimension)
    dim = int(get_dim())

    limit = _sequence_limit(model)
    if limit is not None:
        for app in apps:
            n_tokens = _token_count(model, app.description)
            if n_tokens is not None and n_tokens > limit:
                warnings.warn(f"app {app.app_id!r}: description has "
                              f"{n_tokens} tokens, over the encoder limit "
                              f"of {limit}; it will be truncated")

    if apps:
        vectors = model.encode([a.description for a in apps],
                               batch_size=job.batch_size,
                               convert_to_numpy=True,
                               show_progress_bar=False)
        vectors = np.asarray(vectors, dtype=np.float32)
    else:
        vectors = np.zeros((0, dim), dtype=np.float32)
    if vectors.shape != (len(apps), dim):
        raise UsageError(f"encoder returned shape {vectors.shape}, "
                         f"expected ({len(apps)}, {dim})")

    if job.normalize:
        norms = np.linalg.norm(vectors.astype(np.float64), axis=1)
        for i, app in enumerate(apps):
            if norms[i] < _ZERO_NORM:
                warnings.warn(f"app {app.app_id!r}: encoder produced a "
                              f"zero vector; cannot normalize")
            else:
                vectors[i] = (vectors[i] / norms[i]).astype(np.float32)

    write_emb1(job.output_path, dim,
               ((app.app_id, vectors[i]) for i, app in enumerate(apps)))
    return ExportResult(count=len(apps), dim=dim)
