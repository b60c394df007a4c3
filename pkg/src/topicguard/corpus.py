"""Dataset ingestion, tokenization, and sensitive-API feature vectors.

Datasets are JSON Lines files, one app per line, with fields ``app_id``
(required, unique), ``description`` (required, may be empty), ``api_calls``
(required, list of canonical sensitive-API names), and ``label`` (optional,
``"benign"`` or ``"malicious"``).  Descriptions feed the topic stage; API
call sets feed the per-topic outlier detectors.
"""

from __future__ import annotations

import hashlib
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources

import numpy as np

from .errors import DataError

# alphanumeric runs (underscore is a boundary); pure-digit tokens are
# dropped after matching so "mp3" survives but "2024" does not
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

MIN_TOKEN_LENGTH = 3

BENIGN = "benign"
MALICIOUS = "malicious"
_VALID_LABELS = (BENIGN, MALICIOUS)


class SplitRole(str, Enum):
    TRAIN = "train"
    VALIDATION = "validation"
    TEST = "test"


@dataclass(frozen=True)
class AppRecord:
    """One app: identifier, store description, declared sensitive APIs."""

    app_id: str
    description: str
    api_calls: frozenset[str]
    label: str | None = None


@dataclass
class DatasetSplit:
    """An ordered list of records plus non-fatal ingestion warnings."""

    role: SplitRole
    records: list[AppRecord]
    warnings: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def labelled(self) -> list[AppRecord]:
        return [r for r in self.records if r.label is not None]


@dataclass(frozen=True)
class TokenizedDoc:
    app_id: str
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class ApiVocabulary:
    """Sorted API-name universe fixed at training time."""

    entries: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def index_of(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.entries)}


@dataclass
class ApiFeatureVector:
    """Binary presence vector over a training-time API vocabulary."""

    app_id: str
    bits: np.ndarray
    unseen: int = 0


def _parse_record(obj: object, path: str, line_no: int,
                  warnings: list[str]) -> AppRecord:
    if not isinstance(obj, dict):
        raise DataError(f"{path}:{line_no}: record is not a JSON object")
    for key in ("app_id", "description", "api_calls"):
        if key not in obj:
            raise DataError(f"{path}:{line_no}: missing required field {key!r}")
    app_id = obj["app_id"]
    if not isinstance(app_id, str) or not app_id:
        raise DataError(f"{path}:{line_no}: app_id must be a non-empty string")
    description = obj["description"]
    if not isinstance(description, str):
        raise DataError(f"{path}:{line_no}: description must be a string "
                        f"(app_id {app_id!r})")
    calls = obj["api_calls"]
    if not isinstance(calls, list) or any(not isinstance(c, str) for c in calls):
        raise DataError(f"{path}:{line_no}: api_calls must be a list of "
                        f"strings (app_id {app_id!r})")
    label = obj.get("label")
    if label is not None and label not in _VALID_LABELS:
        raise DataError(f"{path}:{line_no}: label must be one of "
                        f"{_VALID_LABELS} (app_id {app_id!r}, got {label!r})")
    if not description.strip():
        warnings.append(f"{path}:{line_no}: app_id {app_id!r} has an empty "
                        f"description")
    return AppRecord(app_id=app_id, description=description,
                     api_calls=frozenset(calls), label=label)


def load_dataset(path: str, role: SplitRole) -> DatasetSplit:
    """Read a JSONL dataset, validating every line.

    Raises DataError on unreadable files, invalid JSON, missing required
    fields, bad label values, or duplicate app ids.  Empty descriptions and
    an empty file are warnings, not errors.
    """
    role = SplitRole(role)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from exc

    warnings: list[str] = []
    records: list[AppRecord] = []
    seen: set[str] = set()
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
        rec = _parse_record(obj, path, line_no, warnings)
        if rec.app_id in seen:
            raise DataError(f"{path}:{line_no}: duplicate app_id "
                            f"{rec.app_id!r}")
        seen.add(rec.app_id)
        records.append(rec)
    if not records:
        warnings.append(f"{path}: dataset is empty")
    return DatasetSplit(role=role, records=records, warnings=warnings)


def write_dataset(split: DatasetSplit, path: str) -> None:
    """Write records back out as JSONL with sorted keys (deterministic)."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in split.records:
            obj = {
                "app_id": rec.app_id,
                "description": rec.description,
                "api_calls": sorted(rec.api_calls),
            }
            if rec.label is not None:
                obj["label"] = rec.label
            fh.write(json.dumps(obj, sort_keys=True) + "\n")


def load_stopwords(path: str | None = None) -> frozenset[str]:
    """Load the stopword list; defaults to the packaged English list."""
    if path is None:
        text = (resources.files("topicguard.data") / "stopwords_en.txt"
                ).read_text(encoding="utf-8")
    else:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise DataError(f"cannot read stopword file {path}: {exc}") from exc
    return frozenset(w for w in text.split() if w)


def tokenize(text: str, stopwords: frozenset[str]) -> tuple[str, ...]:
    """Lowercase, split on non-alphanumeric runs, drop noise tokens.

    Noise means: shorter than three characters, a stopword, or all digits.
    """
    out = []
    for raw in _TOKEN_RE.findall(text.lower()):
        if len(raw) < MIN_TOKEN_LENGTH:
            continue
        if raw in stopwords:
            continue
        if raw.isdigit():
            continue
        out.append(raw)
    return tuple(out)


def tokenize_split(split: DatasetSplit,
                   stopwords: frozenset[str]) -> list[TokenizedDoc]:
    return [TokenizedDoc(app_id=r.app_id, tokens=tokenize(r.description,
                                                          stopwords))
            for r in split.records]


def build_api_vocabulary(train: DatasetSplit) -> ApiVocabulary:
    """Sorted union of training API calls; empty union is a data error."""
    if train.role is not SplitRole.TRAIN:
        raise ValueError("API vocabulary must be built from the train split")
    union: set[str] = set()
    for rec in train.records:
        union |= rec.api_calls
    if not union:
        raise DataError("training data declares no API calls at all; "
                        "cannot build a feature space")
    return ApiVocabulary(entries=tuple(sorted(union)))


def vectorize_api_calls(record: AppRecord,
                        vocab: ApiVocabulary,
                        index: dict[str, int] | None = None
                        ) -> ApiFeatureVector:
    """Binary vector over the vocabulary; unknown APIs are counted, not kept."""
    if index is None:
        index = vocab.index_of()
    bits = np.zeros(len(vocab.entries), dtype=np.uint8)
    unseen = 0
    for name in record.api_calls:
        pos = index.get(name)
        if pos is None:
            unseen += 1
        else:
            bits[pos] = 1
    return ApiFeatureVector(app_id=record.app_id, bits=bits, unseen=unseen)


def api_matrix(records: list[AppRecord],
               vocab: ApiVocabulary) -> tuple[np.ndarray, int]:
    """Stack binary API vectors into an (n, V) float64 matrix.

    Returns the matrix and the total count of API names that were absent
    from the training vocabulary.
    """
    index = vocab.index_of()
    mat = np.zeros((len(records), len(vocab.entries)), dtype=np.float64)
    unseen_total = 0
    for i, rec in enumerate(records):
        vec = vectorize_api_calls(rec, vocab, index)
        mat[i] = vec.bits
        unseen_total += vec.unseen
    return mat, unseen_total


def token_counts(docs: list[TokenizedDoc]) -> Counter:
    counts: Counter = Counter()
    for doc in docs:
        counts.update(doc.tokens)
    return counts


def dataset_fingerprint(split: DatasetSplit) -> str:
    """Order-sensitive sha256 over the canonical JSON of every record."""
    h = hashlib.sha256()
    for rec in split.records:
        obj = {
            "app_id": rec.app_id,
            "description": rec.description,
            "api_calls": sorted(rec.api_calls),
            "label": rec.label,
        }
        h.update(json.dumps(obj, sort_keys=True).encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()
