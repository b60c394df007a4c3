"""EMB1 container writer.

Layout, little-endian throughout: magic ``EMB1``, record count (u32),
dimensionality (u32), then per record a u32 id byte length, the UTF-8 id,
and ``dim`` float32 components.  This matches the format the detector
toolkit loads; the two packages share only this byte contract.
"""

from __future__ import annotations

import struct
from typing import Iterable

import numpy as np

MAGIC = b"EMB1"


def write_emb1(path: str, dim: int,
               items: Iterable[tuple[str, np.ndarray]]) -> int:
    """Write id/vector pairs in order; returns the record count."""
    records = []
    seen: set[str] = set()
    for app_id, vec in items:
        vec = np.asarray(vec, dtype="<f4")
        if vec.shape != (dim,):
            raise ValueError(f"vector for {app_id!r} has shape {vec.shape},"
                             f" expected ({dim},)")
        if not np.all(np.isfinite(vec)):
            raise ValueError(f"vector for {app_id!r} has non-finite "
                             f"components")
        if app_id in seen:
            raise ValueError(f"duplicate id {app_id!r}")
        seen.add(app_id)
        records.append((app_id.encode("utf-8"), vec))

    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", len(records), dim))
        for raw_id, vec in records:
            fh.write(struct.pack("<I", len(raw_id)))
            fh.write(raw_id)
            fh.write(vec.tobytes())
    return len(records)
