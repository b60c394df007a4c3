"""JSON Lines app reader.

The input is the detector toolkit's dataset format: one JSON object per
line with at least ``app_id`` and ``description``.  Other fields
(``api_calls``, ``label``) are ignored here; only the text is encoded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import DatasetError


@dataclass(frozen=True)
class AppText:
    app_id: str
    description: str


def read_apps(path: str) -> list[AppText]:
    """Parse the dataset, keeping file order.

    Raises DatasetError on unreadable files, invalid JSON, missing or
    non-string fields, empty ids, or duplicate ids.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise DatasetError(f"cannot read dataset {path}: {exc}") from exc

    apps: list[AppText] = []
    seen: set[str] = set()
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{path}:{line_no}: invalid JSON: "
                               f"{exc.msg}") from exc
        if not isinstance(obj, dict):
            raise DatasetError(f"{path}:{line_no}: expected a JSON object")
        for key in ("app_id", "description"):
            if key not in obj:
                raise DatasetError(f"{path}:{line_no}: missing required "
                                   f"field {key!r}")
        app_id = obj["app_id"]
        if not isinstance(app_id, str) or not app_id:
            raise DatasetError(f"{path}:{line_no}: app_id must be a "
                               f"non-empty string")
        if app_id in seen:
            raise DatasetError(f"{path}:{line_no}: duplicate app_id "
                               f"{app_id!r}")
        description = obj["description"]
        if not isinstance(description, str):
            raise DatasetError(f"{path}:{line_no}: description must be a "
                               f"string (app_id {app_id!r})")
        seen.add(app_id)
        apps.append(AppText(app_id=app_id, description=description))
    return apps
