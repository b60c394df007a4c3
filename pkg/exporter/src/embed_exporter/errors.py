"""Error taxonomy, mirrored onto CLI exit codes."""

from __future__ import annotations


class ExportError(Exception):
    """Base class; ``exit_code`` drives the CLI return value."""

    exit_code = 1


class UsageError(ExportError):
    """Bad flags or an encoder that cannot be loaded."""

    exit_code = 1


class DatasetError(ExportError):
    """Unreadable or malformed input dataset."""

    exit_code = 2
