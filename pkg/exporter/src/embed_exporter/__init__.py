"""Sentence-encoder export to the EMB1 embedding container."""

from .errors import DatasetError, ExportError, UsageError
from .export import DEFAULT_MODEL, ExportJob, ExportResult, export

__all__ = ["DEFAULT_MODEL", "DatasetError", "ExportError", "ExportJob",
           "ExportResult", "UsageError", "export"]
