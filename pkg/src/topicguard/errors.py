"""Error taxonomy shared across the package.

Three families, matching the CLI exit codes: configuration and usage
problems (exit 1), malformed or inconsistent input data (exit 2), and
numeric failures such as non-convergence or degenerate geometry (exit 3).
"""

from __future__ import annotations


class TopicGuardError(Exception):
    """Base class for all errors raised deliberately by this package."""

    exit_code = 1


class ConfigError(TopicGuardError):
    """Invalid configuration, flags, or hyperparameter values."""

    exit_code = 1


class DataError(TopicGuardError):
    """Malformed dataset, embedding file, or mismatched inputs."""

    exit_code = 2


class NumericError(TopicGuardError):
    """Numeric failure: divergence, degenerate input, non-convergence."""

    exit_code = 3
