"""Run configuration shared by the pipeline and the CLI.

One dataclass carries the variant choice plus every hyperparameter, with
defaults matching the reference experiment setup.  A JSON config file may
supply any subset of fields; explicit CLI flags override file values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields as dataclass_fields
from enum import Enum

from .errors import ConfigError


class Variant(str, Enum):
    BERTDETECT = "bertdetect"
    LDA_ONLY = "lda"
    CHABADA = "chabada"
    GCATA = "gcata"
    OCSVM_ONLY = "ocsvm-only"


_VARIANT_ALIASES = {
    "bertdetect": Variant.BERTDETECT,
    "bert-detect": Variant.BERTDETECT,
    "lda": Variant.LDA_ONLY,
    "lda-only": Variant.LDA_ONLY,
    "chabada": Variant.CHABADA,
    "gcata": Variant.GCATA,
    "g-cata": Variant.GCATA,
    "ocsvm-only": Variant.OCSVM_ONLY,
    "ocsvm": Variant.OCSVM_ONLY,
}


def parse_variant(name: str) -> Variant:
    try:
        return _VARIANT_ALIASES[name.strip().lower()]
    except KeyError:
        raise ConfigError(
            f"unknown variant {name!r}; choose from "
            f"{sorted(set(v.value for v in Variant))}") from None


@dataclass
class RunConfig:
    """Hyperparameters for one experiment run.

    ``n_topics`` is the LDA K (LdaOnly/Chabada), ``n_clusters`` the k-means
    k (Chabada/GCata).  ``lda_alpha`` defaults to 50/K and ``gamma`` to one
    over the API-vocabulary size when left unset.
    """

    variant: Variant = Variant.BERTDETECT
    seed: int = 0
    # reducer + density clustering (BertDetect)
    n_neighbors: int = 15
    umap_dim: int = 5
    min_dist: float = 0.1
    epochs: int = 200
    min_cluster_size: int = 10
    min_samples: int = 10
    # LDA / k-means (baselines)
    n_topics: int = 50
    n_clusters: int = 50
    lda_alpha: float | None = None
    lda_beta: float = 0.01
    lda_iterations: int = 1000
    fold_in_iterations: int = 100
    # detectors
    nu: float = 0.15
    gamma: float | None = None
    kernel: str = "rbf"
    min_topic_train: int = 5
    # coherence + report
    npmi_window: int = 10
    cv_window: int = 110
    top_n: int = 10
    coherence_eps: float = 1e-12
    threads: int = 0

    def validate(self) -> None:
        if self.seed < 0:
            raise ConfigError("seed must be >= 0")
        if not 0.0 < self.nu <= 1.0:
            raise ConfigError(f"nu must be in (0, 1], got {self.nu}")
        if self.kernel not in ("rbf", "linear"):
            raise ConfigError(f"kernel must be rbf or linear, "
                              f"got {self.kernel!r}")
        if self.gamma is not None and self.gamma <= 0.0:
            raise ConfigError("gamma must be positive when set")
        for name in ("n_neighbors", "umap_dim", "epochs", "min_samples",
                     "n_topics", "n_clusters", "lda_iterations",
                     "fold_in_iterations", "top_n", "min_topic_train"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.min_cluster_size < 2:
            raise ConfigError("min_cluster_size must be >= 2")
        if self.min_dist < 0.0:
            raise ConfigError("min_dist must be >= 0")
        if self.lda_alpha is not None and self.lda_alpha <= 0.0:
            raise ConfigError("lda_alpha must be positive when set")
        if self.lda_beta <= 0.0:
            raise ConfigError("lda_beta must be positive")
        if self.npmi_window < 2 or self.cv_window < 2:
            raise ConfigError("coherence windows must be >= 2")
        if self.coherence_eps <= 0.0:
            raise ConfigError("coherence_eps must be positive")
        if self.threads < 0:
            raise ConfigError("threads must be >= 0 (0 = machine default)")

    def effective_lda_alpha(self) -> float:
        return self.lda_alpha if self.lda_alpha is not None \
            else 50.0 / self.n_topics

    def to_dict(self) -> dict:
        out = {}
        for f in dataclass_fields(self):
            value = getattr(self, f.name)
            out[f.name] = value.value if isinstance(value, Variant) else value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclass_fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        kwargs = dict(data)
        if "variant" in kwargs:
            kwargs["variant"] = parse_variant(str(kwargs["variant"]))
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg


def load_config_file(path: str) -> dict:
    """Read a JSON object of RunConfig fields (values only, not validated)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: "
                          f"{exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must contain a JSON object")
    return data
