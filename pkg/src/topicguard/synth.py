"""Planted-theme synthetic corpus for end-to-end checks.

Benign apps draw their description from one theme's private vocabulary and
their sensitive-API set from the same theme's private API profile.
Malicious apps break that link: the description comes from one theme, the
API set from a different one, which is exactly the mismatch the detector
is meant to catch.  Theme vocabularies and API profiles are pairwise
disjoint, so the ground-truth structure is unambiguous.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import AppRecord, BENIGN, DatasetSplit, MALICIOUS, SplitRole

_THEME_STEMS = ("fitness", "recipe", "travel", "banking", "weather",
                "music", "photo", "quiz", "parking", "karaoke",
                "stargazing", "gardening")

_SYLLABLES = tuple(c + v for c in "bcdfglmnprstvz" for v in "aeiou")


@dataclass
class SynthSpec:
    n_themes: int = 8
    benign_per_theme: int = 100
    n_malicious: int = 80
    vocab_per_theme: int = 50
    apis_per_theme: int = 12
    desc_len_range: tuple[int, int] = (25, 40)
    api_keep_prob: float = 0.8
    seed: int = 1234


def theme_vocabulary(theme: int, size: int) -> list[str]:
    """Distinct lowercase words, disjoint across themes by stem prefix."""
    stem = _THEME_STEMS[theme % len(_THEME_STEMS)]
    words = []
    i = 0
    while len(words) < size:
        a = _SYLLABLES[i % len(_SYLLABLES)]
        b = _SYLLABLES[(i // len(_SYLLABLES)) % len(_SYLLABLES)]
        words.append(f"{stem}{a}{b}")
        i += 1
    return words


def theme_apis(theme: int, size: int) -> list[str]:
    stem = _THEME_STEMS[theme % len(_THEME_STEMS)]
    return [f"android.{stem}.Api{j}" for j in range(size)]


def _description(rng: np.random.Generator, vocab: list[str],
                 length_range: tuple[int, int]) -> str:
    length = int(rng.integers(length_range[0], length_range[1] + 1))
    return " ".join(rng.choice(vocab, size=length, replace=True))


def _api_subset(rng: np.random.Generator, apis: list[str],
                keep_prob: float) -> list[str]:
    mask = rng.random(len(apis)) < keep_prob
    if not mask.any():
        mask[int(rng.integers(0, len(apis)))] = True
    return [a for a, keep in zip(apis, mask) if keep]


def generate_corpus(spec: SynthSpec
                    ) -> tuple[DatasetSplit, DatasetSplit, dict[str, int]]:
    """Build (train, test, theme_of_app).

    The train split holds the benign apps.  The test split holds the same
    benign apps (labelled) followed by the malicious apps, so evaluation
    sees both classes.  ``theme_of_app`` maps every app id to the theme of
    its description.
    """
    if spec.n_themes < 2:
        raise ValueError("need at least 2 themes to plant mismatches")
    if spec.n_themes > len(_THEME_STEMS):
        raise ValueError(f"at most {len(_THEME_STEMS)} themes supported")
    rng = np.random.default_rng(spec.seed)
    vocabs = [theme_vocabulary(t, spec.vocab_per_theme)
              for t in range(spec.n_themes)]
    apis = [theme_apis(t, spec.apis_per_theme)
            for t in range(spec.n_themes)]

    theme_of: dict[str, int] = {}
    benign: list[AppRecord] = []
    for t in range(spec.n_themes):
        for i in range(spec.benign_per_theme):
            app_id = f"benign-{t}-{i:03d}"
            benign.append(AppRecord(
                app_id=app_id,
                description=_description(rng, vocabs[t],
                                         spec.desc_len_range),
                api_calls=frozenset(_api_subset(rng, apis[t],
                                                spec.api_keep_prob)),
                label=BENIGN))
            theme_of[app_id] = t

    malicious: list[AppRecord] = []
    for i in range(spec.n_malicious):
        desc_theme = int(rng.integers(0, spec.n_themes))
        api_theme = int(rng.integers(0, spec.n_themes - 1))
        if api_theme >= desc_theme:
            api_theme += 1
        app_id = f"mal-{desc_theme}-{api_theme}-{i:03d}"
        malicious.append(AppRecord(
            app_id=app_id,
            description=_description(rng, vocabs[desc_theme],
                                     spec.desc_len_range),
            api_calls=frozenset(_api_subset(rng, apis[api_theme],
                                            spec.api_keep_prob)),
            label=MALICIOUS))
        theme_of[app_id] = desc_theme

    train = DatasetSplit(role=SplitRole.TRAIN, records=list(benign))
    test = DatasetSplit(role=SplitRole.TEST,
                        records=list(benign) + malicious)
    return train, test, theme_of
