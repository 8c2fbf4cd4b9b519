"""Synthetic query-log generation for desk-scale experiments and tests.

Queries are built from a Zipf-weighted inventory of pseudo-words composed
from syllables, so they carry the repeated-substring structure subword
tokenizers exploit, without shipping a real log.
"""

from __future__ import annotations

import numpy as np

_ONSETS = ["b", "c", "d", "f", "g", "h", "j", "k", "l", "m",
           "n", "p", "r", "s", "t", "v", "w", "st", "tr", "ch"]
_VOWELS = ["a", "e", "i", "o", "u", "ai", "ou", "ea"]
_CODAS = ["", "n", "r", "s", "t", "l", "nd", "st", "ck"]


def make_words(n_words: int, rng: np.random.Generator) -> list[str]:
    words: list[str] = []
    seen = set()
    while len(words) < n_words:
        n_syll = int(rng.integers(2, 4))
        parts = []
        for _ in range(n_syll):
            parts.append(_ONSETS[rng.integers(len(_ONSETS))])
            parts.append(_VOWELS[rng.integers(len(_VOWELS))])
            if rng.random() < 0.4:
                parts.append(_CODAS[rng.integers(len(_CODAS))])
        w = "".join(parts)
        if w not in seen:
            seen.add(w)
            words.append(w)
    return words


def generate_queries(n_queries: int, seed: int = 0, n_words: int = 400,
                     min_words: int = 2, max_words: int = 4,
                     zipf_a: float = 1.3) -> list[str]:
    """Sample n_queries word combinations with Zipf-distributed word choice.

    Queries repeat naturally (popular word combinations recur), which gives
    the most-popular-completion baseline something to rank.
    """
    rng = np.random.default_rng(seed)
    words = make_words(n_words, rng)
    ranks = np.arange(1, n_words + 1, dtype=np.float64)
    probs = ranks ** (-zipf_a)
    probs /= probs.sum()
    queries = []
    while len(queries) < n_queries:
        k = int(rng.integers(min_words, max_words + 1))
        picks = rng.choice(n_words, size=k, p=probs)
        q = " ".join(words[i] for i in picks)
        if len(q) >= 3:
            queries.append(q)
    return queries


def write_query_log(path, queries) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for q in queries:
            f.write(q + "\n")
