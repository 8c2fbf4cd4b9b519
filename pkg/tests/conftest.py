"""Shared builders for randomized toy decoding instances."""

from __future__ import annotations

import numpy as np
import pytest

from qac.lm import NGramConfig, train_ngram
from qac.segmentation import SamplerConfig, UnigramModel


def make_toy_instance(rng: np.random.Generator):
    """A small unigram tokenizer + bigram LM + prefix, suitable for
    exhaustive enumeration (vocab <= 12 real tokens, short strings)."""
    alphabet = "abc"[: int(rng.integers(2, 4))]
    n_multi = int(rng.integers(1, 5))
    multi = set()
    while len(multi) < n_multi:
        k = int(rng.integers(2, 4))
        multi.add("".join(alphabet[rng.integers(len(alphabet))] for _ in range(k)))
    weights = {s: float(rng.uniform(0.05, 1.0)) for s in list(alphabet) + sorted(multi)}
    total = sum(weights.values())
    tokenizer = UnigramModel.from_probs({s: w / total for s, w in weights.items()})

    n_queries = int(rng.integers(5, 15))
    corpus = []
    for _ in range(n_queries):
        length = int(rng.integers(3, 8))
        corpus.append("".join(alphabet[rng.integers(len(alphabet))] for _ in range(length)))
    sampler = SamplerConfig(alpha=1.0, seed=int(rng.integers(0, 2**31)))
    lm = train_ngram(corpus, tokenizer, NGramConfig(order=2, passes=2, sampler=sampler))

    plen = int(rng.integers(1, 4))
    prefix = "".join(alphabet[rng.integers(len(alphabet))] for _ in range(plen))
    return tokenizer, lm, prefix


@pytest.fixture(scope="session")
def toy_instances():
    rng = np.random.default_rng(20240901)
    return [make_toy_instance(rng) for _ in range(200)]
