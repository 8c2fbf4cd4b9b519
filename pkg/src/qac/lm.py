"""Autoregressive token language models.

The decoding and evaluation layers only require three methods of a model:
initial_state(), next_logprobs(state), and advance(state, token). The
reference backend is a count-based n-gram with interpolated absolute
discounting, which is deterministic, dependency-free, and fast enough for
desk-scale corpora. A neural backend can be slotted in behind the same
interface later.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Protocol, runtime_checkable

import numpy as np

from .corpus import DataError
from .segmentation import SamplerConfig, Segmentation, UnigramModel, Vocabulary, enumerate_all_segmentations
from .util import canonical_json, logsumexp


@dataclass(frozen=True)
class NGramConfig:
    order: int = 5
    passes: int = 1
    sampler: SamplerConfig | None = None
    discount: float = 0.75
    floor: float = 1e-10

    def __post_init__(self):
        if self.order < 2:
            raise ValueError("order must be >= 2")
        if self.passes < 1:
            raise ValueError("passes must be >= 1")
        if not 0 < self.discount < 1:
            raise ValueError("discount must be in (0, 1)")


@runtime_checkable
class TokenLanguageModel(Protocol):
    """What decoding and scoring require of a language model backend.

    Any object with these three methods (plus a `vocab` attribute) plugs
    into the beam search and the evaluation harness; the n-gram backend
    below is the reference implementation.
    """

    vocab: Vocabulary

    def initial_state(self): ...

    def next_logprobs(self, state) -> np.ndarray: ...

    def advance(self, state, token_id: int): ...


class _CtxStats:
    __slots__ = ("total", "counts")

    def __init__(self):
        self.total = 0
        self.counts: dict[int, int] = {}


class NGramModel:
    """Interpolated absolute-discounting n-gram over token ids.

    States are tuples of the last (order-1) token ids, padded with <BOS>.
    Every distribution backs off recursively to the uniform distribution
    over the vocabulary, so each token keeps nonzero probability and beam
    search never sees -inf for a reachable extension.
    """

    def __init__(self, vocab: Vocabulary, order: int,
                 tables: list[dict[tuple, _CtxStats]],
                 discount: float = 0.75, floor: float = 1e-10):
        self.vocab = vocab
        self.order = order
        self.tables = tables  # tables[m]: context of length m -> stats
        self.discount = discount
        self.floor = floor
        self._dist = lru_cache(maxsize=32768)(self._dist_uncached)

    # -- TokenLanguageModel interface ------------------------------------

    def initial_state(self) -> tuple:
        return (self.vocab.bos_id,) * (self.order - 1)

    def advance(self, state: tuple, token_id: int) -> tuple:
        self._check_token(token_id)
        return (state + (token_id,))[-(self.order - 1):]

    def next_logprobs(self, state: tuple) -> np.ndarray:
        """Full log-distribution over the vocabulary (read-only array)."""
        return self._dist(tuple(state))

    # -- internals --------------------------------------------------------

    def _check_token(self, token_id: int) -> None:
        if not 0 <= token_id < len(self.vocab):
            raise ValueError(f"token id {token_id} outside vocabulary of {len(self.vocab)}")

    def _dist_uncached(self, state: tuple) -> np.ndarray:
        v = len(self.vocab)
        probs = np.full(v, 1.0 / v)
        d = self.discount
        for m in range(0, self.order):
            ctx = state[len(state) - m:] if m else ()
            stats = self.tables[m].get(ctx)
            if stats is None or stats.total == 0:
                continue
            lam = d * len(stats.counts) / stats.total
            probs *= lam
            for tok, cnt in stats.counts.items():
                probs[tok] += (cnt - d) / stats.total
        probs = np.maximum(probs, self.floor)
        probs /= probs.sum()
        out = np.log(probs)
        out.flags.writeable = False
        return out

    def stats(self) -> dict:
        return {
            "order": self.order,
            "vocab_size": len(self.vocab),
            "contexts": [len(t) for t in self.tables],
        }


def train_ngram(corpus, segmenter, cfg: NGramConfig) -> NGramModel:
    """Count n-grams over segmentations of the corpus.

    Each pass segments every query; when cfg.sampler is set and the
    segmenter supports sampling, a fresh segmentation is drawn per pass from
    a generator seeded once with cfg.sampler.seed, so two runs with the same
    seed produce identical count tables.
    """
    corpus = list(corpus)
    if not corpus:
        raise DataError("cannot train an n-gram model on an empty corpus")
    vocab = segmenter.vocab
    stochastic = cfg.sampler is not None and isinstance(segmenter, UnigramModel)
    rng = cfg.sampler.make_rng() if stochastic else None

    tables: list[dict[tuple, _CtxStats]] = [defaultdict(_CtxStats) for _ in range(cfg.order)]
    bos = vocab.bos_id
    eos = vocab.eos_id
    for _ in range(cfg.passes):
        for q in corpus:
            if stochastic:
                seg = segmenter.sample(q, cfg.sampler, rng)
            else:
                seg = segmenter.segment(q)
            stream = (bos,) * (cfg.order - 1) + seg.ids + (eos,)
            for pos in range(cfg.order - 1, len(stream)):
                tok = stream[pos]
                for m in range(cfg.order):
                    ctx = stream[pos - m:pos]
                    stats = tables[m][ctx]
                    stats.total += 1
                    stats.counts[tok] = stats.counts.get(tok, 0) + 1
    plain = [dict(t) for t in tables]
    return NGramModel(vocab, cfg.order, plain, cfg.discount, cfg.floor)


def token_seq_logprob(lm, seg) -> float:
    """log p(t) + log p(<EOS> | t) for a token sequence, evaluated stepwise
    through the model interface."""
    ids = seg.ids if isinstance(seg, Segmentation) else tuple(seg)
    state = lm.initial_state()
    total = 0.0
    for tok in ids:
        lp = lm.next_logprobs(state)
        if not 0 <= tok < len(lp):
            raise ValueError(f"token id {tok} outside vocabulary of {len(lp)}")
        total += float(lp[tok])
        state = lm.advance(state, tok)
    total += float(lm.next_logprobs(state)[lm.vocab.eos_id])
    return total


def query_logprob_exact(lm, q: str, vocab: Vocabulary) -> float:
    """log of the total probability over all segmentations of q.

    Exponential in |q|; guarded by the enumeration limit. Returns -inf when
    q has no segmentation over the vocabulary.
    """
    segs = enumerate_all_segmentations(q, vocab)
    if not segs:
        return float("-inf")
    return logsumexp([token_seq_logprob(lm, s) for s in segs])


def query_logprob_best(lm, segmenter, q: str) -> float:
    """log-probability of the segmenter's canonical segmentation of q; a
    lower bound on the exact marginal."""
    return token_seq_logprob(lm, segmenter.segment(q))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def save_ngram(model: NGramModel, path) -> None:
    tables = []
    for t in model.tables:
        rows = []
        for ctx in sorted(t):
            stats = t[ctx]
            rows.append([list(ctx), sorted(stats.counts.items())])
        tables.append(rows)
    payload = {
        "schema": 1,
        "order": model.order,
        "discount": model.discount,
        "floor": model.floor,
        "vocab_sha256": model.vocab.sha256(),
        "tables": tables,
    }
    Path(path).write_text(canonical_json(payload) + "\n", encoding="utf-8")


def load_ngram(path, vocab: Vocabulary) -> NGramModel:
    """Load count tables, validating the vocabulary hash recorded at save
    time against the segmentation model's vocabulary."""
    with open(path, encoding="utf-8") as f:
        payload = json.load(f)
    if payload.get("schema") != 1:
        raise DataError(f"unsupported LM schema in {path}")
    if payload["vocab_sha256"] != vocab.sha256():
        raise DataError("LM vocabulary hash does not match the tokenizer vocabulary")
    tables: list[dict[tuple, _CtxStats]] = []
    for rows in payload["tables"]:
        table: dict[tuple, _CtxStats] = {}
        for ctx, counts in rows:
            stats = _CtxStats()
            stats.counts = {int(t): int(c) for t, c in counts}
            stats.total = sum(stats.counts.values())
            table[tuple(ctx)] = stats
        tables.append(table)
    return NGramModel(vocab, payload["order"], tables, payload["discount"], payload["floor"])
