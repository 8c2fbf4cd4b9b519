"""Tokenizers over the query alphabet: character, BPE, and unigram.

All three model types share a Vocabulary whose single-character tokens cover
the full alphabet, so any in-alphabet string has at least one segmentation.
Characters outside the alphabet are emitted as standalone <UNK> tokens;
multi-character tokens never span an <UNK> substitution.

The unigram model carries per-token probabilities and supports Viterbi
(one-best), n-best, and stochastic segmentation over the full lattice of
decompositions.
"""

from __future__ import annotations

import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import BASE_ALPHABET, DataError
from .util import canonical_json, sha256_text

BOS, EOS, UNK = "<BOS>", "<EOS>", "<UNK>"
SPECIALS = (BOS, EOS, UNK)

# Exhaustive enumeration is exponential; refuse anything longer than this.
MAX_ENUM_CHARS = 20

# Log-probability charged for an <UNK> token inside lattice operations.
UNK_LOGPROB = math.log(1e-10)


class Vocabulary:
    """Ordered token inventory: specials, then single characters, then
    multi-character tokens. Surfaces are unique; ids are list positions."""

    def __init__(self, alphabet: str, multi_tokens=()):
        alphabet = "".join(sorted(set(alphabet)))
        for c in alphabet:
            if len(c) != 1:
                raise ValueError("alphabet entries must be single characters")
        self.alphabet = alphabet
        self.tokens: list[str] = list(SPECIALS) + list(alphabet) + list(multi_tokens)
        self._index: dict[str, int] = {}
        for i, surf in enumerate(self.tokens):
            if surf in self._index:
                raise ValueError(f"duplicate token surface {surf!r}")
            self._index[surf] = i
        self.bos_id = self._index[BOS]
        self.eos_id = self._index[EOS]
        self.unk_id = self._index[UNK]
        self.max_token_len = max((len(t) for t in self.tokens[3:]), default=1)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, surface: str) -> bool:
        return surface in self._index

    def id(self, surface: str) -> int:
        return self._index[surface]

    def get_id(self, surface: str):
        return self._index.get(surface)

    def surface(self, token_id: int) -> str:
        return self.tokens[token_id]

    def char_ids(self) -> list[int]:
        return [self._index[c] for c in self.alphabet]

    def multi_token_ids(self) -> list[int]:
        return list(range(3 + len(self.alphabet), len(self.tokens)))

    def sha256(self) -> str:
        return sha256_text(canonical_json(self.tokens))


@dataclass(frozen=True)
class Segmentation:
    """A token-id sequence whose surfaces concatenate to `surface`."""

    ids: tuple[int, ...]
    surface: str

    @classmethod
    def from_ids(cls, ids, vocab: Vocabulary) -> "Segmentation":
        ids = tuple(ids)
        surface = "".join(vocab.surface(i) for i in ids)
        return cls(ids, surface)

    def __len__(self) -> int:
        return len(self.ids)


@dataclass(frozen=True)
class SamplerConfig:
    """Stochastic-segmentation knobs: score exponent alpha, n-best list size
    (None = full lattice), and the RNG seed."""

    alpha: float = 0.2
    nbest_size: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not math.isfinite(self.alpha) or self.alpha < 0:
            raise ValueError("alpha must be finite and >= 0")
        if self.nbest_size is not None and self.nbest_size < 1:
            raise ValueError("nbest_size must be >= 1 or None")

    def make_rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


def char_segment(q: str, vocab: Vocabulary) -> Segmentation:
    """One token per character; out-of-alphabet characters become <UNK>."""
    ids = tuple(vocab.get_id(c) if c in vocab else vocab.unk_id for c in q)
    return Segmentation(ids, q)


# ---------------------------------------------------------------------------
# BPE
# ---------------------------------------------------------------------------


class BpeModel:
    """Deterministic greedy merge-based tokenizer."""

    kind = "bpe"

    def __init__(self, vocab: Vocabulary, merges: list[tuple[str, str]]):
        self.vocab = vocab
        self.merges = [tuple(m) for m in merges]
        self._ranks = {pair: i for i, pair in enumerate(self.merges)}

    def segment(self, q: str) -> Segmentation:
        return bpe_segment(q, self)


def train_bpe(corpus, vocab_size: int, alphabet: str | None = None) -> BpeModel:
    """Learn merges by repeatedly joining the most frequent adjacent token
    pair until the vocabulary reaches vocab_size.

    Ties are broken toward the lexicographically smallest (left, right) pair.
    Raises DataError when the corpus cannot support enough merges.
    """
    corpus = list(corpus)
    if not corpus:
        raise DataError("cannot train BPE on an empty corpus")
    if alphabet is None:
        alphabet = "".join(sorted(set(BASE_ALPHABET) | set("".join(corpus))))
    n_base = len(set(alphabet)) + len(SPECIALS)
    if vocab_size < n_base:
        raise ValueError(f"vocab_size must be at least characters+specials ({n_base})")

    known = set(alphabet)
    word_counts = Counter(q for q in corpus)
    words = []  # [symbol list, multiplicity]
    for q, cnt in sorted(word_counts.items()):
        words.append([[c for c in q if c in known], cnt])

    pair_counts: Counter = Counter()
    pair_words: dict[tuple, set[int]] = defaultdict(set)

    def add_word(idx: int, sign: int):
        symbols, cnt = words[idx]
        for pair in zip(symbols, symbols[1:]):
            pair_counts[pair] += sign * cnt
            if sign > 0:
                pair_words[pair].add(idx)

    for idx in range(len(words)):
        add_word(idx, +1)

    surfaces = set(alphabet)
    merges: list[tuple[str, str]] = []
    while len(surfaces) + len(SPECIALS) < vocab_size:
        best_pair = None
        best_count = 0
        for pair, cnt in pair_counts.items():
            if cnt > best_count or (cnt == best_count and best_pair is not None and pair < best_pair):
                best_pair, best_count = pair, cnt
        if best_pair is None or best_count < 1:
            raise DataError(
                f"vocab_size {vocab_size} unattainable: no adjacent pairs left after "
                f"{len(merges)} merges; use a smaller vocab_size"
            )
        merges.append(best_pair)
        new_surface = best_pair[0] + best_pair[1]
        surfaces.add(new_surface)
        for idx in sorted(pair_words.pop(best_pair, ())):
            add_word(idx, -1)
            symbols = words[idx][0]
            merged = _merge_pair(symbols, best_pair, new_surface)
            words[idx][0] = merged
            add_word(idx, +1)
        pair_counts = +pair_counts  # drop zero/negative entries

    multi = [m[0] + m[1] for m in merges]
    # A merge can reproduce an existing surface; keep first occurrence only.
    seen: set[str] = set(alphabet)
    multi_unique = []
    for surf in multi:
        if surf not in seen:
            seen.add(surf)
            multi_unique.append(surf)
    vocab = Vocabulary(alphabet, multi_unique)
    return BpeModel(vocab, merges)


def _merge_pair(symbols: list[str], pair: tuple[str, str], new: str) -> list[str]:
    out = []
    i = 0
    while i < len(symbols):
        if i + 1 < len(symbols) and symbols[i] == pair[0] and symbols[i + 1] == pair[1]:
            out.append(new)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return out


def bpe_segment(q: str, model: BpeModel) -> Segmentation:
    """Character split followed by the learned merges in rank order.

    Runs of in-alphabet characters are merged independently; characters
    outside the alphabet map to standalone <UNK> tokens.
    """
    vocab = model.vocab
    ids: list[int] = []
    for run, is_known in _alphabet_runs(q, vocab):
        if not is_known:
            ids.extend([vocab.unk_id] * len(run))
            continue
        symbols = list(run)
        while len(symbols) >= 2:
            pairs = set(zip(symbols, symbols[1:]))
            best = min(pairs, key=lambda p: model._ranks.get(p, math.inf))
            if best not in model._ranks:
                break
            symbols = _merge_pair(symbols, best, best[0] + best[1])
        ids.extend(vocab.id(s) for s in symbols)
    return Segmentation(tuple(ids), q)


def _alphabet_runs(q: str, vocab: Vocabulary):
    """Split q into maximal runs of in-alphabet / out-of-alphabet characters."""
    runs = []
    i = 0
    while i < len(q):
        known = q[i] in vocab
        j = i
        while j < len(q) and (q[j] in vocab) == known:
            j += 1
        runs.append((q[i:j], known))
        i = j
    return runs


# ---------------------------------------------------------------------------
# Unigram model
# ---------------------------------------------------------------------------


class UnigramModel:
    """Tokenizer scored by independent per-token probabilities.

    `logprobs[i]` holds log p(token i); specials carry -inf and never appear
    inside a lattice. The canonical segmentation is the Viterbi path.
    """

    kind = "unigram"

    def __init__(self, vocab: Vocabulary, logprobs: np.ndarray):
        if len(logprobs) != len(vocab):
            raise ValueError("logprobs must align with the vocabulary")
        self.vocab = vocab
        self.logprobs = np.asarray(logprobs, dtype=np.float64)
        self.logprobs.flags.writeable = False

    @classmethod
    def from_probs(cls, probs: dict[str, float], alphabet: str | None = None) -> "UnigramModel":
        """Build directly from {surface: probability}; handy for toy setups.

        Characters of the alphabet missing from `probs` get probability 0
        replaced by a tiny floor so every string stays segmentable.
        """
        if alphabet is None:
            alphabet = "".join(sorted({c for s in probs for c in s}))
        multi = sorted(s for s in probs if len(s) > 1)
        vocab = Vocabulary(alphabet, multi)
        lp = np.full(len(vocab), -np.inf)
        for surf, p in probs.items():
            lp[vocab.id(surf)] = math.log(p) if p > 0 else UNK_LOGPROB
        for c in alphabet:
            if lp[vocab.id(c)] == -np.inf:
                lp[vocab.id(c)] = UNK_LOGPROB
        return cls(vocab, lp)

    def segment(self, q: str) -> Segmentation:
        return viterbi_segment(q, self)

    def nbest(self, q: str, n: int):
        return nbest_segments(q, self, n)

    def sample(self, q: str, cfg: SamplerConfig, rng: np.random.Generator) -> Segmentation:
        return sample_segment(q, self, cfg, rng)


class CharModel:
    """Trivial tokenizer: one token per character."""

    kind = "char"

    def __init__(self, vocab: Vocabulary):
        self.vocab = vocab

    @classmethod
    def from_alphabet(cls, alphabet: str) -> "CharModel":
        return cls(Vocabulary(alphabet))

    def segment(self, q: str) -> Segmentation:
        return char_segment(q, self.vocab)


def _lattice(q: str, model: UnigramModel):
    """Incoming edges per end position: edges[j] = [(i, token_id, logp)].

    Out-of-alphabet characters contribute single <UNK> edges, so every
    position is reachable and tokens never span an <UNK> substitution.
    """
    vocab = model.vocab
    n = len(q)
    edges: list[list[tuple[int, int, float]]] = [[] for _ in range(n + 1)]
    maxlen = vocab.max_token_len
    for i in range(n):
        if q[i] not in vocab:
            edges[i + 1].append((i, vocab.unk_id, UNK_LOGPROB))
            continue
        for k in range(1, min(maxlen, n - i) + 1):
            surf = q[i:i + k]
            tid = vocab.get_id(surf)
            if tid is not None:
                lp = model.logprobs[tid]
                if lp > -np.inf:
                    edges[i + k].append((i, tid, float(lp)))
    return edges


_WORSE = (-math.inf, math.inf, ())


def _path_better(a, b) -> bool:
    """Order paths by (logprob desc, token count asc, ids asc)."""
    if a[0] != b[0]:
        return a[0] > b[0]
    if a[1] != b[1]:
        return a[1] < b[1]
    return a[2] < b[2]


def viterbi_segment(q: str, model: UnigramModel) -> Segmentation:
    """Most probable segmentation; ties prefer fewer tokens, then the
    lexicographically smallest token-id sequence."""
    edges = _lattice(q, model)
    n = len(q)
    best = [_WORSE] * (n + 1)
    best[0] = (0.0, 0, ())
    for j in range(1, n + 1):
        for i, tid, lp in edges[j]:
            if best[i][0] == -math.inf:
                continue
            cand = (best[i][0] + lp, best[i][1] + 1, best[i][2] + (tid,))
            if _path_better(cand, best[j]):
                best[j] = cand
    return Segmentation(best[n][2], q)


def nbest_segments(q: str, model: UnigramModel, n: int):
    """Top-n segmentations as (Segmentation, logprob), best first."""
    if n < 1:
        raise ValueError("n must be >= 1")
    edges = _lattice(q, model)
    length = len(q)
    table: list[list[tuple]] = [[] for _ in range(length + 1)]
    table[0] = [(0.0, 0, ())]
    for j in range(1, length + 1):
        cands = []
        for i, tid, lp in edges[j]:
            for score, ntok, ids in table[i]:
                cands.append((score + lp, ntok + 1, ids + (tid,)))
        cands.sort(key=lambda c: (-c[0], c[1], c[2]))
        table[j] = cands[:n]
    return [(Segmentation(ids, q), score) for score, _, ids in table[length]]


def sample_segment(q: str, model: UnigramModel, cfg: SamplerConfig,
                   rng: np.random.Generator | None = None) -> Segmentation:
    """Draw a segmentation with probability proportional to p(t)^alpha.

    With nbest_size=None the draw is exact over the full lattice (forward
    filtering, backward sampling); with a finite n the draw is over the
    n-best list. Pass a persistent `rng` to draw a reproducible stream; by
    default a fresh generator is seeded from cfg.seed.
    """
    if rng is None:
        rng = cfg.make_rng()
    if cfg.nbest_size is not None:
        cands = nbest_segments(q, model, cfg.nbest_size)
        if not cands:
            return Segmentation((), q)
        scores = np.array([cfg.alpha * lp for _, lp in cands])
        probs = np.exp(scores - scores.max())
        probs /= probs.sum()
        return cands[int(rng.choice(len(cands), p=probs))][0]

    edges = _lattice(q, model)
    n = len(q)
    fwd = np.full(n + 1, -np.inf)
    fwd[0] = 0.0
    for j in range(1, n + 1):
        vals = [fwd[i] + cfg.alpha * lp for i, _, lp in edges[j] if fwd[i] > -np.inf]
        if vals:
            m = max(vals)
            fwd[j] = m + math.log(sum(math.exp(v - m) for v in vals))
    if fwd[n] == -np.inf:
        return Segmentation((), q)
    ids_rev: list[int] = []
    j = n
    while j > 0:
        opts = [(i, tid, lp) for i, tid, lp in edges[j] if fwd[i] > -np.inf]
        weights = np.array([math.exp(fwd[i] + cfg.alpha * lp - fwd[j]) for i, _, lp in opts])
        weights /= weights.sum()
        i, tid, _ = opts[int(rng.choice(len(opts), p=weights))]
        ids_rev.append(tid)
        j = i
    return Segmentation(tuple(reversed(ids_rev)), q)


def enumerate_all_segmentations(q: str, vocab: Vocabulary) -> list[Segmentation]:
    """Every token sequence over `vocab` concatenating exactly to q.

    Purely definitional: no <UNK> substitution, so a string containing
    out-of-vocabulary characters has no segmentations. Guarded to short
    strings because the count grows exponentially.
    """
    if len(q) > MAX_ENUM_CHARS:
        raise ValueError(f"refusing to enumerate segmentations of {len(q)} chars (max {MAX_ENUM_CHARS})")
    n = len(q)
    starts: list[list[tuple[int, int]]] = [[] for _ in range(n + 1)]  # start -> [(tid, end)]
    maxlen = vocab.max_token_len
    for i in range(n):
        for k in range(1, min(maxlen, n - i) + 1):
            tid = vocab.get_id(q[i:i + k])
            if tid is not None and tid not in (vocab.bos_id, vocab.eos_id, vocab.unk_id):
                starts[i].append((tid, i + k))
        starts[i].sort()
    out: list[Segmentation] = []
    stack: list[int] = []

    def rec(pos: int):
        if pos == n:
            out.append(Segmentation(tuple(stack), q))
            return
        for tid, end in starts[pos]:
            stack.append(tid)
            rec(end)
            stack.pop()

    rec(0)
    return out


# ---------------------------------------------------------------------------
# Unigram training (EM over the segmentation lattice)
# ---------------------------------------------------------------------------


def train_unigram(corpus, vocab_size: int, em_iterations: int = 2,
                  prune_fraction: float = 0.25, alphabet: str | None = None,
                  max_seed_size: int | None = None) -> UnigramModel:
    """Fit token probabilities by EM and prune down to vocab_size.

    Seeding: every substring up to 8 chars with corpus frequency >= 2 (capped
    at max_seed_size, default 8x vocab_size, by frequency), plus all alphabet
    characters. Each round runs `em_iterations` E/M passes, then drops the
    prune_fraction of multi-character tokens whose removal costs the least
    corpus likelihood, until only vocab_size tokens remain.
    """
    corpus = list(corpus)
    if not corpus:
        raise DataError("cannot train a unigram model on an empty corpus")
    if alphabet is None:
        alphabet = "".join(sorted(set(BASE_ALPHABET) | set("".join(corpus))))
    n_base = len(set(alphabet)) + len(SPECIALS)
    if vocab_size < n_base:
        raise ValueError(f"vocab_size must be at least characters+specials ({n_base})")
    if max_seed_size is None:
        max_seed_size = 8 * vocab_size

    weighted = sorted(Counter(corpus).items())
    known = set(alphabet)

    sub_counts: Counter = Counter()
    for q, cnt in weighted:
        n = len(q)
        for i in range(n):
            if q[i] not in known:
                continue
            for k in range(2, min(8, n - i) + 1):
                surf = q[i:i + k]
                if all(c in known for c in surf):
                    sub_counts[surf] += cnt
    seeds = [s for s, c in sub_counts.items() if c >= 2]
    seeds.sort(key=lambda s: (-sub_counts[s], s))
    seeds = seeds[: max(0, max_seed_size - n_base)]

    vocab = Vocabulary(alphabet, sorted(seeds))
    # Initial scores proportional to count * length, a crude likelihood proxy.
    weights = np.zeros(len(vocab))
    for c in alphabet:
        weights[vocab.id(c)] = max(1.0, sub_counts.get(c, 1))
    for s in seeds:
        weights[vocab.id(s)] = sub_counts[s] * len(s)
    model = _renormalized(vocab, weights)

    target_multi = vocab_size - n_base
    while True:
        expected = None
        for _ in range(max(1, em_iterations)):
            expected, _ = _em_expected_counts(weighted, model)
            model = _renormalized(model.vocab, expected)
        multi_ids = model.vocab.multi_token_ids()
        if len(multi_ids) <= target_multi:
            break
        losses = _prune_losses(model, expected)
        n_drop = max(1, int(len(multi_ids) * prune_fraction))
        n_drop = min(n_drop, len(multi_ids) - target_multi)
        order = sorted(multi_ids, key=lambda t: (losses[t], model.vocab.surface(t)))
        dropped = set(order[:n_drop])
        keep = [model.vocab.surface(t) for t in multi_ids if t not in dropped]
        new_vocab = Vocabulary(alphabet, sorted(keep))
        new_weights = np.zeros(len(new_vocab))
        for surf in keep:
            new_weights[new_vocab.id(surf)] = math.exp(model.logprobs[model.vocab.id(surf)])
        for c in alphabet:
            new_weights[new_vocab.id(c)] = math.exp(model.logprobs[model.vocab.id(c)])
        model = _renormalized(new_vocab, new_weights)

    expected, _ = _em_expected_counts(weighted, model)
    return _renormalized(model.vocab, expected)


def _renormalized(vocab: Vocabulary, weights: np.ndarray) -> UnigramModel:
    """Probabilities from nonnegative weights; characters keep a tiny floor
    so every alphabet string remains segmentable."""
    w = np.array(weights, dtype=np.float64)
    w[[vocab.bos_id, vocab.eos_id, vocab.unk_id]] = 0.0
    char_ids = vocab.char_ids()
    w[char_ids] = np.maximum(w[char_ids], 1e-8)
    total = w.sum()
    lp = np.full(len(vocab), -np.inf)
    nz = w > 0
    lp[nz] = np.log(w[nz] / total)
    return UnigramModel(vocab, lp)


def _em_expected_counts(weighted, model: UnigramModel):
    """One E-step: expected token counts via forward-backward, plus the
    total corpus log-likelihood."""
    expected = np.zeros(len(model.vocab))
    total_ll = 0.0
    for q, cnt in weighted:
        edges = _lattice(q, model)
        n = len(q)
        fwd = [-math.inf] * (n + 1)
        fwd[0] = 0.0
        for j in range(1, n + 1):
            vals = [fwd[i] + lp for i, _, lp in edges[j] if fwd[i] > -math.inf]
            if vals:
                m = max(vals)
                fwd[j] = m + math.log(sum(math.exp(v - m) for v in vals))
        z = fwd[n]
        if z == -math.inf:
            continue
        bwd = [-math.inf] * (n + 1)
        bwd[n] = 0.0
        for j in range(n, 0, -1):
            if bwd[j] == -math.inf:
                continue
            for i, _, lp in edges[j]:
                v = bwd[j] + lp
                if bwd[i] == -math.inf:
                    bwd[i] = v
                else:
                    m = max(bwd[i], v)
                    bwd[i] = m + math.log(math.exp(bwd[i] - m) + math.exp(v - m))
        for j in range(1, n + 1):
            for i, tid, lp in edges[j]:
                if fwd[i] > -math.inf and bwd[j] > -math.inf:
                    expected[tid] += cnt * math.exp(fwd[i] + lp + bwd[j] - z)
        total_ll += cnt * z
    return expected, total_ll


def _prune_losses(model: UnigramModel, expected: np.ndarray) -> dict[int, float]:
    """Likelihood lost by removing each multi-character token: its expected
    count times the gap to the best alternative segmentation of its surface."""
    losses: dict[int, float] = {}
    for tid in model.vocab.multi_token_ids():
        surf = model.vocab.surface(tid)
        alt = _viterbi_excluding(surf, model, tid)
        losses[tid] = float(expected[tid]) * (float(model.logprobs[tid]) - alt)
    return losses


def _viterbi_excluding(q: str, model: UnigramModel, skip_id: int) -> float:
    vocab = model.vocab
    n = len(q)
    best = [-math.inf] * (n + 1)
    best[0] = 0.0
    maxlen = vocab.max_token_len
    for j in range(1, n + 1):
        for i in range(max(0, j - maxlen), j):
            if best[i] == -math.inf:
                continue
            tid = vocab.get_id(q[i:j])
            if tid is None or tid == skip_id:
                continue
            lp = model.logprobs[tid]
            if lp == -np.inf:
                continue
            cand = best[i] + float(lp)
            if cand > best[j]:
                best[j] = cand
    return best[n]


# ---------------------------------------------------------------------------
# Model files
# ---------------------------------------------------------------------------


def save_model(model, path) -> None:
    """Write a tokenizer as versioned JSON ({type, alphabet, tokens, ...})."""
    payload = {
        "schema": 1,
        "type": model.kind,
        "alphabet": model.vocab.alphabet,
        "tokens": model.vocab.tokens,
    }
    if model.kind == "bpe":
        payload["merges"] = [list(m) for m in model.merges]
    elif model.kind == "unigram":
        payload["logprobs"] = [float(x) for x in model.logprobs]
    Path(path).write_text(canonical_json(payload) + "\n", encoding="utf-8")


def load_model(path):
    with open(path, encoding="utf-8") as f:
        payload = json.load(f)
    if payload.get("schema") != 1:
        raise DataError(f"unsupported tokenizer schema in {path}")
    alphabet = payload["alphabet"]
    tokens = payload["tokens"]
    multi = [t for t in tokens if len(t) > 1 and t not in SPECIALS]
    vocab = Vocabulary(alphabet, multi)
    if vocab.tokens != tokens:
        raise DataError(f"token list in {path} is not in canonical order")
    kind = payload["type"]
    if kind == "char":
        return CharModel(vocab)
    if kind == "bpe":
        return BpeModel(vocab, [tuple(m) for m in payload["merges"]])
    if kind == "unigram":
        return UnigramModel(vocab, np.array(payload["logprobs"], dtype=np.float64))
    raise DataError(f"unknown tokenizer type {kind!r}")
