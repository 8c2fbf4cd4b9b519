"""Completion generation: prefix-constrained beam search over a token LM.

A typed prefix rarely ends on a token boundary of the query the user has in
mind, so the beam is seeded from several "retrace" cases: for each r up to
the configured limit, the last r prefix characters are handed back to the
generator and the first generated token must re-cover them and add at least
one new character. All cases share one joint beam; hypotheses carry the
joint log-probability of their full token sequence (seed included) so cases
remain comparable and duplicate-query merging is a true marginal.

`exhaustive_complete` enumerates the identical search space without a beam
and provides ground-truth rankings for small vocabularies.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

from .segmentation import Segmentation, UnigramModel, Vocabulary, enumerate_all_segmentations
from .util import logsumexp


@dataclass(frozen=True)
class Candidate:
    query: str
    score: float
    token_seqs: tuple[tuple[int, ...], ...] = ()

    @property
    def n_token_seqs(self) -> int:
        return max(1, len(self.token_seqs))


@dataclass
class CandidateList:
    """Ranked, deduplicated completions; scores strictly descending with
    ties broken by the query string."""

    entries: list[Candidate] = field(default_factory=list)
    decode_steps: int = 0
    n_sequences: int | None = None

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def queries(self) -> list[str]:
        return [c.query for c in self.entries]


@dataclass(frozen=True)
class DecodeConfig:
    beam_width: int = 30
    num_candidates: int = 10
    retrace_limit: int | None = 0  # None = unlimited
    marginalize: bool = False
    prefix_nbest: int | None = 1  # None = seed every segmentation (oracle mode)
    max_completion_chars: int = 40
    finished_variant: str = "pool"  # "pool" | "slot"
    tie_break: str = "lexicographic"

    def __post_init__(self):
        if self.beam_width < 1:
            raise ValueError("beam_width must be >= 1")
        if not 1 <= self.num_candidates <= self.beam_width:
            raise ValueError("num_candidates must satisfy 1 <= N <= beam_width")
        if self.retrace_limit is not None and self.retrace_limit < 0:
            raise ValueError("retrace_limit must be >= 0 or None")
        if self.prefix_nbest is not None and self.prefix_nbest < 1:
            raise ValueError("prefix_nbest must be >= 1 or None")
        if self.max_completion_chars < 1:
            raise ValueError("max_completion_chars must be >= 1")
        if self.finished_variant not in ("pool", "slot"):
            raise ValueError("finished_variant must be 'pool' or 'slot'")
        if self.tie_break != "lexicographic":
            raise ValueError("only lexicographic tie-breaking is supported")


@dataclass(frozen=True)
class RetraceCase:
    """One boundary hypothesis: the seed segments the prefix up to its last
    r characters; `cover` is the tail the first generated token must start
    with (and strictly extend)."""

    r: int
    seed: Segmentation
    cover: str


def retrace_steps(prefix_len: int, limit: int | None) -> list[int]:
    """Retrace depths for a prefix: 0..min(limit, |p|-1), plus |p| itself
    (a first token spanning the whole prefix) once limit reaches |p|."""
    if limit is None:
        return list(range(prefix_len + 1))
    rs = list(range(min(limit, prefix_len - 1) + 1))
    if limit >= prefix_len:
        rs.append(prefix_len)
    return rs


def seed_retrace_cases(prefix: str, segmenter, limit: int | None) -> list[RetraceCase]:
    """Canonical-seed retrace cases for a prefix (one seed per depth)."""
    if not prefix:
        raise ValueError("prefix must be nonempty")
    cases = []
    for r in retrace_steps(len(prefix), limit):
        part = prefix[: len(prefix) - r]
        seed = segmenter.segment(part) if part else Segmentation((), "")
        cases.append(RetraceCase(r=r, seed=seed, cover=prefix[len(prefix) - r:]))
    return cases


class _Hyp:
    __slots__ = ("state", "ids", "logprob", "cover", "beyond")

    def __init__(self, state, ids, logprob, cover, beyond):
        self.state = state
        self.ids = ids
        self.logprob = logprob
        self.cover = cover  # nonempty until the constrained first token lands
        self.beyond = beyond  # generated characters past the prefix


def _seed_segmentations(part: str, segmenter, nbest: int | None, vocab: Vocabulary):
    if not part:
        return [Segmentation((), "")]
    if nbest is None:
        return enumerate_all_segmentations(part, vocab)
    if nbest > 1 and isinstance(segmenter, UnigramModel):
        return [seg for seg, _ in segmenter.nbest(part, nbest)]
    return [segmenter.segment(part)]


def complete(prefix: str, lm, segmenter, cfg: DecodeConfig) -> CandidateList:
    """Top-N completion candidates for a normalized, nonempty prefix.

    Finished hypotheses move to a pool that does not consume beam slots
    (default), or occupy slots when cfg.finished_variant == "slot". With
    marginalize on, duplicate query strings score as the log-sum of their
    surviving token sequences; off, as the best one.
    """
    if not prefix:
        raise ValueError("prefix must be nonempty")
    vocab = segmenter.vocab
    if len(vocab) != len(lm.vocab) or vocab.tokens != lm.vocab.tokens:
        raise ValueError("segmenter and LM vocabularies differ")

    allowed_cache: dict[str, list[int]] = {}

    def allowed_ids(cover: str) -> list[int]:
        hit = allowed_cache.get(cover)
        if hit is None:
            specials = (vocab.bos_id, vocab.eos_id, vocab.unk_id)
            hit = [
                tid
                for tid, surf in enumerate(vocab.tokens)
                if tid not in specials and len(surf) > len(cover) and surf.startswith(cover)
            ]
            allowed_cache[cover] = hit
        return hit

    free_ids = [
        tid for tid in range(len(vocab))
        if tid not in (vocab.bos_id, vocab.eos_id, vocab.unk_id)
    ]
    surfaces = vocab.tokens

    active: list[_Hyp] = []
    for r in retrace_steps(len(prefix), cfg.retrace_limit):
        part = prefix[: len(prefix) - r]
        cover = prefix[len(prefix) - r:]
        if cover and not allowed_ids(cover):
            continue
        for seed in _seed_segmentations(part, segmenter, cfg.prefix_nbest, vocab):
            state = lm.initial_state()
            logprob = 0.0
            for tok in seed.ids:
                logprob += float(lm.next_logprobs(state)[tok])
                state = lm.advance(state, tok)
            active.append(_Hyp(state, seed.ids, logprob, cover, ""))

    active.sort(key=lambda h: (-h.logprob, h.ids))
    if cfg.finished_variant == "slot":
        return _run_slot_beam(prefix, lm, cfg, active, surfaces, allowed_ids, free_ids)
    return _run_pool_beam(prefix, lm, cfg, active, surfaces, allowed_ids, free_ids)


def _run_pool_beam(prefix, lm, cfg, active, surfaces, allowed_ids, free_ids) -> CandidateList:
    B = cfg.beam_width
    eos = lm.vocab.eos_id
    pool: list[tuple[float, tuple]] = []  # min-heap of the best B finished
    steps = 0
    while active:
        if len(pool) >= B and max(h.logprob for h in active) < pool[0][0]:
            break
        cands = []  # (score, parent index, token id)
        for idx, h in enumerate(active):
            logp = lm.next_logprobs(h.state)
            if h.cover:
                choices = allowed_ids(h.cover)
            elif len(h.beyond) >= cfg.max_completion_chars:
                choices = ()
            else:
                choices = free_ids
            if not h.cover:
                fin = (h.logprob + float(logp[eos]), h.ids + (eos,))
                if len(pool) < B:
                    heapq.heappush(pool, fin)
                else:
                    heapq.heappushpop(pool, fin)
            for tid in choices:
                score = h.logprob + float(logp[tid])
                if score > -math.inf:
                    cands.append((score, idx, tid))
        steps += 1
        cands.sort(key=lambda c: (-c[0], c[1], c[2]))
        next_active = []
        for score, idx, tid in cands[:B]:
            h = active[idx]
            surf = surfaces[tid]
            beyond = h.beyond + surf[len(h.cover):] if h.cover else h.beyond + surf
            next_active.append(_Hyp(lm.advance(h.state, tid), h.ids + (tid,), score, "", beyond))
        active = next_active
    finished = sorted(pool, key=lambda f: (-f[0], f[1]))
    return _finalize(prefix, lm.vocab, finished, cfg, steps)


def _run_slot_beam(prefix, lm, cfg, active, surfaces, allowed_ids, free_ids) -> CandidateList:
    B = cfg.beam_width
    eos = lm.vocab.eos_id
    kept: list[tuple[float, tuple]] = []  # finished hypotheses holding slots
    steps = 0
    while active:
        cands = []  # (-score, kind, key...) kind 0 = finished, 1 = expansion
        for i, f in enumerate(kept):
            cands.append((-f[0], 0, i, -1))
        for idx, h in enumerate(active):
            logp = lm.next_logprobs(h.state)
            if h.cover:
                choices = allowed_ids(h.cover)
            elif len(h.beyond) >= cfg.max_completion_chars:
                choices = ()
            else:
                choices = free_ids
            if not h.cover:
                cands.append((-(h.logprob + float(logp[eos])), 0, len(kept) + idx, eos))
            for tid in choices:
                score = h.logprob + float(logp[tid])
                if score > -math.inf:
                    cands.append((-score, 1, idx, tid))
        steps += 1
        cands.sort()
        new_kept = []
        next_active = []
        for negscore, kind, key, tid in cands[:B]:
            if kind == 0:
                if tid == -1:
                    new_kept.append(kept[key])
                else:
                    h = active[key - len(kept)]
                    new_kept.append((-negscore, h.ids + (eos,)))
            else:
                h = active[key]
                surf = surfaces[tid]
                beyond = h.beyond + surf[len(h.cover):] if h.cover else h.beyond + surf
                next_active.append(_Hyp(lm.advance(h.state, tid), h.ids + (tid,), -negscore, "", beyond))
        kept = new_kept
        active = next_active
    finished = sorted(kept, key=lambda f: (-f[0], f[1]))
    return _finalize(prefix, lm.vocab, finished, cfg, steps)


def _finalize(prefix, vocab, finished, cfg, steps) -> CandidateList:
    """Map finished sequences to query strings, merge duplicates, rank."""
    by_query: dict[str, list[tuple[float, tuple]]] = {}
    for score, ids in finished:
        query = prefix + _beyond_of(prefix, vocab, ids)
        by_query.setdefault(query, []).append((score, ids))
    entries = []
    for query, members in by_query.items():
        scores = [s for s, _ in members]
        value = logsumexp(scores) if cfg.marginalize else max(scores)
        seqs = tuple(sorted(ids[:-1] for _, ids in members))  # strip <EOS>
        entries.append(Candidate(query=query, score=value, token_seqs=seqs))
    entries.sort(key=lambda c: (-c.score, c.query))
    return CandidateList(
        entries=entries[: cfg.num_candidates],
        decode_steps=steps,
        n_sequences=len(finished),
    )


def _beyond_of(prefix, vocab, ids) -> str:
    """Characters of a finished sequence past the prefix. Token surfaces up
    to the prefix length re-cover the prefix itself (<UNK> included), so the
    suffix is recovered positionally."""
    pos = 0
    out = []
    for tid in ids:
        if tid == vocab.eos_id:
            break
        surf = vocab.tokens[tid]
        n = 1 if tid == vocab.unk_id else len(surf)
        if pos >= len(prefix):
            out.append(surf)
        elif pos + n > len(prefix):
            out.append(surf[len(prefix) - pos:])
        pos += n
    return "".join(out)


def exhaustive_complete(prefix: str, lm, vocab: Vocabulary, max_chars: int,
                        num_candidates: int | None = None,
                        marginalize: bool = True) -> CandidateList:
    """Ground-truth ranking by exact marginalization over every token
    sequence compatible with the prefix.

    Enumerates the same space a width-unlimited beam with unlimited retrace
    and all-segmentation seeding explores: tokens may be appended while the
    completion is shorter than max_chars (the final token may overshoot),
    and every prefix-covering sequence is scored with its <EOS> ending.
    Guarded to small vocabularies and short completions.
    """
    if not prefix:
        raise ValueError("prefix must be nonempty")
    if max_chars > 8:
        raise ValueError("exhaustive_complete supports max_chars <= 8")
    n_real = len(vocab) - 3
    if n_real > 12:
        raise ValueError("exhaustive_complete supports at most 12 real tokens")

    real = [
        (tid, vocab.tokens[tid])
        for tid in range(len(vocab))
        if tid not in (vocab.bos_id, vocab.eos_id, vocab.unk_id)
    ]
    eos = vocab.eos_id
    plen = len(prefix)
    by_query: dict[str, list[float]] = {}
    n_seqs = 0

    def rec(state, logprob, covered, beyond):
        nonlocal n_seqs
        logp = lm.next_logprobs(state)
        if covered >= plen:
            by_query.setdefault(prefix + beyond, []).append(logprob + float(logp[eos]))
            n_seqs += 1
        if len(beyond) >= max_chars:
            return
        for tid, surf in real:
            if covered < plen:
                overlap = plen - covered
                if len(surf) <= overlap:
                    if prefix[covered:covered + len(surf)] != surf:
                        continue
                    new_beyond = ""
                else:
                    if surf[:overlap] != prefix[covered:]:
                        continue
                    new_beyond = surf[overlap:]
            else:
                new_beyond = beyond + surf
            rec(lm.advance(state, tid), logprob + float(logp[tid]), covered + len(surf), new_beyond)

    rec(lm.initial_state(), 0.0, 0, "")
    entries = []
    for query, scores in by_query.items():
        value = logsumexp(scores) if marginalize else max(scores)
        entries.append(Candidate(query=query, score=value))
    entries.sort(key=lambda c: (-c.score, c.query))
    if num_candidates is not None:
        entries = entries[:num_candidates]
    return CandidateList(entries=entries, n_sequences=n_seqs)
