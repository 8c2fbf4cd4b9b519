"""Ranking metrics and the evaluation harness.

A "completer" here is any callable mapping a prefix string to a
CandidateList; the language-model beam search and the trie baseline both
fit. MRR/PMRR sample one prefix per test query (uniform over lengths within
the minimum constraint); recoverable length deletes trailing characters one
at a time instead, so it needs no sampling at all.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .decode import CandidateList


@dataclass(frozen=True)
class PrefixSampler:
    """Uniform prefix-length sampling in [min_prefix_len, |q|-1]."""

    min_prefix_len: int = 1
    seed: int = 0

    def lengths(self, queries) -> list[int]:
        """One sampled prefix length per query; deterministic given seed.
        Queries too short for a proper prefix get length 0 (callers skip)."""
        rng = np.random.default_rng(self.seed)
        out = []
        for q in queries:
            if len(q) <= self.min_prefix_len:
                out.append(0)
            else:
                out.append(int(rng.integers(self.min_prefix_len, len(q))))
        return out


def reciprocal_rank(q: str, candidates) -> float:
    for i, cand in enumerate(candidates, start=1):
        if cand.query == q:
            return 1.0 / i
    return 0.0


def partial_reciprocal_rank(q: str, candidates) -> float:
    """Reciprocal index of the first candidate equal to q or that q extends
    by a whitespace-separated continuation."""
    for i, cand in enumerate(candidates, start=1):
        if q == cand.query or q.startswith(cand.query + " "):
            return 1.0 / i
    return 0.0


def mrr(completer, queries, sampler: PrefixSampler) -> float:
    return _mean_rank_metric(completer, queries, sampler, reciprocal_rank)


def pmrr(completer, queries, sampler: PrefixSampler) -> float:
    return _mean_rank_metric(completer, queries, sampler, partial_reciprocal_rank)


def _mean_rank_metric(completer, queries, sampler, metric) -> float:
    queries = list(queries)
    if not queries:
        raise ValueError("test set must be nonempty")
    lengths = sampler.lengths(queries)
    values = [metric(q, completer(q[:n])) for q, n in zip(queries, lengths) if n]
    if not values:
        raise ValueError("no query admits a proper prefix")
    return float(np.mean(values))


def recoverable_length(q: str, completer, min_prefix_len: int = 1) -> int:
    """Number of trailing characters deletable one by one while the full
    query keeps appearing among the candidates; stops at the first failure
    and is capped at |q| - min_prefix_len."""
    cap = len(q) - min_prefix_len
    k = 0
    for l in range(1, cap + 1):
        if q in completer(q[: len(q) - l]).queries():
            k = l
        else:
            break
    return k


def mrl(completer, queries, min_prefix_len: int = 1) -> float:
    queries = [q for q in queries if len(q) > min_prefix_len]
    if not queries:
        raise ValueError("test set must be nonempty")
    return float(np.mean([recoverable_length(q, completer, min_prefix_len) for q in queries]))


@dataclass
class StratumMetrics:
    count: int = 0
    mrr: float | None = None
    pmrr: float | None = None
    mrl: float | None = None
    mrl_count: int = 0
    mean_decode_length: float | None = None

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "mrr": self.mrr,
            "pmrr": self.pmrr,
            "mrl": self.mrl,
            "mrl_count": self.mrl_count,
            "mean_decode_length": self.mean_decode_length,
        }


@dataclass
class EvalReport:
    strata: dict[str, StratumMetrics]
    qps: float
    wall_seconds: float
    config: dict = field(default_factory=dict)
    skipped_short: int = 0

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "strata": {name: m.to_dict() for name, m in self.strata.items()},
            "timing": {"qps": self.qps, "wall_seconds": self.wall_seconds},
            "skipped_short": self.skipped_short,
            "config": self.config,
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    def format_table(self) -> str:
        cols = ["stratum", "count", "MRR", "PMRR", "MRL", "decode len"]
        rows = []
        for name in ("seen", "unseen", "all"):
            m = self.strata.get(name)
            if m is None:
                continue
            rows.append([
                name,
                str(m.count),
                _fmt(m.mrr),
                _fmt(m.pmrr),
                _fmt(m.mrl, 2),
                _fmt(m.mean_decode_length, 1),
            ])
        widths = [max(len(c), *(len(r[i]) for r in rows)) for i, c in enumerate(cols)]
        lines = [
            "  ".join(c.ljust(widths[i]) for i, c in enumerate(cols)),
            "  ".join("-" * widths[i] for i in range(len(cols))),
        ]
        lines += ["  ".join(r[i].ljust(widths[i]) for i in range(len(cols))) for r in rows]
        lines.append(f"QPS: {self.qps:.1f}")
        return "\n".join(lines)


def _fmt(x, digits: int = 3) -> str:
    return "n/a" if x is None else f"{x:.{digits}f}"


def measure(completer, queries, seen_flags, sampler: PrefixSampler,
            include_mrl: bool = True, mrl_max_queries: int | None = None,
            config: dict | None = None, workers: int = 1) -> EvalReport:
    """Stratified MRR/PMRR/MRL plus decode-length and throughput numbers.

    Metric values are deterministic given the sampler seed; only the timing
    figures vary run to run. MRL can be limited to a deterministic subsample
    because it issues up to |q| completion calls per query.

    workers > 1 fans the completion calls over a thread pool and aggregates
    in input order, so metric values are unchanged; use it for metric-only
    runs, since per-query latency (QPS) then reflects parallel throughput
    rather than sequential decode time.
    """
    queries = list(queries)
    seen_flags = list(seen_flags)
    if len(queries) != len(seen_flags):
        raise ValueError("queries and seen_flags must align")
    if not queries:
        raise ValueError("test set must be nonempty")

    lengths = sampler.lengths(queries)
    rows = [(q, flag, q[:n]) for q, flag, n in zip(queries, seen_flags, lengths) if n]
    skipped = len(queries) - len(rows)

    per_query = []  # (seen, rr, prr, decode_steps)
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        t0 = time.perf_counter()
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(completer, [p for _, _, p in rows]))
        wall = time.perf_counter() - t0
        n_calls = len(rows)
        for (q, flag, _), cands in zip(rows, results):
            per_query.append((flag, reciprocal_rank(q, cands),
                              partial_reciprocal_rank(q, cands), cands.decode_steps))
    else:
        wall = 0.0
        n_calls = 0
        for q, flag, prefix in rows:
            t0 = time.perf_counter()
            cands = completer(prefix)
            wall += time.perf_counter() - t0
            n_calls += 1
            per_query.append((flag, reciprocal_rank(q, cands),
                              partial_reciprocal_rank(q, cands), cands.decode_steps))

    mrl_samples: dict[bool, list[int]] = {True: [], False: []}
    if include_mrl:
        eligible = [(q, f) for q, f in zip(queries, seen_flags) if len(q) > sampler.min_prefix_len]
        if mrl_max_queries is not None and len(eligible) > mrl_max_queries:
            rng = np.random.default_rng(sampler.seed)
            idx = rng.choice(len(eligible), size=mrl_max_queries, replace=False)
            eligible = [eligible[i] for i in sorted(idx)]
        for q, flag in eligible:
            mrl_samples[flag].append(recoverable_length(q, completer, sampler.min_prefix_len))

    def stratum(pred) -> StratumMetrics:
        rows = [r for r in per_query if pred(r[0])]
        m = StratumMetrics(count=len(rows))
        if rows:
            m.mrr = float(np.mean([r[1] for r in rows]))
            m.pmrr = float(np.mean([r[2] for r in rows]))
            steps = [r[3] for r in rows if r[3]]
            m.mean_decode_length = float(np.mean(steps)) if steps else None
        rls = [v for flag in (True, False) if pred(flag) for v in mrl_samples[flag]]
        m.mrl_count = len(rls)
        if rls:
            m.mrl = float(np.mean(rls))
        return m

    report = EvalReport(
        strata={
            "seen": stratum(lambda f: f),
            "unseen": stratum(lambda f: not f),
            "all": stratum(lambda f: True),
        },
        qps=(n_calls / wall) if wall > 0 else float("inf"),
        wall_seconds=wall,
        config=dict(config or {}, sampler={"min_prefix_len": sampler.min_prefix_len,
                                           "seed": sampler.seed}),
        skipped_short=skipped,
    )
    return report
