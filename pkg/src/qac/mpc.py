"""Most-popular-completion baseline: a frequency-annotated character trie.

Queries are inserted with multiplicity; lookups return the most frequent
stored queries extending a prefix, ties broken by the query string. Each
node caches the best terminal count in its subtree so lookups can run a
bounded best-first search instead of scanning whole subtrees.
"""

from __future__ import annotations

import heapq
import math
import pickle
from pathlib import Path

from .decode import Candidate, CandidateList


class _Node:
    __slots__ = ("children", "count", "best")

    def __init__(self):
        self.children: dict[str, _Node] = {}
        self.count = 0
        self.best = 0


class CompletionTrie:
    def __init__(self):
        self.root = _Node()
        self.total = 0

    def insert(self, q: str) -> None:
        if not q:
            raise ValueError("cannot insert an empty query")
        node = self.root
        path = [node]
        for ch in q:
            node = node.children.setdefault(ch, _Node())
            path.append(node)
        node.count += 1
        self.total += 1
        for n in path:
            if node.count > n.best:
                n.best = node.count

    def _find(self, prefix: str):
        node = self.root
        for ch in prefix:
            node = node.children.get(ch)
            if node is None:
                return None
        return node

    def top_n(self, prefix: str, n: int) -> CandidateList:
        """The <= n most frequent stored queries starting with `prefix`,
        ordered by (frequency desc, query asc); scores are log relative
        frequencies."""
        if n < 1:
            raise ValueError("n must be >= 1")
        node = self._find(prefix)
        entries = []
        if node is not None and self.total:
            # Heap keys are admissible: a subtree's (-best, path) is <= the
            # key of every completion inside it, so popped terminals arrive
            # in final order. kind 0 = concrete completion, 1 = subtree.
            heap: list[tuple] = [(-node.best, prefix, 1, node)]
            while heap and len(entries) < n:
                neg, s, kind, nd = heapq.heappop(heap)
                if kind == 0:
                    entries.append(Candidate(query=s, score=math.log(-neg / self.total)))
                    continue
                if nd.count:
                    heapq.heappush(heap, (-nd.count, s, 0, None))
                for ch in sorted(nd.children):
                    child = nd.children[ch]
                    if child.best:
                        heapq.heappush(heap, (-child.best, s + ch, 1, child))
        return CandidateList(entries=entries)

    def save(self, path) -> None:
        with open(path, "wb") as f:
            pickle.dump({"schema": 1, "total": self.total, "root": self.root}, f, protocol=4)

    @classmethod
    def load(cls, path) -> "CompletionTrie":
        with open(Path(path), "rb") as f:
            payload = pickle.load(f)
        trie = cls()
        trie.total = payload["total"]
        trie.root = payload["root"]
        return trie


def build_trie(queries) -> CompletionTrie:
    trie = CompletionTrie()
    for q in queries:
        trie.insert(q)
    return trie
