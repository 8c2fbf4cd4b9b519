import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qac.mpc import CompletionTrie, build_trie


def brute_force_top_n(inserted: list[str], prefix: str, n: int):
    """Filter-and-sort oracle over the inserted multiset."""
    from collections import Counter

    counts = Counter(q for q in inserted if q.startswith(prefix))
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:n]
    total = len(inserted)
    return [(q, math.log(c / total)) for q, c in ranked]


class TestInsert:
    def test_counts_accumulate(self):
        t = CompletionTrie()
        t.insert("abc")
        t.insert("abc")
        node = t._find("abc")
        assert node.count == 2

    def test_empty_query_rejected(self):
        t = CompletionTrie()
        with pytest.raises(ValueError):
            t.insert("")

    def test_total_conservation(self):
        queries = ["alpha", "beta", "alpha", "gamma"]
        t = build_trie(queries)
        assert t.total == len(queries)


class TestTopN:
    def test_unseen_prefix_empty(self):
        t = build_trie(["abc"])
        assert len(t.top_n("zzz", 5)) == 0

    def test_frequency_then_lex(self):
        t = build_trie(["ab"] * 3 + ["abc"])
        got = t.top_n("a", 2)
        assert got.queries() == ["ab", "abc"]
        assert got[0].score == pytest.approx(math.log(3 / 4))

    def test_full_query_prefix_includes_itself(self):
        t = build_trie(["abc", "abcd"])
        assert "abc" in t.top_n("abc", 5).queries()

    def test_prefix_consistency(self):
        t = build_trie(["abc", "abd", "xyz"])
        for c in t.top_n("ab", 10):
            assert c.query.startswith("ab")

    def test_lexicographic_ties(self):
        t = build_trie(["ba", "ab", "aa"])
        assert t.top_n("", 3).queries() == ["aa", "ab", "ba"]

    @given(st.data())
    @settings(max_examples=150, deadline=None)
    def test_oracle_equivalence(self, data):
        queries = data.draw(st.lists(
            st.text(alphabet="abc", min_size=1, max_size=5), min_size=1, max_size=30))
        prefix = data.draw(st.text(alphabet="abc", max_size=3))
        n = data.draw(st.integers(min_value=1, max_value=8))
        t = build_trie(queries)
        got = [(c.query, c.score) for c in t.top_n(prefix, n)]
        want = brute_force_top_n(queries, prefix, n)
        assert [q for q, _ in got] == [q for q, _ in want]
        np.testing.assert_allclose([s for _, s in got], [s for _, s in want], atol=1e-12)


class TestSerialization:
    def test_roundtrip(self, tmp_path):
        t = build_trie(["apple pie", "apple", "apricot"])
        t.save(tmp_path / "trie.bin")
        loaded = CompletionTrie.load(tmp_path / "trie.bin")
        assert loaded.total == t.total
        assert loaded.top_n("ap", 3).queries() == t.top_n("ap", 3).queries()
