import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qac.corpus import (
    DataError,
    RawLogRecord,
    dedup_adjacent,
    fraction_boundaries,
    load_split,
    normalize_prefix,
    normalize_query,
    read_plain_queries,
    read_tsv_records,
    split_by_time,
    write_split,
)


class TestNormalizeQuery:
    def test_already_normalized(self):
        assert normalize_query("abc") == "abc"

    def test_case_and_whitespace(self):
        assert normalize_query("  NEW   York  ") == "new york"

    def test_non_ascii_removed_after_nfkc(self):
        # NFKC keeps the accented char; ASCII filtering then drops it.
        assert normalize_query("Café") == "caf"
        assert normalize_query("Cé") is None  # too short after cleanup

    def test_short_queries_dropped(self):
        assert normalize_query("ab") is None
        assert normalize_query(" x ") is None
        assert normalize_query("a    b") == "a b"  # exactly 3 chars after collapse

    def test_tabs_and_newlines_collapse(self):
        assert normalize_query("new\t\nyork") == "new york"

    def test_control_chars_removed(self):
        assert normalize_query("ab\x00cd") == "abcd"

    def test_nfkc_compatibility_forms(self):
        # Fullwidth ASCII normalizes into plain ASCII before filtering.
        assert normalize_query("ＡＢＣ") == "abc"

    @given(st.text(max_size=40))
    @settings(max_examples=300, deadline=None)
    def test_idempotent(self, raw):
        once = normalize_query(raw)
        if once is not None:
            assert normalize_query(once) == once

    @given(st.text(max_size=40))
    @settings(max_examples=300, deadline=None)
    def test_output_alphabet(self, raw):
        out = normalize_query(raw)
        if out is not None:
            assert out == out.strip()
            assert "  " not in out
            for c in out:
                assert c.isascii() and c.isprintable()
                assert c == c.lower()


class TestNormalizePrefix:
    def test_no_length_filter(self):
        assert normalize_prefix("A") == "a"
        assert normalize_prefix("  ") == ""

    def test_same_rules_as_queries(self):
        assert normalize_prefix("  NEW   Yo") == "new yo"


class TestDedupAdjacent:
    def test_adjacent_same_user_merged(self):
        recs = [RawLogRecord("u1", 1, "a b"), RawLogRecord("u1", 2, "a b"),
                RawLogRecord("u1", 3, "c c c")]
        out = dedup_adjacent(recs)
        assert [r.timestamp for r in out] == [1, 3]

    def test_different_users_kept(self):
        recs = [RawLogRecord("u1", 1, "xyz"), RawLogRecord("u2", 2, "xyz")]
        assert dedup_adjacent(recs) == recs

    def test_non_adjacent_kept(self):
        recs = [RawLogRecord("u1", 1, "xxx"), RawLogRecord("u1", 2, "yyy"),
                RawLogRecord("u1", 3, "xxx")]
        assert dedup_adjacent(recs) == recs

    def test_comparison_on_normalized_text(self):
        recs = [RawLogRecord("u1", 1, "New  York"), RawLogRecord("u1", 2, "new york")]
        assert len(dedup_adjacent(recs)) == 1


class TestSplitByTime:
    def _records(self):
        rows = []
        for i in range(10):
            rows.append(RawLogRecord("u", i, f"train query {i}"))
        rows.append(RawLogRecord("u", 10, "valid query"))
        rows.append(RawLogRecord("u", 20, "train query 3"))   # seen test query
        rows.append(RawLogRecord("u", 21, "novel test query"))
        return rows

    def test_split_and_seen_flags(self):
        split = split_by_time(self._records(), train_end=10, valid_end=20)
        assert len(split.train) == 10
        assert split.valid == ["valid query"]
        assert split.test == ["train query 3", "novel test query"]
        assert split.test_seen_flags == [True, False]

    def test_empty_split_is_error(self):
        recs = [RawLogRecord("u", 0, "query one"), RawLogRecord("u", 1, "query two")]
        with pytest.raises(DataError):
            split_by_time(recs, train_end=5, valid_end=6)

    def test_bad_boundaries(self):
        with pytest.raises(ValueError):
            split_by_time(self._records(), train_end=6, valid_end=5)

    def test_train_truncated_to_40_chars(self):
        long_q = "x" * 50
        recs = [RawLogRecord("u", 0, long_q), RawLogRecord("u", 1, "valid query"),
                RawLogRecord("u", 2, "test query")]
        split = split_by_time(recs, train_end=1, valid_end=2)
        assert split.train == ["x" * 40]

    def test_seen_checked_against_untruncated(self):
        long_q = "y" * 50
        recs = [RawLogRecord("u", 0, long_q), RawLogRecord("u", 1, "valid query"),
                RawLogRecord("u", 2, long_q), RawLogRecord("u2", 2, "y" * 40)]
        split = split_by_time(recs, train_end=1, valid_end=2)
        # The full 50-char query is seen; the 40-char truncation is not.
        assert split.test_seen_flags == [True, False]

    def test_seen_unseen_partition(self):
        split = split_by_time(self._records(), train_end=10, valid_end=20)
        n = len(split.test)
        assert sum(split.test_seen_flags) + sum(not f for f in split.test_seen_flags) == n


class TestRoundTrip:
    def test_write_and_load(self, tmp_path):
        split = split_by_time(TestSplitByTime()._records(), train_end=10, valid_end=20)
        write_split(split, tmp_path / "corpus", seed=7)
        loaded = load_split(tmp_path / "corpus")
        assert loaded.train == split.train
        assert loaded.test == split.test
        assert loaded.test_seen_flags == split.test_seen_flags
        assert loaded.alphabet == split.alphabet

    def test_write_deterministic(self, tmp_path):
        split = split_by_time(TestSplitByTime()._records(), train_end=10, valid_end=20)
        write_split(split, tmp_path / "a", seed=7)
        write_split(split, tmp_path / "b", seed=7)
        for name in ("train.txt", "valid.txt", "test.txt", "test_seen.txt", "manifest.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


class TestReaders:
    def test_tsv_reader(self, tmp_path):
        p = tmp_path / "log.tsv"
        p.write_text("u1\thello world\t100\nu2\tfoo bar\t200\n", encoding="utf-8")
        recs = read_tsv_records(p)
        assert recs[0] == RawLogRecord("u1", 100, "hello world")

    def test_tsv_malformed_line_names_line(self, tmp_path):
        p = tmp_path / "log.tsv"
        p.write_text("u1\thello\t100\nbroken line\n", encoding="utf-8")
        with pytest.raises(DataError, match=":2:"):
            read_tsv_records(p)

    def test_tsv_bad_timestamp(self, tmp_path):
        p = tmp_path / "log.tsv"
        p.write_text("u1\thello\tnotatime\n", encoding="utf-8")
        with pytest.raises(DataError, match="timestamp"):
            read_tsv_records(p)

    def test_plain_reader_uses_line_index(self, tmp_path):
        p = tmp_path / "queries.txt"
        p.write_text("first query\nsecond query\n", encoding="utf-8")
        recs = read_plain_queries(p)
        assert [r.timestamp for r in recs] == [0, 1]

    def test_fraction_boundaries(self, tmp_path):
        recs = [RawLogRecord("-", i, f"query {i}") for i in range(100)]
        train_end, valid_end = fraction_boundaries(recs, 0.8, 0.1)
        assert train_end == 80 and valid_end == 90
