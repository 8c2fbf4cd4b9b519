"""Query-log ingestion: normalization, adjacent dedup, and time-based splits.

Raw logs arrive as (user_id, query_text, timestamp) rows. Everything
downstream (tokenizers, language models, the completion trie) consumes the
normalized one-query-per-line splits produced here.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass
from pathlib import Path

MIN_QUERY_CHARS = 3
TRAIN_TRUNCATE_CHARS = 40

# Always-on character alphabet; punctuation observed in the training split is
# added on top at ingest time and persisted in the manifest.
BASE_ALPHABET = "abcdefghijklmnopqrstuvwxyz0123456789 "

_WS_RUN = re.compile(r"\s+")


class DataError(Exception):
    """Raised for malformed or unusable input data."""


@dataclass(frozen=True)
class RawLogRecord:
    user_id: str
    timestamp: int
    query_text: str


def normalize_query(raw: str) -> str | None:
    """Canonicalize a raw query; returns None when too short to keep.

    Steps, applied in this order: NFKC normalization; removal of non-ASCII
    characters (control characters other than whitespace are dropped in the
    same step so the result is printable); lowercasing; collapsing whitespace
    runs to a single space; trimming. Results shorter than MIN_QUERY_CHARS
    are dropped.
    """
    text = unicodedata.normalize("NFKC", raw)
    text = "".join(c for c in text if c.isascii() and (c.isprintable() or c.isspace()))
    text = text.lower()
    text = _WS_RUN.sub(" ", text).strip()
    if len(text) < MIN_QUERY_CHARS:
        return None
    return text


def normalize_prefix(raw: str) -> str:
    """Apply the query normalization rules to a typed prefix.

    Identical to normalize_query except the minimum-length filter: prefixes
    are legitimately short. May return an empty string.
    """
    text = unicodedata.normalize("NFKC", raw)
    text = "".join(c for c in text if c.isascii() and (c.isprintable() or c.isspace()))
    text = text.lower()
    return _WS_RUN.sub(" ", text).strip()


def dedup_adjacent(records: list[RawLogRecord]) -> list[RawLogRecord]:
    """Drop records repeating the previous kept record's (user, query).

    Expects records sorted by (user_id, timestamp). Queries are compared on
    their normalized text; records whose normalization is absent compare on
    the raw text.
    """
    kept: list[RawLogRecord] = []
    prev_user: str | None = None
    prev_key: str | None = None
    for rec in records:
        key = normalize_query(rec.query_text)
        if key is None:
            key = rec.query_text
        if kept and rec.user_id == prev_user and key == prev_key:
            continue
        kept.append(rec)
        prev_user = rec.user_id
        prev_key = key
    return kept


def alphabet_of(queries) -> str:
    """BASE_ALPHABET plus every character observed in `queries`, sorted."""
    chars = set(BASE_ALPHABET)
    for q in queries:
        chars.update(q)
    return "".join(sorted(chars))


@dataclass
class CorpusSplit:
    train: list[str]
    valid: list[str]
    test: list[str]
    test_seen_flags: list[bool]
    alphabet: str
    train_end: int
    valid_end: int

    def counts(self) -> dict:
        n_seen = sum(self.test_seen_flags)
        return {
            "train": len(self.train),
            "valid": len(self.valid),
            "test": len(self.test),
            "test_seen": n_seen,
            "test_unseen": len(self.test) - n_seen,
        }


def split_by_time(records, train_end: int, valid_end: int) -> CorpusSplit:
    """Normalize records and split them into train/valid/test by timestamp.

    Train queries are truncated to TRAIN_TRUNCATE_CHARS (then right-stripped
    so the no-trailing-space invariant holds). Seen flags are computed
    against the *untruncated* train text; the choice is recorded in the
    manifest by `write_split`.
    """
    if train_end >= valid_end:
        raise ValueError(f"train_end ({train_end}) must be < valid_end ({valid_end})")
    train_full: list[str] = []
    valid: list[str] = []
    test: list[str] = []
    for rec in records:
        text = normalize_query(rec.query_text)
        if text is None:
            continue
        if rec.timestamp < train_end:
            train_full.append(text)
        elif rec.timestamp < valid_end:
            valid.append(text)
        else:
            test.append(text)
    if not train_full or not valid or not test:
        c = (len(train_full), len(valid), len(test))
        raise DataError("empty split: train=%d valid=%d test=%d" % c)
    train_set = set(train_full)
    seen = [q in train_set for q in test]
    train = [q[:TRAIN_TRUNCATE_CHARS].rstrip() for q in train_full]
    return CorpusSplit(
        train=train,
        valid=valid,
        test=test,
        test_seen_flags=seen,
        alphabet=alphabet_of(train_full),
        train_end=train_end,
        valid_end=valid_end,
    )


def read_tsv_records(path) -> list[RawLogRecord]:
    """Read tab-separated (user_id, query_text, timestamp) rows."""
    records = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DataError(f"{path}:{lineno}: expected 3 tab-separated fields, got {len(parts)}")
            user, query, ts = parts
            try:
                timestamp = int(ts)
            except ValueError:
                raise DataError(f"{path}:{lineno}: bad timestamp {ts!r}") from None
            records.append(RawLogRecord(user, timestamp, query))
    return records


def read_plain_queries(path) -> list[RawLogRecord]:
    """Read a one-query-per-line file; line index serves as the timestamp."""
    records = []
    with open(path, encoding="utf-8") as f:
        for i, line in enumerate(f):
            line = line.rstrip("\n")
            if line:
                records.append(RawLogRecord("-", i, line))
    return records


def fraction_boundaries(records, train_frac: float, valid_frac: float) -> tuple[int, int]:
    """Timestamp boundaries putting ~train_frac / ~valid_frac of records in
    the first two splits. Useful for synthetic corpora indexed by line."""
    if not records:
        raise DataError("no records to split")
    if not 0 < train_frac < 1 or not 0 < valid_frac < 1 or train_frac + valid_frac >= 1:
        raise ValueError("fractions must be in (0,1) with train+valid < 1")
    ts = sorted(r.timestamp for r in records)
    n = len(ts)
    train_end = ts[min(int(n * train_frac), n - 1)]
    valid_end = ts[min(int(n * (train_frac + valid_frac)), n - 1)]
    if train_end >= valid_end:
        valid_end = train_end + 1
    return train_end, valid_end


def write_split(split: CorpusSplit, outdir, seed: int | None = None,
                config_hash: str | None = None) -> None:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    for name in ("train", "valid", "test"):
        with open(out / f"{name}.txt", "w", encoding="utf-8") as f:
            for q in getattr(split, name):
                f.write(q + "\n")
    with open(out / "test_seen.txt", "w", encoding="utf-8") as f:
        for flag in split.test_seen_flags:
            f.write(("1" if flag else "0") + "\n")
    manifest = {
        "schema": 1,
        "counts": split.counts(),
        "alphabet": split.alphabet,
        "train_end": split.train_end,
        "valid_end": split.valid_end,
        "min_query_chars": MIN_QUERY_CHARS,
        "train_truncate_chars": TRAIN_TRUNCATE_CHARS,
        "seen_computed_against": "untruncated",
        "seed": seed,
        "config_hash": config_hash,
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def load_split(indir) -> CorpusSplit:
    d = Path(indir)
    try:
        with open(d / "manifest.json", encoding="utf-8") as f:
            manifest = json.load(f)
    except FileNotFoundError:
        raise DataError(f"no manifest.json under {d}") from None

    def read_lines(name):
        with open(d / name, encoding="utf-8") as f:
            return [line.rstrip("\n") for line in f if line.rstrip("\n")]

    flags = [line == "1" for line in read_lines("test_seen.txt")]
    split = CorpusSplit(
        train=read_lines("train.txt"),
        valid=read_lines("valid.txt"),
        test=read_lines("test.txt"),
        test_seen_flags=flags,
        alphabet=manifest["alphabet"],
        train_end=manifest["train_end"],
        valid_end=manifest["valid_end"],
    )
    if len(split.test_seen_flags) != len(split.test):
        raise DataError("test_seen.txt does not match test.txt")
    return split
