"""A trained model bundle on disk: tokenizer + LM + trie + metadata.

The CLI and the HTTP service both consume bundles; per-request engine
selection ("lm" or "mpc") picks between the beam-search completer and the
trie baseline over the same training data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .corpus import DataError
from .decode import CandidateList, DecodeConfig, complete
from .lm import NGramModel, load_ngram, save_ngram
from .mpc import CompletionTrie
from .segmentation import load_model, save_model
from .util import canonical_json, sha256_text

TOKENIZER_FILE = "tokenizer.json"
LM_FILE = "lm.json"
TRIE_FILE = "trie.bin"
META_FILE = "bundle.json"


@dataclass
class LmCompleter:
    lm: NGramModel
    segmenter: object
    cfg: DecodeConfig

    def __call__(self, prefix: str) -> CandidateList:
        return complete(prefix, self.lm, self.segmenter, self.cfg)


@dataclass
class MpcCompleter:
    trie: CompletionTrie
    n: int

    def __call__(self, prefix: str) -> CandidateList:
        return self.trie.top_n(prefix, self.n)


@dataclass
class ModelBundle:
    segmenter: object
    lm: NGramModel
    trie: CompletionTrie
    meta: dict

    def completer(self, engine: str = "lm", cfg: DecodeConfig | None = None, n: int | None = None):
        if engine == "lm":
            cfg = cfg or self.decode_config()
            if n is not None:
                cfg = DecodeConfig(**{**cfg.__dict__, "num_candidates": n})
            return LmCompleter(self.lm, self.segmenter, cfg)
        if engine == "mpc":
            n = n or self.decode_config().num_candidates
            return MpcCompleter(self.trie, n)
        raise ValueError(f"unknown engine {engine!r} (expected 'lm' or 'mpc')")

    def decode_config(self) -> DecodeConfig:
        raw = dict(self.meta.get("decode", {}))
        return DecodeConfig(**raw)

    def describe(self) -> dict:
        return {
            "segmentation": self.segmenter.kind,
            "vocab_size": len(self.segmenter.vocab),
            "lm_order": self.lm.order,
            "trie_total": self.trie.total,
            "seed": self.meta.get("seed"),
            "config_hash": self.meta.get("config_hash"),
        }


def save_bundle(outdir, segmenter, lm: NGramModel, trie: CompletionTrie,
                seed: int, config: dict, decode: DecodeConfig | None = None) -> None:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    save_model(segmenter, out / TOKENIZER_FILE)
    save_ngram(lm, out / LM_FILE)
    trie.save(out / TRIE_FILE)
    decode = decode or DecodeConfig()
    decode_fields = dict(decode.__dict__)
    meta = {
        "schema": 1,
        "seed": seed,
        "config_hash": sha256_text(canonical_json(config)),
        "config": config,
        "decode": decode_fields,
        "vocab_sha256": segmenter.vocab.sha256(),
    }
    (out / META_FILE).write_text(canonical_json(meta) + "\n", encoding="utf-8")


def load_bundle(indir) -> ModelBundle:
    d = Path(indir)
    if not (d / META_FILE).exists():
        raise DataError(f"no {META_FILE} under {d}; not a model bundle")
    meta = json.loads((d / META_FILE).read_text(encoding="utf-8"))
    if meta.get("schema") != 1:
        raise DataError(f"unsupported bundle schema in {d}")
    segmenter = load_model(d / TOKENIZER_FILE)
    lm = load_ngram(d / LM_FILE, segmenter.vocab)
    trie = CompletionTrie.load(d / TRIE_FILE)
    return ModelBundle(segmenter=segmenter, lm=lm, trie=trie, meta=meta)
