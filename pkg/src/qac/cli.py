"""Command-line driver: ingest, train, complete, evaluate, serve.

Exit codes: 0 success, 1 usage error, 2 data error. A JSON config file
(--config or the QAC_CONFIG environment variable) can pre-fill any flag
defaults; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import corpus as corpus_mod
from .bundle import load_bundle, save_bundle
from .corpus import DataError, normalize_prefix
from .decode import DecodeConfig
from .evaluation import PrefixSampler, measure
from .lm import NGramConfig, train_ngram
from .mpc import build_trie
from .segmentation import CharModel, SamplerConfig, train_bpe, train_unigram
from .service import SuggestService, make_server
from .util import canonical_json, sha256_text


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qac", description="Query auto-completion toolkit")
    parser.add_argument("--config", help="JSON config file (or set QAC_CONFIG)")
    parser.add_argument("--seed", type=int, default=0, help="global random seed")
    sub = parser.add_subparsers(dest="command", required=True)
    parser._qac_subparsers = sub  # config defaults are pushed into each subparser

    p = sub.add_parser("ingest", parents=[], help="normalize, dedup, and split a query log")
    p.add_argument("--input", required=True, help="raw log file")
    p.add_argument("--format", choices=("tsv", "lines"), default="tsv",
                   help="tsv: user<TAB>query<TAB>timestamp; lines: one query per line")
    p.add_argument("--outdir", required=True)
    p.add_argument("--train-end", type=int, help="timestamps below go to train")
    p.add_argument("--valid-end", type=int, help="timestamps below (and >= train-end) go to valid")
    p.add_argument("--train-frac", type=float, default=0.8)
    p.add_argument("--valid-frac", type=float, default=0.1)

    p = sub.add_parser("train", help="train tokenizer, LM, and trie from an ingested corpus")
    p.add_argument("--corpus-dir", required=True)
    p.add_argument("--outdir", required=True)
    p.add_argument("--segmentation", choices=("char", "bpe", "unigram"), default="bpe")
    p.add_argument("--vocab-size", type=int, default=256)
    p.add_argument("--order", type=int, default=5, help="n-gram order")
    p.add_argument("--passes", type=int, default=1, help="training passes over the corpus")
    p.add_argument("--sr", action="store_true",
                   help="train the LM on sampled segmentations (unigram tokenizer only)")
    p.add_argument("--alpha", type=float, default=0.2, help="sampling exponent for --sr")
    p.add_argument("--nbest-size", type=int, default=None,
                   help="sample from this many best segmentations (default: full lattice)")
    p.add_argument("--em-iterations", type=int, default=2)
    p.add_argument("--prune-fraction", type=float, default=0.25)
    p.add_argument("--valid-sample", type=int, default=50,
                   help="validation queries for the post-training summary (0 disables)")

    def decode_flags(p):
        # Defaults of None fall back to the decode config embedded in the
        # bundle at training time; explicit flags override it.
        p.add_argument("--beam", type=int, default=None)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--retrace", default=None, help="max retrace steps, or 'inf'")
        p.add_argument("--marginalize", action=argparse.BooleanOptionalAction, default=None)

    p = sub.add_parser("complete", help="print completion candidates for a prefix")
    p.add_argument("--model-dir", required=True, help="trained bundle directory")
    p.add_argument("--model", choices=("lm", "mpc"), default="lm")
    p.add_argument("--prefix", required=True)
    decode_flags(p)

    p = sub.add_parser("evaluate", help="run the metric harness on the test split")
    p.add_argument("--model-dir", required=True)
    p.add_argument("--model", choices=("lm", "mpc"), default="lm")
    p.add_argument("--corpus-dir", required=True)
    decode_flags(p)
    p.add_argument("--max-queries", type=int, default=None)
    p.add_argument("--mrl", action="store_true", help="also compute mean recoverable length")
    p.add_argument("--mrl-max-queries", type=int, default=200)
    p.add_argument("--min-prefix-len", type=int, default=1)
    p.add_argument("--out", help="write the JSON report here")

    p = sub.add_parser("serve", help="serve suggestions over HTTP")
    p.add_argument("--model-dir", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--ui-dir", help="static files to serve at / (demo UI build)")
    return parser


def _parse_retrace(text) -> int | None:
    if text is None or text in ("inf", "none", "unlimited"):
        return None
    return int(text)


def _decode_config(args, bundle) -> DecodeConfig:
    """Bundle decode defaults overlaid with any explicitly given flags."""
    cfg = bundle.decode_config()
    fields = dict(cfg.__dict__)
    if args.beam is not None:
        fields["beam_width"] = args.beam
    if args.n is not None:
        fields["num_candidates"] = args.n
    if args.retrace is not None:
        fields["retrace_limit"] = _parse_retrace(args.retrace)
    if args.marginalize is not None:
        fields["marginalize"] = args.marginalize
    return DecodeConfig(**fields)


def cmd_ingest(args) -> int:
    if args.format == "tsv":
        records = corpus_mod.read_tsv_records(args.input)
    else:
        records = corpus_mod.read_plain_queries(args.input)
    if not records:
        raise DataError(f"{args.input}: no records")
    records.sort(key=lambda r: (r.user_id, r.timestamp))
    records = corpus_mod.dedup_adjacent(records)
    records.sort(key=lambda r: r.timestamp)
    if args.train_end is not None and args.valid_end is not None:
        train_end, valid_end = args.train_end, args.valid_end
    else:
        train_end, valid_end = corpus_mod.fraction_boundaries(
            records, args.train_frac, args.valid_frac)
    split = corpus_mod.split_by_time(records, train_end, valid_end)
    config_hash = sha256_text(canonical_json({
        "format": args.format, "train_end": train_end, "valid_end": valid_end,
    }))
    corpus_mod.write_split(split, args.outdir, seed=args.seed, config_hash=config_hash)
    print(json.dumps({"outdir": args.outdir, **split.counts()}, sort_keys=True))
    return 0


def cmd_train(args) -> int:
    split = corpus_mod.load_split(args.corpus_dir)
    alphabet = split.alphabet
    if args.segmentation == "char":
        segmenter = CharModel.from_alphabet(alphabet)
    elif args.segmentation == "bpe":
        segmenter = train_bpe(split.train, args.vocab_size, alphabet=alphabet)
    else:
        segmenter = train_unigram(split.train, args.vocab_size, alphabet=alphabet,
                                  em_iterations=args.em_iterations,
                                  prune_fraction=args.prune_fraction)
    sampler = None
    if args.sr:
        if args.segmentation != "unigram":
            raise DataError("--sr requires --segmentation unigram")
        sampler = SamplerConfig(alpha=args.alpha, nbest_size=args.nbest_size, seed=args.seed)
    ngram_cfg = NGramConfig(order=args.order, passes=args.passes, sampler=sampler)
    lm = train_ngram(split.train, segmenter, ngram_cfg)
    trie = build_trie(split.train)

    config = {
        "segmentation": args.segmentation,
        "vocab_size": args.vocab_size,
        "order": args.order,
        "passes": args.passes,
        "sr": bool(args.sr),
        "alpha": args.alpha if args.sr else None,
        "nbest_size": args.nbest_size if args.sr else None,
        "seed": args.seed,
    }
    # Subword bundles decode with unlimited retrace by default: their
    # canonical prefix segmentation rarely matches trained boundaries.
    # Stochastically trained models also merge duplicate strings by default.
    decode = DecodeConfig(
        retrace_limit=None if args.segmentation != "char" else 0,
        marginalize=bool(args.sr),
    )
    save_bundle(args.outdir, segmenter, lm, trie, seed=args.seed, config=config,
                decode=decode)
    print(f"saved bundle to {args.outdir}")

    if args.valid_sample:
        sample = split.valid[: args.valid_sample]
        flags = [q in set(split.train) for q in sample]
        bundle = load_bundle(args.outdir)
        report = measure(bundle.completer("lm"), sample, flags,
                         PrefixSampler(seed=args.seed), include_mrl=False,
                         config={"split": "valid", "engine": "lm"})
        print("validation summary:")
        print(report.format_table())
    return 0


def cmd_complete(args) -> int:
    bundle = load_bundle(args.model_dir)
    prefix = normalize_prefix(args.prefix)
    if not prefix:
        raise DataError("prefix is empty after normalization")
    cfg = _decode_config(args, bundle)
    completer = bundle.completer(args.model, cfg=cfg, n=cfg.num_candidates)
    cands = completer(prefix)
    for rank, cand in enumerate(cands, start=1):
        print(json.dumps({
            "rank": rank,
            "query": cand.query,
            "score": cand.score,
            "n_token_seqs": cand.n_token_seqs,
        }, sort_keys=True))
    return 0


def cmd_evaluate(args) -> int:
    bundle = load_bundle(args.model_dir)
    split = corpus_mod.load_split(args.corpus_dir)
    queries = split.test
    flags = split.test_seen_flags
    if args.max_queries is not None:
        queries = queries[: args.max_queries]
        flags = flags[: args.max_queries]
    cfg = _decode_config(args, bundle)
    completer = bundle.completer(args.model, cfg=cfg, n=cfg.num_candidates)
    sampler = PrefixSampler(min_prefix_len=args.min_prefix_len, seed=args.seed)
    report = measure(completer, queries, flags, sampler,
                     include_mrl=args.mrl, mrl_max_queries=args.mrl_max_queries,
                     config={"engine": args.model, "model_dir": str(args.model_dir),
                             "decode": dict(cfg.__dict__)})
    print(report.format_table())
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n", encoding="utf-8")
        print(f"wrote report to {args.out}")
    return 0


def cmd_serve(args) -> int:
    service = SuggestService(ui_dir=args.ui_dir)
    service.load(args.model_dir)
    server = make_server(service, host=args.host, port=args.port)
    print(f"serving on http://{args.host}:{server.server_address[1]} "
          f"(models: {service.bundle.describe()})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


_COMMANDS = {
    "ingest": cmd_ingest,
    "train": cmd_train,
    "complete": cmd_complete,
    "evaluate": cmd_evaluate,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    config_path = os.environ.get("QAC_CONFIG")
    # A --config flag before parsing wins over the environment variable.
    if "--config" in argv:
        at = argv.index("--config")
        if at + 1 >= len(argv):
            print("qac: error: --config requires a path", file=sys.stderr)
            return 1
        config_path = argv[at + 1]
    if config_path:
        try:
            defaults = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            print(f"qac: error: cannot read config {config_path}: {exc}", file=sys.stderr)
            return 2
        mapped = {k.replace("-", "_"): v for k, v in defaults.items()}
        parser.set_defaults(**mapped)
        for sp in parser._qac_subparsers.choices.values():
            sp.set_defaults(**{k: v for k, v in mapped.items()
                               if any(k == a.dest for a in sp._actions)})
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except DataError as exc:
        print(f"qac: data error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"qac: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
