"""Evaluation harness: MRR, PMRR, MRL, decode length, and throughput.

Run top to bottom:  python demos/03_evaluation.py   (about a minute)
"""

from qac.corpus import RawLogRecord, fraction_boundaries, split_by_time
from qac.decode import DecodeConfig, complete
from qac.evaluation import PrefixSampler, measure
from qac.lm import NGramConfig, train_ngram
from qac.mpc import build_trie
from qac.segmentation import CharModel, train_bpe
from qac.synthetic import generate_queries

records = [RawLogRecord("-", i, q)
           for i, q in enumerate(generate_queries(12000, seed=3, n_words=2000))]
split = split_by_time(records, *fraction_boundaries(records, 0.8, 0.1))
print("split counts:", split.counts())

char = CharModel.from_alphabet(split.alphabet)
bpe = train_bpe(split.train, vocab_size=256, alphabet=split.alphabet)
models = {
    "char": (char, train_ngram(split.train, char, NGramConfig(order=5)), 0),
    "bpe+retrace": (bpe, train_ngram(split.train, bpe, NGramConfig(order=3)), None),
}
trie = build_trie(split.train)

test_q = split.test[:120]
test_f = split.test_seen_flags[:120]
sampler = PrefixSampler(min_prefix_len=1, seed=0)

for name, (segmenter, lm, limit) in models.items():
    cfg = DecodeConfig(beam_width=30, num_candidates=10, retrace_limit=limit,
                       marginalize=True)
    completer = lambda p: complete(p, lm, segmenter, cfg)  # noqa: E731
    report = measure(completer, test_q, test_f, sampler,
                     include_mrl=True, mrl_max_queries=25)
    print(f"\n=== {name} ===")
    print(report.format_table())

print("\n=== mpc ===")
report = measure(lambda p: trie.top_n(p, 10), test_q, test_f, sampler,
                 include_mrl=True, mrl_max_queries=25)
print(report.format_table())
