"""Completion generation: beam search, retracing, and marginalized reranking.

Run top to bottom:  python demos/02_completion.py
"""

from qac.decode import DecodeConfig, complete
from qac.lm import NGramConfig, train_ngram
from qac.mpc import build_trie
from qac.segmentation import train_bpe
from qac.synthetic import generate_queries

queries = generate_queries(8000, seed=2, n_words=400)
bpe = train_bpe(queries, vocab_size=200)
lm = train_ngram(queries, bpe, NGramConfig(order=3))
trie = build_trie(queries)

# Pick a prefix that cuts a popular query mid-token.
target = max(set(queries), key=queries.count)
prefix = target[: len(target) // 2]
print(f"target query: {target!r}   typed prefix: {prefix!r}")

# Without retracing, the beam is stuck with the tokenizer's segmentation of
# the prefix; the boundary it induces may never occur in training.
for limit, label in ((0, "no retrace"), (2, "retrace<=2"), (None, "retrace all")):
    cfg = DecodeConfig(beam_width=30, num_candidates=5, retrace_limit=limit)
    out = complete(prefix, lm, bpe, cfg)
    print(f"\n{label} (decode steps {out.decode_steps}):")
    for cand in out:
        print(f"  {cand.score:9.3f}  {cand.query}")

# Marginalized reranking merges duplicate strings produced by different
# token sequences, adding their probabilities instead of keeping the max.
cfg = DecodeConfig(beam_width=30, num_candidates=5, retrace_limit=None, marginalize=True)
out = complete(prefix, lm, bpe, cfg)
print("\nwith marginalized reranking:")
for cand in out:
    print(f"  {cand.score:9.3f}  {cand.query}  ({cand.n_token_seqs} token sequences)")

# The trie baseline: frequency-ranked previously seen queries.
print("\nmost-popular-completion baseline:")
for cand in trie.top_n(prefix, 5):
    print(f"  {cand.score:9.3f}  {cand.query}")
