"""Tokenizer walkthrough: character split, BPE merges, unigram lattices.

Run top to bottom:  python demos/01_tokenizers.py
"""

import numpy as np

from qac.segmentation import (
    CharModel,
    SamplerConfig,
    UnigramModel,
    enumerate_all_segmentations,
    nbest_segments,
    sample_segment,
    train_bpe,
    train_unigram,
    viterbi_segment,
)
from qac.synthetic import generate_queries

# A small synthetic query log. Every query is lowercase ASCII, words are
# built from repeating syllables, so subword structure is there to find.
queries = generate_queries(3000, seed=1, n_words=120)
print("corpus sample:", queries[:3])

# --- character tokenization is the trivial baseline ------------------------
char_model = CharModel.from_alphabet("".join(sorted(set("".join(queries)))))
seg = char_model.segment(queries[0])
print(f"\nchar split of {queries[0]!r}: {len(seg)} tokens")

# --- BPE: learn greedy merges until the vocabulary is full ------------------
bpe = train_bpe(queries, vocab_size=120)
print("\nfirst 10 BPE merges:", bpe.merges[:10])
for q in queries[:3]:
    s = bpe.segment(q)
    print(f"  {q!r} -> {[bpe.vocab.surface(i) for i in s.ids]}")

# --- unigram model: probabilities over tokens, many segmentations -----------
uni = train_unigram(queries, vocab_size=120)
q = queries[0]
print(f"\nviterbi segmentation of {q!r}:",
      [uni.vocab.surface(i) for i in viterbi_segment(q, uni).ids])

print("top-3 segmentations with log-probabilities:")
for s, lp in nbest_segments(q, uni, 3):
    print(f"  {lp:8.3f}  {[uni.vocab.surface(i) for i in s.ids]}")

# Stochastic segmentation: the knob alpha sharpens (large) or flattens
# (zero) the sampling distribution over the lattice.
rng = np.random.default_rng(0)
cfg = SamplerConfig(alpha=0.2, seed=0)
print("\nfive samples at alpha=0.2:")
for _ in range(5):
    s = sample_segment(q, uni, cfg, rng)
    print("  ", [uni.vocab.surface(i) for i in s.ids])

# For short strings the full segmentation set is small enough to enumerate.
word = q.split()[0][:6]
paths = enumerate_all_segmentations(word, uni.vocab)
print(f"\n{word!r} has {len(paths)} segmentations over this vocabulary")
