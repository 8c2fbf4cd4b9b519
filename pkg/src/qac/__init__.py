"""Query auto-completion with subword language models.

Core pieces: corpus ingestion (`qac.corpus`), tokenizers (`qac.segmentation`),
a count-based token LM (`qac.lm`), prefix-constrained beam search with
retrace seeding and marginalized reranking (`qac.decode`), a trie
most-popular-completion baseline (`qac.mpc`), and the MRR/PMRR/MRL
evaluation harness (`qac.evaluation`).
"""

from .corpus import CorpusSplit, DataError, RawLogRecord, dedup_adjacent, normalize_query, split_by_time
from .decode import Candidate, CandidateList, DecodeConfig, complete, exhaustive_complete, seed_retrace_cases
from .evaluation import (
    EvalReport,
    PrefixSampler,
    measure,
    mrl,
    mrr,
    partial_reciprocal_rank,
    pmrr,
    reciprocal_rank,
    recoverable_length,
)
from .lm import (
    NGramConfig,
    NGramModel,
    TokenLanguageModel,
    query_logprob_best,
    query_logprob_exact,
    token_seq_logprob,
    train_ngram,
)
from .mpc import CompletionTrie, build_trie
from .segmentation import (
    BpeModel,
    CharModel,
    SamplerConfig,
    Segmentation,
    UnigramModel,
    Vocabulary,
    bpe_segment,
    char_segment,
    enumerate_all_segmentations,
    nbest_segments,
    sample_segment,
    train_bpe,
    train_unigram,
    viterbi_segment,
)

__version__ = "0.1.0"
