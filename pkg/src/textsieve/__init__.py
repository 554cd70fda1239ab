"""Outlier triage and uniqueness-driven collection for short-text corpora.

The pieces, bottom up: :mod:`textsieve.corpus` models labeled utterances and
their file format; :mod:`textsieve.embedding` turns them into vectors;
:mod:`textsieve.detection` ranks each class by distance from its mean;
:mod:`textsieve.evaluation` scores rankings against planted errors and
measures corpus variety; :mod:`textsieve.pipeline` runs the multi-round
collect-flag-review loop; :mod:`textsieve.service` reviews queues over HTTP;
:mod:`textsieve.cli` ties it all to a command line.
"""

from .corpus import (
    LabeledCorpus,
    SlotSpan,
    Utterance,
    class_key_from_slots,
    corpus_from_utterances,
    dedupe,
    load_corpus,
    make_utterance,
    save_corpus,
    tokenize,
)
from .detection import (
    DetectionConfig,
    EmbeddingResources,
    RankedEntry,
    RankedList,
    borda_merge,
    detect_all_classes,
    flag_top_k,
    rank_baseline,
    rank_by_distance,
)
from .embedding import (
    EmbeddingMatrix,
    FrequencyTable,
    SifConfig,
    WordVectorTable,
    count_frequencies,
    embed_average,
    embed_bow,
    embed_sif,
    load_precomputed,
    load_word_vectors,
    remove_common_component,
    sif_weight,
)
from .errors import (
    CorpusError,
    DetectionError,
    EmbedError,
    EvalError,
    PipelineError,
    StoreError,
    TextsieveError,
)
from .evaluation import (
    BenchmarkResult,
    EvalReport,
    InjectionConfig,
    MetricConfig,
    average_precision,
    coverage,
    diversity,
    inject_errors,
    mean_average_precision,
    pair_distance,
    recall_at_k,
    recall_curve,
    run_benchmark,
)
from .generator import ClassSpec, GeneratorConfig, default_generator_config
from .pipeline import (
    PipelineConfig,
    RoundState,
    SimulationResult,
    Verdict,
    apply_verdicts,
    build_validation_queue,
    close_round,
    collect_paraphrases,
    disambiguate_seed,
    run_simulation,
    select_seeds,
    split_dataset,
    start_round,
)

__version__ = "0.1.0"
