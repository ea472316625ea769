"""Multilingual low-resource pretraining and evaluation toolkit.

Builds size-matched mono/bilingual corpora, constructs translated QA
datasets with span realignment and similarity filtering, scores model
outputs (QA F1/EM, NLI accuracy, minimal-pair PLL accuracy), and compares
configurations with paired bootstrap significance testing.
"""

from .bootstrap import BootstrapReport, PairedSample, mark_significance, paired_bootstrap
from .corpus import (
    CorpusManifest,
    CorpusSpec,
    OrderPolicy,
    RawDocument,
    SentenceRecord,
    concat_ordered,
    downsample,
    mix_bilingual,
    normalize_text,
    sample_corpus,
    segment_sentences,
)
from .evaluation import (
    EvalResult,
    MinimalPair,
    SentenceScore,
    aggregate_seeds,
    clams_accuracy,
    nli_accuracy,
    normalize_answer,
    pll_pair_decision,
    qa_f1_em,
)
from .experiments import ExperimentPlan, Run, RunRegistry, plan_runs, validate_interchange
from .providers import HashedBowEmbedder, IdentityTranslator, ProviderConfig
from .report import emit_report, infer_baselines, render_figures
from .similarity import combined_similarity, jaro_winkler, levenshtein, realign_span
from .transpose import (
    AlignmentReport,
    Answer,
    FilterDecision,
    QAExample,
    back_translation_filter,
    build_translated_dataset,
    split_dataset,
)

__version__ = "0.1.0"
