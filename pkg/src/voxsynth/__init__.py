"""voxsynth: build, QC, mix, and evaluate synthetic speech corpora.

The pipeline in one breath: generate themed sentence pairs with an LLM
endpoint, deduplicate, synthesize speech, filter hallucinated clips by
re-transcription length ratio, rebalance the question share, add noise at
sampled SNR, split and mix corpora under speaker/transcript exclusivity,
and score ASR output with bootstrapped WER/CER. Rating collection and the
reliability statistics (ANOVA, rater bootstrap, ICC grids) close the
human-evaluation loop.

Library usage::

    from voxsynth import Normalizer, bootstrap_eval
    report = bootstrap_eval(refs, hyps, Normalizer(), iterations=1000, seed=7)

Model endpoints (LLM/TTS/ASR) are external HTTP services; see
``voxsynth.stubs`` for deterministic local stand-ins.
"""

from .asreval import (
    ErrorInventory,
    EvalReport,
    Normalizer,
    adjudication_export,
    adjudication_import,
    bootstrap_eval,
    cer,
    edit_align,
    error_inventory,
    eval_by_group,
    wer,
)
from .augment import AugmentPolicy, augment_corpus, mix_at_snr, set_level
from .clients import (
    ChatRequest,
    EndpointConfig,
    complete_chat,
    synthesize_speech,
    transcribe,
)
from .corpus import (
    MixSpec,
    SplitSpec,
    Utterance,
    disaggregate,
    import_csv,
    mix,
    read_manifest,
    split,
    total_hours,
    write_manifest,
)
from .dedup import DedupReport, UniquenessCurve, dedup, uniqueness_curve
from .ratings import (
    IccGridResult,
    RatingRecord,
    anova_two_way,
    icc_2k,
    icc_grid,
    interpret_icc,
    load_ratings_csv,
    rater_bootstrap,
    summarize,
)
from .textgen import (
    DEFAULT_THEMES,
    GenerationSpec,
    SentencePair,
    build_prompt,
    generate_corpus,
    parse_generation,
)
from .textnorm import normalize_text
from .ttsqc import (
    FilterPolicy,
    TtsCandidate,
    filter_outliers,
    rebalance_questions,
    score_candidates,
)

__version__ = "0.1.0"

__all__ = [
    "AugmentPolicy",
    "ChatRequest",
    "DEFAULT_THEMES",
    "DedupReport",
    "EndpointConfig",
    "ErrorInventory",
    "EvalReport",
    "FilterPolicy",
    "GenerationSpec",
    "IccGridResult",
    "MixSpec",
    "Normalizer",
    "RatingRecord",
    "SentencePair",
    "SplitSpec",
    "TtsCandidate",
    "UniquenessCurve",
    "Utterance",
    "adjudication_export",
    "adjudication_import",
    "anova_two_way",
    "augment_corpus",
    "bootstrap_eval",
    "build_prompt",
    "cer",
    "complete_chat",
    "dedup",
    "disaggregate",
    "edit_align",
    "error_inventory",
    "eval_by_group",
    "filter_outliers",
    "generate_corpus",
    "icc_2k",
    "icc_grid",
    "import_csv",
    "interpret_icc",
    "load_ratings_csv",
    "mix",
    "mix_at_snr",
    "normalize_text",
    "parse_generation",
    "rater_bootstrap",
    "read_manifest",
    "rebalance_questions",
    "score_candidates",
    "set_level",
    "split",
    "summarize",
    "synthesize_speech",
    "total_hours",
    "transcribe",
    "uniqueness_curve",
    "wer",
    "write_manifest",
]
