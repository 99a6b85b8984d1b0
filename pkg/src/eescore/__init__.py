"""Deterministic evaluation toolkit for event extraction.

Makes preprocessing variants explicit and auditable, standardizes
heterogeneous model outputs onto a single candidate-based output space,
and computes ED/EAE metrics under both gold-trigger and pipeline
protocols.
"""

from .core import (
    NIL_LABEL,
    Anchor,
    Argument,
    Candidate,
    CandidateSet,
    Corpus,
    Document,
    EntityMention,
    EventAnnotation,
    LabelSchema,
    Span,
    span_contains,
    span_equal,
    span_overlaps,
    validate_corpus,
    validate_document,
)
from .errors import (
    ConfigError,
    ContextError,
    ParseError,
    StoreError,
    ToolkitError,
    ValidationError,
)
from .ingest import (
    PARADIGMS,
    ParadigmPredictions,
    load_corpus,
    load_predictions,
    parse_corpus,
    parse_predictions,
    serialize_corpus,
    serialize_predictions,
)
from .metrics import (
    ConfusionCounts,
    EvalReport,
    prf,
    score_eae,
    score_ed,
)
from .pipeline import (
    TriggerContext,
    TriggerStore,
    corpus_fingerprint,
    evaluate,
)
from .standardize import (
    CandidatePolicy,
    StandardizedPredictionSet,
    StandardizeOptions,
    build_candidates,
    decode_bio,
    position_cg,
    project,
    resolve_duplicates,
    standardize_predictions,
)
from .variants import (
    DatasetStats,
    VariantConfig,
    apply_variant,
    compute_stats,
    load_variant_config,
)

__version__ = "0.1.0"
