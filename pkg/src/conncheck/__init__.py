"""Audit and repair of explicit discourse connectives in dialogue text."""

__version__ = "0.1.0"

from .annotate import (
    Annotation,
    AnnotationSummary,
    agreement_strata,
    krippendorff_alpha,
    relation_distribution,
    summarize,
    summarize_all,
)
from .assess import (
    ConfusionMatrix,
    LabeledPair,
    SignificanceResult,
    confusion,
    consistency,
    consistency_table,
    exact_binomial_test,
    macro_f1,
    paired_bootstrap_test,
    pairs_from_summaries,
)
from .corpus import TagLexicon, Token, Utterance, load_corpus, tag, tokenize
from .errors import DataFormatError, DegenerateDataError
from .extract import (
    ConnectiveInstance,
    extract_all,
    extract_instance,
    mask_instance,
    masked_text,
)
from .postprocess import (
    ComparisonReport,
    FixReport,
    FixResult,
    compare_systems,
    fix_corpus,
    fix_instance,
    fixed_records,
)
from .predict import (
    CLASSES,
    ConnectiveClassifier,
    PairVectorizer,
    Prediction,
    SubprocessPredictor,
    TrainingExample,
    build_training_set,
    evaluate_model,
    featurize,
    train,
)
from .relations import (
    ANCHORS,
    DEFAULT_RELATION_MAP,
    INVENTORY,
    RELATIONS,
    Relation,
    is_consistent,
    relations_of,
    resolve_relation,
)

__all__ = [
    "ANCHORS",
    "Annotation",
    "AnnotationSummary",
    "CLASSES",
    "ComparisonReport",
    "ConfusionMatrix",
    "ConnectiveClassifier",
    "ConnectiveInstance",
    "DEFAULT_RELATION_MAP",
    "DataFormatError",
    "DegenerateDataError",
    "FixReport",
    "FixResult",
    "INVENTORY",
    "LabeledPair",
    "PairVectorizer",
    "Prediction",
    "RELATIONS",
    "Relation",
    "SignificanceResult",
    "SubprocessPredictor",
    "TagLexicon",
    "Token",
    "TrainingExample",
    "Utterance",
    "__version__",
    "agreement_strata",
    "build_training_set",
    "compare_systems",
    "confusion",
    "consistency",
    "consistency_table",
    "evaluate_model",
    "exact_binomial_test",
    "extract_all",
    "extract_instance",
    "featurize",
    "fix_corpus",
    "fix_instance",
    "fixed_records",
    "is_consistent",
    "krippendorff_alpha",
    "load_corpus",
    "macro_f1",
    "mask_instance",
    "masked_text",
    "paired_bootstrap_test",
    "pairs_from_summaries",
    "relation_distribution",
    "relations_of",
    "resolve_relation",
    "summarize",
    "summarize_all",
    "tag",
    "tokenize",
    "train",
]
