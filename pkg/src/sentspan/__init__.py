"""Joint extraction of target phrases and their sentiment polarity.

The model is an exact latent-variable CRF: every admissible labeling of
a sentence is a path through a tag lattice whose edges are scored by a
recurrent encoder and an additive self-attention module. Training
maximizes the exact marginal likelihood of the gold targets; decoding
is Viterbi over the same lattice.
"""

__version__ = "0.1.0"

from .corpus import (
    AnnotationError,
    Dataset,
    EmbeddingFormatError,
    EmbeddingTable,
    Sentence,
    SpanLabel,
    Vocabulary,
    emit_annotations,
    load_embeddings,
    make_folds,
    parse_annotations,
)
from .estimator import SpanSentimentTagger
from .evaluation import (
    PRF,
    bootstrap_significance,
    exact_prf,
    length_breakdown,
    metrics_report,
    partial_prf,
    subjectivity_prf,
)
from .inference import edge_marginals, log_partition, path_score, viterbi
from .lattice import (
    EmptySpansError,
    Lattice,
    build_clamped,
    build_unconstrained,
    count_paths,
    decode_spans,
    dump_lattice,
)
from .model import ModelConfig, NeuralEdgeScorer, load_checkpoint, save_checkpoint
from .training import (
    LatticeCache,
    TrainConfig,
    TrainReport,
    cross_validate,
    gradient_check,
    nll,
    predict_spans,
    train,
)

__all__ = [
    "AnnotationError",
    "Dataset",
    "EmbeddingFormatError",
    "EmbeddingTable",
    "EmptySpansError",
    "Lattice",
    "LatticeCache",
    "ModelConfig",
    "NeuralEdgeScorer",
    "PRF",
    "Sentence",
    "SpanLabel",
    "SpanSentimentTagger",
    "TrainConfig",
    "TrainReport",
    "Vocabulary",
    "bootstrap_significance",
    "build_clamped",
    "build_unconstrained",
    "count_paths",
    "cross_validate",
    "decode_spans",
    "dump_lattice",
    "edge_marginals",
    "emit_annotations",
    "exact_prf",
    "gradient_check",
    "length_breakdown",
    "load_checkpoint",
    "load_embeddings",
    "log_partition",
    "make_folds",
    "metrics_report",
    "nll",
    "parse_annotations",
    "partial_prf",
    "path_score",
    "predict_spans",
    "save_checkpoint",
    "subjectivity_prf",
    "train",
    "viterbi",
]
