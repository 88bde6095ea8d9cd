"""Zero-shot audio classification from acoustic embeddings and class metadata.

A linear projection maps acoustic embeddings into the space of
class-metadata embeddings, where a dot product scores how compatible a
recording is with each candidate species.  The projection is trained
with a rank-weighted hinge loss on one set of species and evaluated on
species it never saw, so classes can be recognized from their metadata
alone.

The pieces, bottom up:

``data``        immutable embedding containers
``model``       projection, scoring, loss, gradient, prediction
``metrics``     accuracy, unweighted average recall, macro F1
``metadata``    attribute-table preprocessing into class embeddings
``experiment``  five-fold species splits, SGD training, evaluation
``io``          text file formats for everything above
``cli``         the ``audiozsl`` command
"""

from .data import (
    AcousticEmbedding,
    ClassEmbedding,
    ClassEmbeddingTable,
    stack_acoustic_vectors,
)
from .experiment import (
    EpochRecord,
    ExperimentResult,
    Fold,
    FoldOutcome,
    SplitManifest,
    TrainingConfig,
    TrainResult,
    evaluate_zero_shot,
    make_splits,
    run_experiment,
    select_best,
    train,
)
from .metadata import (
    PreprocessAudit,
    RawAttributeTable,
    SimilarityMatrix,
    concat_tables,
    cosine_similarity_matrix,
    drop_sparse_columns,
    encode_strings,
    impute_missing,
    minmax_normalize,
    preprocess_attribute_table,
)
from .metrics import (
    MetricsReport,
    PerClassMetrics,
    PredictionRecord,
    aggregate_splits,
    compute_metrics,
)
from .model import (
    HingeTerm,
    ProjectionModel,
    batch_loss_and_gradient,
    compatibility,
    hinge_term,
    init_projection,
    predict,
    predict_batch,
    project,
    rank_of_true_class,
    rank_penalty,
    warp_gradient,
    warp_loss,
    warp_loss_and_gradient,
)

__version__ = "0.1.0"

__all__ = [
    "AcousticEmbedding",
    "ClassEmbedding",
    "ClassEmbeddingTable",
    "EpochRecord",
    "ExperimentResult",
    "Fold",
    "FoldOutcome",
    "HingeTerm",
    "MetricsReport",
    "PerClassMetrics",
    "PredictionRecord",
    "PreprocessAudit",
    "ProjectionModel",
    "RawAttributeTable",
    "SimilarityMatrix",
    "SplitManifest",
    "TrainResult",
    "TrainingConfig",
    "aggregate_splits",
    "batch_loss_and_gradient",
    "compatibility",
    "compute_metrics",
    "concat_tables",
    "cosine_similarity_matrix",
    "drop_sparse_columns",
    "encode_strings",
    "evaluate_zero_shot",
    "hinge_term",
    "impute_missing",
    "init_projection",
    "make_splits",
    "minmax_normalize",
    "predict",
    "predict_batch",
    "preprocess_attribute_table",
    "project",
    "rank_of_true_class",
    "rank_penalty",
    "run_experiment",
    "select_best",
    "stack_acoustic_vectors",
    "train",
    "warp_gradient",
    "warp_loss",
    "warp_loss_and_gradient",
]
