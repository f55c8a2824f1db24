from xcfuzz.learner.tokens import collapse_mnemonic, token_sequence
from xcfuzz.learner.embedding import EMBEDDING_DIM, Embedding, train_embedding
from xcfuzz.learner.vectors import FEATURE_DIM, build_feature_vector
from xcfuzz.learner.voters import (
    VOTE_THRESHOLDS,
    LabelRecord,
    aggregate_labels,
    majority_label,
    read_label_file,
    run_voters,
    voter_labels_for_corpus,
    write_label_file,
)
from xcfuzz.learner.model import (
    EnsembleModel,
    ModelError,
    load_model_document,
    model_document,
    predict_suspicious,
    train_classifier,
)
from xcfuzz.learner.metrics import PRPoint, coverage_rate, evaluate, pr_curve

__all__ = [
    "collapse_mnemonic",
    "token_sequence",
    "EMBEDDING_DIM",
    "Embedding",
    "train_embedding",
    "FEATURE_DIM",
    "build_feature_vector",
    "VOTE_THRESHOLDS",
    "LabelRecord",
    "aggregate_labels",
    "majority_label",
    "read_label_file",
    "run_voters",
    "voter_labels_for_corpus",
    "write_label_file",
    "EnsembleModel",
    "ModelError",
    "load_model_document",
    "model_document",
    "predict_suspicious",
    "train_classifier",
    "PRPoint",
    "coverage_rate",
    "evaluate",
    "pr_curve",
]
