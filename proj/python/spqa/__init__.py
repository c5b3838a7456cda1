"""Question-answering passage retrieval: BM25 condensation plus a trained bi-encoder."""

from ._spqa import (
    Config,
    DataError,
    EncoderModel,
    Pipeline,
    QAPair,
    UsageError,
    cmd_eval,
    cmd_index,
    cmd_query,
    cmd_train,
    condense,
    load_jsonl,
    mean_average_precision,
    mnr_loss,
    normalize,
    precision_at_k,
    split_sentences,
    tokenize,
    train_encoder,
)

METHODS = ("bm25", "tfidf-cos", "lm", "dense", "two-stage")

__all__ = [
    "METHODS",
    "Config",
    "DataError",
    "EncoderModel",
    "Pipeline",
    "QAPair",
    "UsageError",
    "cmd_eval",
    "cmd_index",
    "cmd_query",
    "cmd_train",
    "condense",
    "load_jsonl",
    "mean_average_precision",
    "mnr_loss",
    "normalize",
    "precision_at_k",
    "split_sentences",
    "tokenize",
    "train_encoder",
]
