"""Multiplex word embeddings: shared center vectors plus small per-relation local vectors."""

__version__ = "0.1.0"

from .corpus import (NegativeSampler, RawTuple, TupleCorpus, encode_corpus, extract_tuples,
                     parse_conllu, read_tuples, sample_negatives)
from .evaluate import eval_sp, eval_ws, read_sp_dataset, read_ws_dataset, spearman
from .model import ModelParams, compose, param_count, plausibility, project_drift, score
from .persistence import export_text, load_checkpoint, save_checkpoint
from .trainer import TrainConfig, TrainingSample, lambda_at, lr_at, sgd_step, train, tuple_loss
from .vocab import RelationRegistry, Vocabulary, build_vocab

__all__ = [
    "NegativeSampler", "RawTuple", "TupleCorpus", "encode_corpus", "extract_tuples", "parse_conllu",
    "read_tuples", "sample_negatives", "eval_sp", "eval_ws", "read_sp_dataset", "read_ws_dataset", "spearman", "ModelParams", "compose", "param_count",
    "plausibility", "project_drift", "score", "export_text", "load_checkpoint", "save_checkpoint",
    "TrainConfig", "TrainingSample", "lambda_at", "lr_at", "sgd_step", "train", "tuple_loss",
    "RelationRegistry", "Vocabulary", "build_vocab",
]
