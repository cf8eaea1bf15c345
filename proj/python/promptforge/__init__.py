"""Gradient-guided discrete prompt search for a frozen seq2seq recommender."""

from ._core import (
    EOS,
    PAD,
    ArgumentError,
    Error,
    FormatError,
    IoError,
    Model,
    ParseError,
    ValidationError,
    ablate,
    bleu4,
    candidate_tokens,
    evaluate,
    hit_rate,
    ndcg,
    rouge,
    run_dir,
    search,
    synth,
    train_backbone,
)

__all__ = [
    "EOS",
    "PAD",
    "ArgumentError",
    "Error",
    "FormatError",
    "IoError",
    "Model",
    "ParseError",
    "ValidationError",
    "ablate",
    "bleu4",
    "candidate_tokens",
    "evaluate",
    "hit_rate",
    "ndcg",
    "rouge",
    "run_dir",
    "search",
    "synth",
    "train_backbone",
]
