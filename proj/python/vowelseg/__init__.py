"""Vowel onset/offset measurement for CVC tokens."""

from ._core import (
    FEATURE_NAMES,
    HOP_S,
    SAMPLE_RATE,
    Error,
    FormatError,
    Model,
    NoAdmissiblePair,
    extract_features,
    layout,
    load_audio,
    synth,
    task_loss,
    train,
    write_wav,
)

__all__ = [
    "FEATURE_NAMES",
    "HOP_S",
    "SAMPLE_RATE",
    "Error",
    "FormatError",
    "Model",
    "NoAdmissiblePair",
    "extract_features",
    "layout",
    "load_audio",
    "synth",
    "task_loss",
    "train",
    "write_wav",
]
