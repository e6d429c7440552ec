"""Automated answer scoring: corpus handling, word embeddings, four
classifiers combined by a kappa-weighted ensemble, QWK evaluation, and a
real-time snapshot-scoring service."""

from .bundle import ModelBundle, ScoreResult, load_bundle, save_bundle, score_text
from .corpus import (
    DatasetSplit,
    EssayRecord,
    ScoreScale,
    derive_scales,
    load_tsv,
    split,
)
from .errors import EssayScoreError
from .metrics import QwkBreakdown, accuracy, quadratic_weights, qwk
from .pipeline import TrainSettings, compare_grid, evaluate_bundle, train_bundle

__version__ = "0.1.0"

__all__ = [
    "DatasetSplit",
    "EssayRecord",
    "EssayScoreError",
    "ModelBundle",
    "QwkBreakdown",
    "ScoreResult",
    "ScoreScale",
    "TrainSettings",
    "accuracy",
    "compare_grid",
    "derive_scales",
    "evaluate_bundle",
    "load_bundle",
    "load_tsv",
    "qwk",
    "quadratic_weights",
    "save_bundle",
    "score_text",
    "split",
    "train_bundle",
]
