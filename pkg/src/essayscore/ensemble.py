"""Kappa-weighted combination of the four model scores into a final score,
plus the evaluation report used by the comparison harness."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .corpus import ScoreScale
from .errors import EssayScoreError
from .metrics import qwk

MODEL_IDS = ("forest", "svm", "dnn", "lstm")

# Row order used by the comparison grid: classic models, then the neural
# ones, then the combination.
MODEL_ORDER = ("forest", "svm", "lstm", "dnn", "combined")
SOURCE_ORDER = ("word2vec", "glove")


class EnsembleError(EssayScoreError):
    pass


class NoPositiveWeights(EnsembleError):
    pass


class ModelScaleMismatch(EnsembleError):
    pass


@dataclass(frozen=True)
class WeightedPrediction:
    model_id: str
    kappa: float
    score: int


@dataclass(frozen=True)
class CombinedPrediction:
    raw: float
    final: int
    inputs: tuple[WeightedPrediction, ...]


def round_half_away_from_zero(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def combine(
    inputs: Sequence[WeightedPrediction], scale: ScoreScale
) -> CombinedPrediction:
    """Weighted average of scores using each model's kappa as its weight.

    Models with non-positive kappa are excluded (a worse-than-chance judge
    should not vote). The weighted value is rounded half away from zero
    and clamped to the scale.
    """
    for p in inputs:
        if not scale.contains(p.score):
            raise ModelScaleMismatch(
                f"model {p.model_id!r} predicted {p.score}, outside "
                f"[{scale.min_score}, {scale.max_score}]"
            )
    included = [p for p in inputs if p.kappa > 0.0]
    if not included:
        raise NoPositiveWeights("no model has a positive kappa weight")
    total = sum(p.kappa for p in included)
    raw = sum(p.kappa * p.score for p in included) / total
    return CombinedPrediction(
        raw=raw,
        final=scale.clamp(round_half_away_from_zero(raw)),
        inputs=tuple(inputs),
    )


@dataclass(frozen=True)
class CombinedEvalReport:
    per_model_qwk: dict[str, float]
    combined_qwk: float
    combined_scores: list[int]
    rows: list[tuple[str, str, int, float]]  # (model, embedding, dim, qwk)


def evaluate_combined(
    per_model_scores: Mapping[str, Sequence[int]],
    kappas: Mapping[str, float],
    gold: Sequence[int],
    scale: ScoreScale,
    embedding: str = "word2vec",
    dim: int = 0,
) -> CombinedEvalReport:
    """Kappa per model plus the kappa of their weighted combination.

    ``per_model_scores`` maps model ids to per-essay predicted scores;
    ``kappas`` supplies the combination weights (validation kappas).
    Emits one (model, embedding, dim, qwk) row per model and one for the
    combination.
    """
    n = len(gold)
    for model_id, scores in per_model_scores.items():
        if len(scores) != n:
            raise ModelScaleMismatch(
                f"model {model_id!r} produced {len(scores)} scores for {n} essays"
            )
    combined_scores = []
    for k in range(n):
        preds = [
            WeightedPrediction(model_id, kappas[model_id], int(scores[k]))
            for model_id, scores in per_model_scores.items()
        ]
        combined_scores.append(combine(preds, scale).final)

    per_model_qwk = {
        model_id: qwk(list(gold), list(scores), scale).kappa
        for model_id, scores in per_model_scores.items()
    }
    combined_qwk = qwk(list(gold), combined_scores, scale).kappa
    rows = [
        (model_id, embedding, dim, per_model_qwk[model_id])
        for model_id in per_model_scores
    ]
    rows.append(("combined", embedding, dim, combined_qwk))
    return CombinedEvalReport(
        per_model_qwk=per_model_qwk,
        combined_qwk=combined_qwk,
        combined_scores=combined_scores,
        rows=rows,
    )


def sort_report_rows(
    rows: Sequence[tuple[str, str, int, object]]
) -> list[tuple[str, str, int, object]]:
    """Grid ordering: model group, then embedding source, then dim descending."""

    def key(row):
        model, source, dim, _ = row
        m = MODEL_ORDER.index(model) if model in MODEL_ORDER else len(MODEL_ORDER)
        s = SOURCE_ORDER.index(source) if source in SOURCE_ORDER else len(SOURCE_ORDER)
        return (m, s, -dim)

    return sorted(rows, key=key)
