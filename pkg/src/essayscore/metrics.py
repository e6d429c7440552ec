"""Rater-agreement metrics: quadratic weighted kappa and exact-match accuracy.

Kappa is computed as ``1 - sum(W*O) / sum(W*E)`` where W penalizes
disagreements by squared score distance normalized to [0, 1], O is the
observed joint histogram of the two rating vectors, and E is the outer
product of the marginal histograms scaled so its total equals the number
of rated pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import ScoreScale
from .errors import EssayScoreError


class MetricError(EssayScoreError):
    pass


class LengthMismatch(MetricError):
    pass


class ScaleMismatch(MetricError):
    pass


class DegenerateScale(MetricError):
    pass


class DegenerateAgreement(MetricError):
    """sum(W*E) = 0 with disagreement present; unreachable for valid inputs."""


@dataclass(frozen=True)
class QwkBreakdown:
    """Weight, observed and expected matrices behind a single kappa value."""

    weights: np.ndarray
    observed: np.ndarray
    expected: np.ndarray
    kappa: float


def quadratic_weights(n_levels: int) -> np.ndarray:
    """n x n matrix with W[i][j] = (i - j)^2 / (n_levels - 1)^2."""
    if n_levels < 2:
        raise DegenerateScale(f"need at least 2 score levels, got {n_levels}")
    idx = np.arange(n_levels, dtype=np.float64)
    return (idx[:, None] - idx[None, :]) ** 2 / (n_levels - 1) ** 2


def _as_indices(ratings: Sequence[int], scale: ScoreScale, name: str) -> np.ndarray:
    arr = np.asarray(ratings, dtype=np.int64)
    if arr.ndim != 1 or arr.size < 1:
        raise LengthMismatch(f"{name} must be a non-empty 1-D rating vector")
    if arr.min() < scale.min_score or arr.max() > scale.max_score:
        raise ScaleMismatch(
            f"{name} contains ratings outside [{scale.min_score}, {scale.max_score}]"
        )
    return arr - scale.min_score


def qwk(a: Sequence[int], b: Sequence[int], scale: ScoreScale) -> QwkBreakdown:
    """Quadratic weighted kappa between two rating vectors on one scale."""
    ai = _as_indices(a, scale, "a")
    bi = _as_indices(b, scale, "b")
    if ai.size != bi.size:
        raise LengthMismatch(f"rating vectors differ in length: {ai.size} vs {bi.size}")

    n = scale.n_levels
    weights = quadratic_weights(n)
    observed = np.zeros((n, n), dtype=np.float64)
    np.add.at(observed, (ai, bi), 1.0)
    hist_a = np.bincount(ai, minlength=n).astype(np.float64)
    hist_b = np.bincount(bi, minlength=n).astype(np.float64)
    # Outer product of marginals, scaled so sum(E) == sum(O) == number of pairs.
    expected = np.outer(hist_a, hist_b) / ai.size

    num = float((weights * observed).sum())
    den = float((weights * expected).sum())
    if den == 0.0:
        if num == 0.0:
            kappa = 1.0  # both raters constant and equal: defined as full agreement
        else:
            raise DegenerateAgreement(
                "expected disagreement is zero but observed disagreement is not"
            )
    else:
        kappa = 1.0 - num / den
    return QwkBreakdown(weights=weights, observed=observed, expected=expected, kappa=kappa)


def accuracy(a: Sequence[int], b: Sequence[int]) -> float:
    """Exact-match fraction between two equal-length rating vectors."""
    arr_a = np.asarray(a)
    arr_b = np.asarray(b)
    if arr_a.shape != arr_b.shape or arr_a.size < 1:
        raise LengthMismatch(
            f"rating vectors differ in shape: {arr_a.shape} vs {arr_b.shape}"
        )
    return float(np.mean(arr_a == arr_b))
