"""Synthetic graded-essay generator for pipeline validation and demos.

Essays are fixed-length token streams over a small vocabulary of keyword
and filler words; the gold score is a deterministic function of how many
keyword tokens the essay contains, so a correct pipeline can recover it.
"""

from __future__ import annotations

import numpy as np

from .corpus import EssayRecord, ScoreScale

KEYWORDS_PER_LEVEL = 6  # score level = keyword_count // KEYWORDS_PER_LEVEL


def score_from_keyword_count(count: int, n_levels: int, min_score: int) -> int:
    """The deterministic grading rule behind the generator."""
    return min_score + min(count // KEYWORDS_PER_LEVEL, n_levels - 1)


def generate_corpus(
    n_essays: int = 1000,
    seed: int = 0,
    n_keywords: int = 10,
    n_fillers: int = 40,
    essay_length: int = 60,
    n_levels: int = 4,
    min_score: int = 2,
    essay_set: int = 1,
) -> tuple[list[EssayRecord], ScoreScale]:
    """Generate essays whose score follows :func:`score_from_keyword_count`.

    Target levels are sampled uniformly; each level's keyword count is
    drawn from the interior of its bin so the rule is unambiguous.
    """
    max_count = n_levels * KEYWORDS_PER_LEVEL - 2
    if essay_length < max_count:
        raise ValueError(
            f"essay_length must be >= {max_count} to fit the top level's keywords"
        )
    rng = np.random.default_rng(seed)
    keywords = [f"key{i}" for i in range(n_keywords)]
    fillers = [f"fill{i}" for i in range(n_fillers)]
    records = []
    for essay_id in range(1, n_essays + 1):
        level = int(rng.integers(0, n_levels))
        lo = level * KEYWORDS_PER_LEVEL
        hi = lo + KEYWORDS_PER_LEVEL - 2  # stay clear of the next bin
        count = int(rng.integers(lo, hi + 1))
        tokens = [keywords[rng.integers(0, n_keywords)] for _ in range(count)]
        tokens += [fillers[rng.integers(0, n_fillers)] for _ in range(essay_length - count)]
        perm = rng.permutation(len(tokens))
        text = " ".join(tokens[i] for i in perm)
        score = score_from_keyword_count(count, n_levels, min_score)
        records.append(EssayRecord(essay_id, essay_set, text, score))
    scale = ScoreScale(essay_set, min_score, min_score + n_levels - 1)
    return records, scale
