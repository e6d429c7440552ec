"""Word embeddings: a from-scratch skip-gram negative-sampling trainer,
a loader for pre-trained GloVe-style text vectors, document vectorization
by token averaging or as per-token sequences, and a bag-of-words baseline.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import EssayScoreError

log = logging.getLogger(__name__)


class EmbeddingError(EssayScoreError):
    pass


class EmptyVocabulary(EmbeddingError):
    pass


class UnknownWord(EmbeddingError):
    pass


class ParseError(EmbeddingError):
    pass


class InconsistentDimension(EmbeddingError):
    pass


@dataclass
class EmbeddingTable:
    """word -> row lookup over a |V| x dim matrix of real vectors."""

    dim: int
    vocab: dict[str, int]
    vectors: np.ndarray
    source: str  # "word2vec" or "glove"
    epoch_losses: list[float] | None = None

    def __contains__(self, word: str) -> bool:
        return word in self.vocab

    def __len__(self) -> int:
        return len(self.vocab)

    def lookup(self, word: str) -> np.ndarray | None:
        idx = self.vocab.get(word)
        return None if idx is None else self.vectors[idx]

    def words(self) -> list[str]:
        out = [""] * len(self.vocab)
        for w, i in self.vocab.items():
            out[i] = w
        return out


@dataclass(frozen=True)
class Word2VecConfig:
    dim: int = 300
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    initial_lr: float = 0.025
    min_count: int = 2
    seed: int = 0
    subsample: float = 0.0  # frequent-word subsampling threshold; 0 disables

    def __post_init__(self) -> None:
        if self.dim < 1 or self.window < 1 or self.negatives < 1:
            raise ValueError("dim, window and negatives must all be >= 1")
        if self.initial_lr <= 0:
            raise ValueError("initial_lr must be positive")


@dataclass(frozen=True)
class BowVocabulary:
    index: dict[str, int]

    @property
    def size(self) -> int:
        return len(self.index)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def train_word2vec(
    corpus: Sequence[Sequence[str]], config: Word2VecConfig | None = None
) -> EmbeddingTable:
    """Train skip-gram embeddings with negative sampling.

    Negatives are drawn from the unigram distribution raised to 0.75; the
    learning rate decays linearly over all epochs down to a 1e-4 floor
    fraction. Training is single-threaded and bit-deterministic per seed.
    """
    if config is None:
        config = Word2VecConfig()
    counts: Counter[str] = Counter()
    for seq in corpus:
        counts.update(seq)
    kept = sorted(
        (w for w, c in counts.items() if c >= config.min_count),
        key=lambda w: (-counts[w], w),
    )
    if not kept:
        raise EmptyVocabulary(
            f"no words reach min_count={config.min_count} in a corpus of "
            f"{sum(counts.values())} tokens"
        )
    vocab = {w: i for i, w in enumerate(kept)}
    n_vocab = len(kept)
    freq = np.array([counts[w] for w in kept], dtype=np.float64)

    noise = freq**0.75
    noise_cdf = np.cumsum(noise)
    noise_cdf /= noise_cdf[-1]

    keep_prob = None
    if config.subsample > 0:
        rel = freq / freq.sum()
        keep_prob = np.minimum(1.0, np.sqrt(config.subsample / rel) + config.subsample / rel)

    rng = np.random.default_rng(config.seed)
    w_in = (rng.random((n_vocab, config.dim)) - 0.5) / config.dim
    w_out = np.zeros((n_vocab, config.dim))

    sents = [
        np.array([vocab[t] for t in seq if t in vocab], dtype=np.int64)
        for seq in corpus
    ]
    sents = [s for s in sents if s.size > 0]
    total_centers = max(1, sum(s.size for s in sents) * config.epochs)

    window, negatives, lr0 = config.window, config.negatives, config.initial_lr
    processed = 0
    losses: list[float] = []
    for _epoch in range(config.epochs):
        loss_sum = 0.0
        n_pairs = 0
        for sent in sents:
            if keep_prob is not None:
                sent = sent[rng.random(sent.size) < keep_prob[sent]]
            size = sent.size
            for t in range(size):
                lr = lr0 * max(1.0 - processed / total_centers, 1e-4)
                processed += 1
                lo = 0 if t < window else t - window
                ctx = np.concatenate([sent[lo:t], sent[t + 1 : t + 1 + window]])
                k = ctx.size
                if k == 0:
                    continue
                center = sent[t]
                negs = np.searchsorted(noise_cdf, rng.random((k, negatives)))
                rows = np.concatenate([ctx[:, None], negs], axis=1).ravel()
                labels = np.zeros((k, negatives + 1))
                labels[:, 0] = 1.0
                labels = labels.ravel()
                # a sampled negative that collides with its positive target
                # contributes nothing
                mask = np.ones((k, negatives + 1))
                mask[:, 1:] = negs != ctx[:, None]
                mask = mask.ravel()

                v_center = w_in[center]
                out_rows = w_out[rows]
                z = out_rows @ v_center
                sig = _sigmoid(z)
                p = np.clip(np.where(labels == 1.0, sig, 1.0 - sig), 1e-12, None)
                loss_sum += float(-(np.log(p) * mask).sum())
                n_pairs += k

                g = (sig - labels) * mask
                grad_center = g @ out_rows
                np.add.at(w_out, rows, np.outer(-lr * g, v_center))
                w_in[center] -= lr * grad_center
        losses.append(loss_sum / max(n_pairs, 1))
    return EmbeddingTable(
        dim=config.dim, vocab=vocab, vectors=w_in, source="word2vec", epoch_losses=losses
    )


def _parse_vector_line(
    parts: list[str], dim: int, line_no: int
) -> np.ndarray:
    if len(parts) - 1 != dim:
        raise InconsistentDimension(
            f"line {line_no}: expected {dim} values, got {len(parts) - 1}"
        )
    try:
        return np.array([float(x) for x in parts[1:]], dtype=np.float64)
    except ValueError:
        raise ParseError(f"line {line_no}: non-numeric vector component") from None


def load_glove(path: str | Path) -> EmbeddingTable:
    """Load a text file of ``word v1 ... vd`` lines (no header)."""
    vocab: dict[str, int] = {}
    rows: list[np.ndarray] = []
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) < 2:
                raise ParseError(f"line {line_no}: expected a word and its vector")
            word = parts[0]
            if dim is None:
                dim = len(parts) - 1
            vec = _parse_vector_line(parts, dim, line_no)
            if word in vocab:
                log.warning("duplicate word %r at line %d ignored (first wins)", word, line_no)
                continue
            vocab[word] = len(rows)
            rows.append(vec)
    if not rows:
        raise EmptyVocabulary(f"no vectors found in {path}")
    return EmbeddingTable(dim=dim, vocab=vocab, vectors=np.vstack(rows), source="glove")


def save_word2vec_text(table: EmbeddingTable, path: str | Path) -> None:
    """Write ``|V| dim`` header then one ``word v1 ... vd`` line per word."""
    words = table.words()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(words)} {table.dim}\n")
        for i, word in enumerate(words):
            vals = " ".join(f"{x:.9g}" for x in table.vectors[i])
            fh.write(f"{word} {vals}\n")


def load_word2vec_text(path: str | Path) -> EmbeddingTable:
    """Read the text format written by :func:`save_word2vec_text`."""
    vocab: dict[str, int] = {}
    rows: list[np.ndarray] = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ParseError("line 1: expected '<vocab_size> <dim>' header")
        try:
            n_words, dim = int(header[0]), int(header[1])
        except ValueError:
            raise ParseError("line 1: non-integer header fields") from None
        for line_no, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts:
                continue
            word = parts[0]
            vec = _parse_vector_line(parts, dim, line_no)
            if word in vocab:
                log.warning("duplicate word %r at line %d ignored (first wins)", word, line_no)
                continue
            vocab[word] = len(rows)
            rows.append(vec)
    if len(rows) != n_words:
        raise ParseError(f"header declares {n_words} words but file has {len(rows)}")
    return EmbeddingTable(dim=dim, vocab=vocab, vectors=np.vstack(rows), source="word2vec")


def embed_average(
    tokens: Sequence[str], table: EmbeddingTable
) -> tuple[np.ndarray, float]:
    """Mean vector of in-vocabulary tokens plus the in-vocabulary fraction.

    Empty or fully out-of-vocabulary input yields a zero vector with
    coverage 0.
    """
    idx = [table.vocab[t] for t in tokens if t in table.vocab]
    if not idx:
        return np.zeros(table.dim), 0.0
    vec = table.vectors[idx].mean(axis=0)
    return vec, len(idx) / len(tokens)


def embed_sequence(
    tokens: Sequence[str], table: EmbeddingTable, max_len: int
) -> np.ndarray:
    """Per-token vectors for the first ``max_len`` in-vocabulary tokens.

    Out-of-vocabulary tokens are dropped; the result is an L x dim matrix
    with L <= max_len and no padding (batching pads downstream).
    """
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1, got {max_len}")
    idx = [table.vocab[t] for t in tokens if t in table.vocab][:max_len]
    if not idx:
        return np.zeros((0, table.dim))
    return table.vectors[idx].copy()


def bow_vectorize(
    corpus: Sequence[Sequence[str]],
) -> tuple[BowVocabulary, np.ndarray]:
    """Raw term-count matrix with vocabulary in first-seen order."""
    if not corpus:
        raise EmptyVocabulary("cannot build a bag-of-words model from an empty corpus")
    index: dict[str, int] = {}
    for seq in corpus:
        for tok in seq:
            if tok not in index:
                index[tok] = len(index)
    matrix = np.zeros((len(corpus), len(index)), dtype=np.int64)
    for i, seq in enumerate(corpus):
        for tok in seq:
            matrix[i, index[tok]] += 1
    return BowVocabulary(index=index), matrix


def nearest_neighbors(
    table: EmbeddingTable, word: str, k: int
) -> list[tuple[str, float]]:
    """Top-k words by cosine similarity to ``word``, query excluded."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if word not in table.vocab:
        raise UnknownWord(f"word {word!r} is not in the vocabulary")
    qi = table.vocab[word]
    q = table.vectors[qi]
    qn = np.linalg.norm(q)
    norms = np.linalg.norm(table.vectors, axis=1)
    denom = norms * qn
    with np.errstate(invalid="ignore", divide="ignore"):
        sims = np.where(denom > 0, table.vectors @ q / denom, 0.0)
    words = table.words()
    order = sorted(
        (i for i in range(len(words)) if i != qi),
        key=lambda i: (-sims[i], words[i]),
    )
    return [(words[i], float(sims[i])) for i in order[:k]]
