"""Deterministic text preprocessing: tokenization, stopword removal,
optional stemming and optional spell correction.

The pipeline order is fixed: tokenize -> spell-correct -> drop stopwords
-> stem. Spell correction runs first so stemming never destroys edit
candidates; stemming and spell correction are off by default.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import EssayScoreError
from .porter import porter_stem

TokenSeq = list[str]

# Words, optional internal apostrophes, and anonymization tags like @PERSON1
# kept as single tokens. Underscore is treated as a separator.
_TOKEN_RE = re.compile(r"@?[^\W_]+(?:'[^\W_]+)*")

_ALPHABET = "abcdefghijklmnopqrstuvwxyz"


class TextprocError(EssayScoreError):
    pass


class EmptyCorpus(TextprocError):
    pass


def tokenize(text: str) -> TokenSeq:
    """Lowercase and split on non-alphanumerics, keeping internal apostrophes."""
    return _TOKEN_RE.findall(text.lower().replace("’", "'"))


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Read a stopword file (one word per line, '#' comments allowed)."""
    if path is None:
        text = (
            resources.files("essayscore").joinpath("data/stopwords.txt").read_text("utf-8")
        )
    else:
        text = Path(path).read_text("utf-8")
    words = set()
    for line in text.splitlines():
        word = line.split("#", 1)[0].strip().lower()
        if word:
            words.add(word)
    return frozenset(words)


_default_stopwords: frozenset[str] | None = None


def default_stopwords() -> frozenset[str]:
    global _default_stopwords
    if _default_stopwords is None:
        _default_stopwords = load_stopwords()
    return _default_stopwords


def remove_stopwords(tokens: Sequence[str], stopwords: frozenset[str]) -> TokenSeq:
    """Drop stopwords, preserving the relative order of survivors."""
    return [t for t in tokens if t not in stopwords]


@dataclass(frozen=True)
class SpellModel:
    """Word-frequency model backing the spell corrector."""

    freq: dict[str, int]
    total: int

    def to_dict(self) -> dict[str, int]:
        return dict(self.freq)

    @classmethod
    def from_dict(cls, freq: dict[str, int]) -> "SpellModel":
        return cls(freq=dict(freq), total=sum(freq.values()))


def build_spell_model(corpus: Iterable[Sequence[str]]) -> SpellModel:
    """Count token occurrences over a corpus of token sequences."""
    counts: Counter[str] = Counter()
    for seq in corpus:
        counts.update(seq)
    if not counts:
        raise EmptyCorpus("cannot build a spell model from an empty corpus")
    return SpellModel(freq=dict(counts), total=sum(counts.values()))


def _edits1(word: str) -> set[str]:
    splits = [(word[:i], word[i:]) for i in range(len(word) + 1)]
    deletes = [a + b[1:] for a, b in splits if b]
    transposes = [a + b[1] + b[0] + b[2:] for a, b in splits if len(b) > 1]
    replaces = [a + c + b[1:] for a, b in splits if b for c in _ALPHABET]
    inserts = [a + c + b for a, b in splits for c in _ALPHABET]
    return set(deletes + transposes + replaces + inserts)


def spell_correct(word: str, model: SpellModel) -> str:
    """Return the most frequent known word within edit distance 2, else ``word``.

    Candidate priority: the word itself if known, then known distance-1
    edits, then known distance-2 edits. Frequency ties break toward the
    lexicographically smaller candidate.
    """
    freq = model.freq
    if word in freq:
        return word
    e1 = _edits1(word)
    known = {w for w in e1 if w in freq}
    if not known:
        known = {e2 for e in e1 for e2 in _edits1(e) if e2 in freq}
    if not known:
        return word
    return max(sorted(known), key=freq.__getitem__)


@dataclass(frozen=True)
class PreprocConfig:
    """Pipeline flags; the defaults match the scoring pipeline used throughout."""

    remove_stopwords: bool = True
    stem: bool = False
    spell_correct: bool = False
    stopword_list: frozenset[str] | None = None  # None -> packaged default

    def stopwords(self) -> frozenset[str]:
        return self.stopword_list if self.stopword_list is not None else default_stopwords()

    def to_dict(self) -> dict:
        return {
            "remove_stopwords": self.remove_stopwords,
            "stem": self.stem,
            "spell_correct": self.spell_correct,
            "stopword_list": sorted(self.stopwords()),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PreprocConfig":
        return cls(
            remove_stopwords=bool(d["remove_stopwords"]),
            stem=bool(d["stem"]),
            spell_correct=bool(d["spell_correct"]),
            stopword_list=frozenset(d["stopword_list"]),
        )


def preprocess(
    text: str, config: PreprocConfig | None = None, spell_model: SpellModel | None = None
) -> TokenSeq:
    """Apply the fixed pipeline: tokenize, spell, stopwords, stem."""
    if config is None:
        config = PreprocConfig()
    tokens = tokenize(text)
    if config.spell_correct:
        if spell_model is None:
            raise ValueError("spell_correct is enabled but no SpellModel was supplied")
        tokens = [spell_correct(t, spell_model) for t in tokens]
    if config.remove_stopwords:
        tokens = remove_stopwords(tokens, config.stopwords())
    if config.stem:
        tokens = [porter_stem(t) for t in tokens]
    return tokens
