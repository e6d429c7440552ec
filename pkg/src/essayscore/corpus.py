"""Graded-essay corpus handling: TSV ingestion, per-set score scales, deterministic splits.

Input files are tab-separated with a header row (quoted text fields allowed),
one essay per row. The canonical dump format is JSON lines with the fields
``essay_id``, ``essay_set``, ``text`` and ``score``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import EssayScoreError

# Column names used by the public release of the dataset. Only these four are
# consumed; individual rater columns are ignored (the resolved score is the
# training target).
DEFAULT_COLUMN_NAMES = {
    "essay_id": "essay_id",
    "essay_set": "essay_set",
    "text": "essay",
    "score": "domain1_score",
}

FIELDS = ("essay_id", "essay_set", "text", "score")


class CorpusError(EssayScoreError):
    pass


class MissingColumn(CorpusError):
    pass


class MalformedRow(CorpusError):
    pass


class NonIntegerScore(CorpusError):
    pass


class EmptyText(CorpusError):
    pass


class EmptySet(CorpusError):
    pass


class TooFewRecords(CorpusError):
    pass


@dataclass(frozen=True)
class EssayRecord:
    """One graded answer: id, prompt set, raw text, resolved human score."""

    essay_id: int
    essay_set: int
    text: str
    human_score: int


@dataclass(frozen=True)
class ScoreScale:
    """Integer score range of one essay set (inclusive on both ends)."""

    set_id: int
    min_score: int
    max_score: int

    def __post_init__(self) -> None:
        if self.max_score < self.min_score:
            raise ValueError(
                f"max_score {self.max_score} < min_score {self.min_score}"
            )

    @property
    def n_levels(self) -> int:
        return self.max_score - self.min_score + 1

    def contains(self, score: int) -> bool:
        return self.min_score <= score <= self.max_score

    def levels(self) -> list[int]:
        return list(range(self.min_score, self.max_score + 1))

    def clamp(self, score: int) -> int:
        return max(self.min_score, min(self.max_score, score))


@dataclass(frozen=True)
class DatasetSplit:
    """Disjoint train/test partition, reproducible from (records, ratio, seed)."""

    train: list[EssayRecord]
    test: list[EssayRecord]
    seed: int
    ratio: float


def _decode(raw: bytes) -> str:
    # The public data file carries Windows-1252 bytes; transcode on load and
    # fall back to replacement characters rather than failing.
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError:
        return raw.decode("cp1252", errors="replace")


def _resolve_columns(
    header: Sequence[str], column_map: Mapping[str, int] | None
) -> dict[str, int]:
    if column_map is not None:
        missing = [f for f in FIELDS if f not in column_map]
        if missing:
            raise MissingColumn(f"column_map lacks fields: {', '.join(missing)}")
        for field, idx in column_map.items():
            if not 0 <= idx < len(header):
                raise MissingColumn(
                    f"column index {idx} for field {field!r} out of range "
                    f"(header has {len(header)} columns)"
                )
        return {f: column_map[f] for f in FIELDS}
    resolved = {}
    for field in FIELDS:
        name = DEFAULT_COLUMN_NAMES[field]
        if name not in header:
            raise MissingColumn(f"header is missing column {name!r}")
        resolved[field] = header.index(name)
    return resolved


def load_tsv(
    path: str | Path, column_map: Mapping[str, int] | None = None
) -> list[EssayRecord]:
    """Read graded essays from a TSV file with a header row.

    ``column_map`` maps the field names ``essay_id``, ``essay_set``, ``text``
    and ``score`` to 0-based column indices; by default the indices are
    resolved from the public header names. Raises with the offending
    1-based line number on malformed rows.
    """
    text = _decode(Path(path).read_bytes())
    reader = csv.reader(io.StringIO(text), delimiter="\t", quotechar='"')
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedRow("file is empty, expected a header row") from None
    cols = _resolve_columns(header, column_map)
    max_idx = max(cols.values())

    records = []
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) <= max_idx:
            raise MalformedRow(
                f"line {line_no}: expected at least {max_idx + 1} columns, got {len(row)}"
            )
        try:
            essay_id = int(row[cols["essay_id"]])
            essay_set = int(row[cols["essay_set"]])
        except ValueError:
            raise MalformedRow(
                f"line {line_no}: non-integer essay_id or essay_set"
            ) from None
        try:
            score = int(row[cols["score"]])
        except ValueError:
            raise NonIntegerScore(
                f"line {line_no}: score {row[cols['score']]!r} is not an integer"
            ) from None
        body = row[cols["text"]]
        if not body.strip():
            raise EmptyText(f"line {line_no}: empty essay text")
        records.append(EssayRecord(essay_id, essay_set, body, score))
    return records


def derive_scales(records: Iterable[EssayRecord]) -> dict[int, ScoreScale]:
    """Observed min/max score per essay set present in ``records``."""
    lo: dict[int, int] = {}
    hi: dict[int, int] = {}
    for rec in records:
        s = rec.human_score
        lo[rec.essay_set] = min(lo.get(rec.essay_set, s), s)
        hi[rec.essay_set] = max(hi.get(rec.essay_set, s), s)
    if not lo:
        raise EmptySet("no records to derive scales from")
    return {
        set_id: ScoreScale(set_id, lo[set_id], hi[set_id])
        for set_id in sorted(lo)
    }


def split(
    records: Sequence[EssayRecord], ratio: float = 0.85, seed: int = 0
) -> DatasetSplit:
    """Seeded shuffle-split stratified by essay set.

    The global train size is ``round(ratio * N)`` exactly (clamped so neither
    side is empty); per-set sizes are allocated by largest remainder, so each
    set stays within one record of its proportional share.
    """
    n = len(records)
    if n < 2:
        raise TooFewRecords(f"need at least 2 records to split, got {n}")
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")

    by_set: dict[int, list[EssayRecord]] = {}
    for rec in records:
        by_set.setdefault(rec.essay_set, []).append(rec)
    set_ids = sorted(by_set)

    target = int(round(ratio * n))
    target = min(max(target, 1), n - 1)

    base = {s: int(np.floor(ratio * len(by_set[s]))) for s in set_ids}
    fractions = sorted(
        set_ids,
        key=lambda s: (-(ratio * len(by_set[s]) - base[s]), s),
    )
    remainder = target - sum(base.values())
    take = dict(base)
    for s in fractions[:remainder]:
        take[s] += 1
    # Rounding can leave the guard-adjusted target short/over by one; fix up
    # deterministically on the largest set with room.
    while sum(take.values()) < target:
        s = max(set_ids, key=lambda s: (len(by_set[s]) - take[s], -s))
        take[s] += 1
    while sum(take.values()) > target:
        s = max(set_ids, key=lambda s: (take[s], -s))
        take[s] -= 1

    rng = np.random.default_rng(seed)
    train: list[EssayRecord] = []
    test: list[EssayRecord] = []
    for s in set_ids:
        group = by_set[s]
        order = rng.permutation(len(group))
        k = take[s]
        train.extend(group[i] for i in order[:k])
        test.extend(group[i] for i in order[k:])
    return DatasetSplit(train=train, test=test, seed=seed, ratio=ratio)


def dump_jsonl(records: Iterable[EssayRecord], path: str | Path) -> None:
    """Write the canonical JSON-lines dump."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(record_to_json(rec) + "\n")


def record_to_json(rec: EssayRecord) -> str:
    return json.dumps(
        {
            "essay_id": rec.essay_id,
            "essay_set": rec.essay_set,
            "text": rec.text,
            "score": rec.human_score,
        },
        ensure_ascii=False,
    )


def load_jsonl(path: str | Path) -> list[EssayRecord]:
    """Read records from a canonical JSON-lines dump."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                records.append(
                    EssayRecord(
                        int(obj["essay_id"]),
                        int(obj["essay_set"]),
                        str(obj["text"]),
                        int(obj["score"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                raise MalformedRow(f"line {line_no}: invalid JSON record") from None
    return records


def load_dataset(path: str | Path) -> list[EssayRecord]:
    """Load records from either a TSV file or a JSON-lines dump (by extension)."""
    p = Path(path)
    if p.suffix.lower() in (".jsonl", ".ndjson", ".json"):
        return load_jsonl(p)
    return load_tsv(p)
