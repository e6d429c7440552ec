"""End-to-end training and evaluation: preprocess a corpus, build or load
an embedding table, train the four classifiers on a shared validation
carve, and package everything as a ModelBundle."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .bundle import DEFAULT_MAX_SEQ_LEN, ModelBundle
from .corpus import EssayRecord, ScoreScale
from .embeddings import (
    EmbeddingTable,
    Word2VecConfig,
    embed_average,
    embed_sequence,
    load_glove,
    train_word2vec,
)
from .ensemble import CombinedEvalReport, evaluate_combined, sort_report_rows
from .errors import EssayScoreError
from .forest import ForestParams, predict_forest_batch, train_forest
from .metrics import qwk
from .neural import TrainConfig, predict_lstm_batch, train_dnn, train_lstm
from .neural.dnn import _forward_batch as _dnn_forward_batch
from .svm import SvmParams, predict_svm_batch, train_ovr
from .textproc import PreprocConfig, build_spell_model, preprocess, tokenize

log = logging.getLogger(__name__)


class PipelineError(EssayScoreError):
    pass


class ScaleMismatch(PipelineError):
    pass


@dataclass(frozen=True)
class TrainSettings:
    """Everything that determines a training run besides the data itself."""

    embedding_source: str = "word2vec"  # "word2vec" or "glove"
    dim: int = 300
    glove_path: str | None = None
    preproc: PreprocConfig = field(default_factory=PreprocConfig)
    word2vec: Word2VecConfig = field(default_factory=Word2VecConfig)
    forest: ForestParams = field(default_factory=ForestParams)
    svm: SvmParams = field(default_factory=SvmParams)
    dnn: TrainConfig = field(default_factory=TrainConfig)
    lstm: TrainConfig = field(default_factory=TrainConfig)
    seed: int = 0
    validation_fraction: float = 0.1
    max_seq_len: int = DEFAULT_MAX_SEQ_LEN

    def __post_init__(self) -> None:
        if self.embedding_source not in ("word2vec", "glove"):
            raise ValueError(f"unknown embedding source {self.embedding_source!r}")
        if self.embedding_source == "glove" and not self.glove_path:
            raise ValueError("embedding_source 'glove' requires glove_path")


def _child_seeds(seed: int, n: int) -> list[int]:
    ss = np.random.SeedSequence(seed % (2**64))
    return [int(s) for s in ss.generate_state(n, dtype=np.uint64)]


def _features(
    records: Sequence[EssayRecord],
    table: EmbeddingTable,
    preproc: PreprocConfig,
    spell_model,
    max_seq_len: int,
) -> tuple[np.ndarray, np.ndarray, list[np.ndarray], np.ndarray]:
    token_seqs = [preprocess(r.text, preproc, spell_model) for r in records]
    avg = np.zeros((len(records), table.dim))
    coverage = np.zeros(len(records))
    sequences = []
    for i, toks in enumerate(token_seqs):
        avg[i], coverage[i] = embed_average(toks, table)
        sequences.append(embed_sequence(toks, table, max_seq_len))
    return avg, coverage, sequences, np.array([r.human_score for r in records])


def build_embedding(
    token_seqs: list[list[str]], settings: TrainSettings, seed: int
) -> EmbeddingTable:
    if settings.embedding_source == "glove":
        table = load_glove(settings.glove_path)
        if table.dim != settings.dim:
            raise PipelineError(
                f"glove file {settings.glove_path!r} has dim {table.dim}, "
                f"but the run requests dim {settings.dim}"
            )
        return table
    cfg = replace(settings.word2vec, dim=settings.dim, seed=seed)
    return train_word2vec(token_seqs, cfg)


def train_bundle(
    records: Sequence[EssayRecord], scale: ScoreScale, settings: TrainSettings
) -> ModelBundle:
    """Train the full four-model bundle on one essay set's records.

    One validation carve (the trailing ``validation_fraction`` of a seeded
    shuffle) supplies every model's validation kappa, so the ensemble
    weights are comparable across models.
    """
    if not records:
        raise PipelineError("no training records")
    bad = [r.essay_id for r in records if r.essay_set != scale.set_id]
    if bad:
        raise ScaleMismatch(
            f"{len(bad)} records belong to a different essay set than the scale"
        )
    seeds = _child_seeds(settings.seed, 5)

    spell_model = None
    if settings.preproc.spell_correct:
        spell_model = build_spell_model(tokenize(r.text) for r in records)

    token_seqs = [preprocess(r.text, settings.preproc, spell_model) for r in records]
    table = build_embedding(token_seqs, settings, seeds[0])

    avg = np.zeros((len(records), table.dim))
    sequences = []
    for i, toks in enumerate(token_seqs):
        avg[i], _ = embed_average(toks, table)
        sequences.append(embed_sequence(toks, table, settings.max_seq_len))
    y = np.array([r.human_score for r in records])

    rng = np.random.default_rng(seeds[1])
    order = rng.permutation(len(records))
    n_val = int(round(settings.validation_fraction * len(records)))
    n_val = min(max(n_val, 1), len(records) - 1)
    fit_idx, val_idx = order[:-n_val], order[-n_val:]
    y_val = y[val_idx]

    log.info("training forest (%d trees)", settings.forest.n_trees)
    forest_params = replace(settings.forest, seed=seeds[2])
    forest = train_forest(avg[fit_idx], y[fit_idx], forest_params)
    kappa_forest = qwk(
        y_val.tolist(), predict_forest_batch(forest, avg[val_idx]).tolist(), scale
    ).kappa

    log.info("training one-vs-rest SVM")
    svm = train_ovr(avg[fit_idx], y[fit_idx], settings.svm)
    kappa_svm = qwk(
        y_val.tolist(), predict_svm_batch(svm, avg[val_idx]).tolist(), scale
    ).kappa

    log.info("training DNN")
    dnn_cfg = replace(settings.dnn, seed=seeds[3])
    dnn = train_dnn(
        avg[fit_idx], y[fit_idx], scale, dnn_cfg, validation=(avg[val_idx], y_val)
    )

    log.info("training LSTM")
    lstm_cfg = replace(settings.lstm, seed=seeds[4])
    lstm = train_lstm(
        [sequences[i] for i in fit_idx],
        y[fit_idx],
        scale,
        lstm_cfg,
        validation=([sequences[i] for i in val_idx], y_val),
    )

    kappas = {
        "forest": float(kappa_forest),
        "svm": float(kappa_svm),
        "dnn": float(dnn.kappa),
        "lstm": float(lstm.kappa),
    }
    log.info("validation kappas: %s", kappas)
    return ModelBundle(
        essay_set=scale.set_id,
        scale=scale,
        embedding=table,
        preproc=settings.preproc,
        spell_model=spell_model,
        forest=forest,
        svm=svm,
        dnn=dnn,
        lstm=lstm,
        kappas=kappas,
        max_seq_len=settings.max_seq_len,
    )


def predict_batch(bundle: ModelBundle, records: Sequence[EssayRecord]) -> dict[str, list[int]]:
    """Per-model predicted scores for many essays, matching score_text's
    bottom-of-scale rule for zero-coverage essays."""
    avg, coverage, sequences, _ = _features(
        records, bundle.embedding, bundle.preproc, bundle.spell_model, bundle.max_seq_len
    )
    low = bundle.scale.min_score
    forest_scores = predict_forest_batch(bundle.forest, avg)
    svm_scores = predict_svm_batch(bundle.svm, avg)
    _, _, p = _dnn_forward_batch(bundle.dnn, avg)
    dnn_scores = np.asarray(bundle.dnn.classes)[np.argmax(p, axis=1)]
    lstm_idx = predict_lstm_batch(bundle.lstm, sequences)
    lstm_scores = np.asarray(bundle.lstm.classes)[lstm_idx]

    empty = coverage == 0.0
    out = {}
    for name, scores in (
        ("forest", forest_scores),
        ("svm", svm_scores),
        ("dnn", dnn_scores),
        ("lstm", lstm_scores),
    ):
        arr = scores.copy()
        arr[empty] = low
        out[name] = [int(v) for v in arr]
    return out


def evaluate_bundle(
    bundle: ModelBundle,
    records: Sequence[EssayRecord],
    embedding_label: str | None = None,
) -> CombinedEvalReport:
    """Per-model and combined QWK of a bundle on labeled essays."""
    bad = [r for r in records if r.essay_set != bundle.essay_set]
    if bad:
        raise ScaleMismatch(
            f"{len(bad)} records belong to essay set {bad[0].essay_set}, "
            f"bundle is for set {bundle.essay_set}"
        )
    for r in records:
        if not bundle.scale.contains(r.human_score):
            raise ScaleMismatch(
                f"essay {r.essay_id} has score {r.human_score}, outside the "
                f"bundle scale [{bundle.scale.min_score}, {bundle.scale.max_score}]"
            )
    per_model = predict_batch(bundle, records)
    gold = [r.human_score for r in records]
    return evaluate_combined(
        per_model,
        bundle.kappas,
        gold,
        bundle.scale,
        embedding=embedding_label or bundle.embedding.source,
        dim=bundle.dim,
    )


def compare_grid(
    train_records: Sequence[EssayRecord],
    test_records: Sequence[EssayRecord],
    scale: ScoreScale,
    settings: TrainSettings,
    dims: Sequence[int] = (100, 200, 300),
    sources: Sequence[str] = ("word2vec", "glove"),
    glove_paths: dict[int, str] | None = None,
) -> list[tuple[str, str, int, float | None]]:
    """Model x embedding x dimension sweep; each cell is a full train+eval.

    GloVe cells with no vector file for that dimension are reported as
    skipped (qwk None) instead of failing the sweep.
    """
    glove_paths = glove_paths or {}
    rows: list[tuple[str, str, int, float | None]] = []
    for source in sources:
        for dim in dims:
            if source == "glove" and dim not in glove_paths:
                log.warning("no glove file for dim %d; rows marked skipped", dim)
                from .ensemble import MODEL_ORDER

                rows.extend((model, source, dim, None) for model in MODEL_ORDER)
                continue
            cell = replace(
                settings,
                embedding_source=source,
                dim=dim,
                glove_path=glove_paths.get(dim, settings.glove_path),
            )
            log.info("compare cell: source=%s dim=%d", source, dim)
            bundle = train_bundle(train_records, scale, cell)
            report = evaluate_bundle(bundle, test_records, embedding_label=source)
            rows.extend(report.rows)
    return sort_report_rows(rows)
