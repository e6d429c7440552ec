"""Command-line entry point: ingest, train, evaluate, compare, score,
serve, qwk. A JSON config file supplies defaults; flags override it.
"""

from __future__ import annotations

import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import click

from . import corpus
from .bundle import load_bundle, save_bundle, score_text
from .embeddings import Word2VecConfig
from .errors import EssayScoreError
from .forest import ForestParams
from .metrics import accuracy, qwk
from .neural import TrainConfig
from .pipeline import TrainSettings, compare_grid, evaluate_bundle, train_bundle
from .svm import SvmParams
from .textproc import PreprocConfig, load_stopwords

log = logging.getLogger("essayscore")


class CliState:
    def __init__(self, config: dict, seed: int, verbose: bool):
        self.config = config
        self.seed = seed
        self.verbose = verbose


def _fail(message: str) -> "click.ClickException":
    return click.ClickException(message)


@click.group()
@click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON config file; flags override its values.")
@click.option("--seed", type=int, default=None, help="Master seed for all runs.")
@click.option("--verbose", is_flag=True, help="Log progress to stderr.")
@click.pass_context
def main(ctx: click.Context, config: str | None, seed: int | None, verbose: bool) -> None:
    """Automated answer scoring: train, evaluate and serve scoring bundles."""
    cfg = {}
    if config:
        try:
            cfg = json.loads(Path(config).read_text("utf-8"))
        except json.JSONDecodeError as exc:
            raise _fail(f"config file {config} is not valid JSON: {exc}")
    if seed is None:
        seed = int(cfg.get("seed", 0))
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    ctx.obj = CliState(cfg, seed, verbose)


def _preproc_from(cfg: dict, stem: bool | None, spell: bool | None,
                  keep_stopwords: bool | None) -> PreprocConfig:
    section = cfg.get("preprocess", {})
    stopword_file = section.get("stopword_file")
    stopword_list = load_stopwords(stopword_file) if stopword_file else None
    return PreprocConfig(
        remove_stopwords=(
            not keep_stopwords
            if keep_stopwords is not None
            else bool(section.get("remove_stopwords", True))
        ),
        stem=stem if stem is not None else bool(section.get("stem", False)),
        spell_correct=spell if spell is not None else bool(section.get("spell_correct", False)),
        stopword_list=stopword_list,
    )


def _settings_from(state: CliState, *, dim: int | None, source: str | None,
                   glove: str | None, preproc: PreprocConfig) -> TrainSettings:
    cfg = state.config
    emb = cfg.get("embedding", {})
    resolved_dim = dim if dim is not None else int(emb.get("dim", 300))
    resolved_source = source if source is not None else str(emb.get("source", "word2vec"))
    w2v = Word2VecConfig(dim=resolved_dim, **cfg.get("word2vec", {}))
    forest_cfg = dict(cfg.get("forest", {}))
    svm_cfg = dict(cfg.get("svm", {}))
    dnn_cfg = dict(cfg.get("dnn", {}))
    lstm_cfg = dict(cfg.get("lstm", {}))
    return TrainSettings(
        embedding_source=resolved_source,
        dim=resolved_dim,
        glove_path=glove if glove is not None else emb.get("path"),
        preproc=preproc,
        word2vec=w2v,
        forest=ForestParams(**forest_cfg),
        svm=SvmParams(**svm_cfg),
        dnn=TrainConfig(verbose=state.verbose, **dnn_cfg),
        lstm=TrainConfig(verbose=state.verbose, **lstm_cfg),
        seed=state.seed,
        validation_fraction=float(cfg.get("validation_fraction", 0.1)),
        max_seq_len=int(cfg.get("max_seq_len", 300)),
    )


def _load_set(path: str, essay_set: int | None):
    records = corpus.load_dataset(path)
    if essay_set is not None:
        records = [r for r in records if r.essay_set == essay_set]
        if not records:
            raise _fail(f"no records for essay set {essay_set} in {path}")
    scales = corpus.derive_scales(records)
    if essay_set is None:
        if len(scales) != 1:
            raise _fail(
                f"{path} contains essay sets {sorted(scales)}; pick one with --set"
            )
        essay_set = next(iter(scales))
    return records, scales[essay_set]


@main.command()
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True,
              help="TSV file with a header row.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write JSON lines here instead of stdout.")
@click.option("--set", "essay_set", type=int, default=None, help="Keep only this essay set.")
@click.pass_obj
def ingest(state: CliState, data: str, out: str | None, essay_set: int | None) -> None:
    """Convert a TSV corpus to the canonical JSON-lines dump."""
    try:
        records = corpus.load_tsv(data)
    except EssayScoreError as exc:
        raise _fail(str(exc))
    if essay_set is not None:
        records = [r for r in records if r.essay_set == essay_set]
    if out:
        corpus.dump_jsonl(records, out)
        log.info("wrote %d records to %s", len(records), out)
    else:
        for rec in records:
            click.echo(corpus.record_to_json(rec))


@main.command()
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--set", "essay_set", type=int, default=None, help="Essay set to train on.")
@click.option("--dim", type=int, default=None, help="Embedding dimension.")
@click.option("--source", type=click.Choice(["word2vec", "glove"]), default=None)
@click.option("--glove", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Pre-trained vector file (required for --source glove).")
@click.option("--ratio", type=float, default=None, help="Train fraction (default 0.85).")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Bundle path.")
@click.option("--test-out", type=click.Path(dir_okay=False), default=None,
              help="Write the held-out records as JSON lines.")
@click.option("--stem/--no-stem", default=None)
@click.option("--spell-correct/--no-spell-correct", default=None)
@click.option("--keep-stopwords", is_flag=True, default=None)
@click.pass_obj
def train(state: CliState, data: str, essay_set: int | None, dim: int | None,
          source: str | None, glove: str | None, ratio: float | None,
          out: str | None, test_out: str | None, stem: bool | None,
          spell_correct: bool | None, keep_stopwords: bool | None) -> None:
    """Split the data, train all four models and write a scoring bundle."""
    try:
        records, scale = _load_set(data, essay_set)
        ratio = ratio if ratio is not None else float(state.config.get("ratio", 0.85))
        split = corpus.split(records, ratio=ratio, seed=state.seed)
        preproc = _preproc_from(state.config, stem, spell_correct, keep_stopwords)
        settings = _settings_from(state, dim=dim, source=source, glove=glove, preproc=preproc)
        bundle = train_bundle(split.train, scale, settings)
    except EssayScoreError as exc:
        raise _fail(str(exc))
    out = out or f"set{scale.set_id}_{settings.embedding_source}{settings.dim}.bundle"
    save_bundle(bundle, out)
    if test_out:
        corpus.dump_jsonl(split.test, test_out)
    click.echo("model,kappa")
    for model_id, kappa in bundle.kappas.items():
        click.echo(f"{model_id},{kappa:.4f}")
    log.info("bundle written to %s (%d train / %d held-out records)",
             out, len(split.train), len(split.test))


@main.command()
@click.option("--bundle", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--set", "essay_set", type=int, default=None)
@click.pass_obj
def evaluate(state: CliState, bundle: str, data: str, essay_set: int | None) -> None:
    """Per-model and combined test QWK of a bundle, as CSV."""
    try:
        loaded = load_bundle(bundle)
        records, _ = _load_set(data, essay_set if essay_set is not None else loaded.essay_set)
        report = evaluate_bundle(loaded, records)
    except EssayScoreError as exc:
        raise _fail(str(exc))
    click.echo("model,embedding,dim,qwk")
    from .ensemble import sort_report_rows

    for model, embedding, dim, value in sort_report_rows(report.rows):
        click.echo(f"{model},{embedding},{dim},{value:.4f}")


@main.command()
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--set", "essay_set", type=int, default=None)
@click.option("--dims", type=str, default=None, help="Comma-separated sweep, e.g. 100,200,300.")
@click.option("--glove", "glove_specs", type=str, multiple=True,
              help="DIM=PATH mapping for glove rows; repeatable.")
@click.option("--ratio", type=float, default=None)
@click.pass_obj
def compare(state: CliState, data: str, essay_set: int | None, dims: str | None,
            glove_specs: tuple[str, ...], ratio: float | None) -> None:
    """Full model x embedding x dimension grid, one train+eval per cell."""
    cfg_compare = state.config.get("compare", {})
    if dims is not None:
        dim_list = [int(d) for d in dims.split(",") if d.strip()]
    else:
        dim_list = [int(d) for d in cfg_compare.get("dims", [100, 200, 300])]
    glove_paths: dict[int, str] = {
        int(d): str(p) for d, p in cfg_compare.get("glove", {}).items()
    }
    for spec in glove_specs:
        if "=" not in spec:
            raise click.UsageError(f"--glove expects DIM=PATH, got {spec!r}")
        d, p = spec.split("=", 1)
        if not Path(p).is_file():
            raise _fail(f"glove file not found: {p}")
        glove_paths[int(d)] = p

    try:
        records, scale = _load_set(data, essay_set)
        ratio = ratio if ratio is not None else float(state.config.get("ratio", 0.85))
        split = corpus.split(records, ratio=ratio, seed=state.seed)
        preproc = _preproc_from(state.config, None, None, None)
        settings = _settings_from(state, dim=None, source=None, glove=None, preproc=preproc)
        rows = compare_grid(
            split.train, split.test, scale, settings,
            dims=dim_list, glove_paths=glove_paths,
        )
    except EssayScoreError as exc:
        raise _fail(str(exc))
    click.echo("model,embedding,dim,qwk")
    for model, embedding, dim, value in rows:
        cell = "skipped" if value is None else f"{value:.4f}"
        click.echo(f"{model},{embedding},{dim},{cell}")


@main.command()
@click.option("--bundle", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--text-file", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Answer text; stdin when omitted.")
@click.pass_obj
def score(state: CliState, bundle: str, text_file: str | None) -> None:
    """Score one answer; JSON like a service snapshot minus session fields."""
    import time

    try:
        loaded = load_bundle(bundle)
    except EssayScoreError as exc:
        raise _fail(str(exc))
    text = Path(text_file).read_text("utf-8") if text_file else sys.stdin.read()
    started = time.perf_counter()
    result = score_text(loaded, text)
    latency_ms = int(round((time.perf_counter() - started) * 1000))
    click.echo(json.dumps({
        "score": result.score,
        "per_model": result.per_model,
        "raw": result.raw,
        "coverage": result.coverage,
        "latency_ms": latency_ms,
    }))


@main.command()
@click.option("--bundle", "bundle_paths", type=click.Path(exists=True, dir_okay=False),
              required=True, multiple=True, help="Bundle file; repeatable for several sets.")
@click.option("--addr", type=str, default="127.0.0.1:8000", help="host:port to bind.")
@click.option("--cors", type=str, default="*", help="Comma-separated origin allowlist.")
@click.option("--persist", type=click.Path(dir_okay=False), default=None,
              help="Append closed-session trajectories to this JSON-lines file.")
@click.pass_obj
def serve(state: CliState, bundle_paths: tuple[str, ...], addr: str, cors: str,
          persist: str | None) -> None:
    """Run the real-time snapshot-scoring HTTP service."""
    import uvicorn

    from .service import create_app

    bundles = {}
    try:
        for path in bundle_paths:
            loaded = load_bundle(path)
            if loaded.essay_set in bundles:
                raise _fail(f"two bundles for essay set {loaded.essay_set}")
            bundles[loaded.essay_set] = loaded
    except EssayScoreError as exc:
        raise _fail(str(exc))
    host, _, port_str = addr.rpartition(":")
    if not host or not port_str.isdigit():
        raise click.UsageError(f"--addr must be host:port, got {addr!r}")
    app = create_app(
        bundles,
        cors_origins=[o.strip() for o in cors.split(",") if o.strip()],
        persist_path=persist,
    )
    log.info("serving essay sets %s on %s", sorted(bundles), addr)
    try:
        uvicorn.run(app, host=host, port=int(port_str), log_level="warning")
    except OSError as exc:
        raise _fail(f"cannot bind {addr}: {exc}")


@main.command(name="qwk")
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Two-column TSV: gold<TAB>predicted, no header.")
@click.option("--min-score", type=int, default=None, help="Scale floor (default: observed).")
@click.option("--max-score", type=int, default=None, help="Scale ceiling (default: observed).")
@click.pass_obj
def qwk_command(state: CliState, data: str, min_score: int | None,
                max_score: int | None) -> None:
    """Agreement breakdown between two rating columns, as JSON."""
    gold: list[int] = []
    pred: list[int] = []
    for line_no, line in enumerate(Path(data).read_text("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) < 2:
            raise _fail(f"line {line_no}: expected two tab-separated columns")
        try:
            gold.append(int(parts[0]))
            pred.append(int(parts[1]))
        except ValueError:
            raise _fail(f"line {line_no}: non-integer rating")
    if not gold:
        raise _fail("no rating pairs found")
    lo = min_score if min_score is not None else min(min(gold), min(pred))
    hi = max_score if max_score is not None else max(max(gold), max(pred))
    try:
        breakdown = qwk(gold, pred, corpus.ScoreScale(0, lo, hi))
        acc = accuracy(gold, pred)
    except EssayScoreError as exc:
        raise _fail(str(exc))
    click.echo(json.dumps({
        "kappa": breakdown.kappa,
        "accuracy": acc,
        "min_score": lo,
        "max_score": hi,
        "n_levels": hi - lo + 1,
        "n_pairs": len(gold),
        "weights": breakdown.weights.tolist(),
        "observed": breakdown.observed.tolist(),
        "expected": breakdown.expected.tolist(),
    }))


if __name__ == "__main__":
    main()
