"""Versioned single-file persistence for a trained scoring bundle, and the
text -> score path shared by the CLI and the HTTP service.

File layout: one line of JSON manifest (human-inspectable), followed by the
sections it declares, each as an 8-byte little-endian length prefix plus raw
payload. Arrays are little-endian float64; every section carries a sha256 in
the manifest.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO

import numpy as np

from .corpus import ScoreScale
from .embeddings import EmbeddingTable, embed_average, embed_sequence
from .ensemble import MODEL_IDS, WeightedPrediction, combine
from .errors import EssayScoreError
from .forest import Forest, predict_forest
from .neural import DenseLayer, DnnModel, LstmModel, LstmWeights, predict_nn
from .neural.lstm import GATES
from .svm import SvmBinary, SvmMulti, SvmParams, predict_svm
from .textproc import PreprocConfig, SpellModel, preprocess

FORMAT_VERSION = 1
DEFAULT_MAX_SEQ_LEN = 300


class BundleError(EssayScoreError):
    pass


class BundleVersionUnsupported(BundleError):
    pass


class BundleCorrupt(BundleError):
    pass


@dataclass
class ModelBundle:
    essay_set: int
    scale: ScoreScale
    embedding: EmbeddingTable
    preproc: PreprocConfig
    spell_model: SpellModel | None
    forest: Forest
    svm: SvmMulti
    dnn: DnnModel
    lstm: LstmModel
    kappas: dict[str, float]
    max_seq_len: int = DEFAULT_MAX_SEQ_LEN

    @property
    def dim(self) -> int:
        return self.embedding.dim


@dataclass(frozen=True)
class ScoreResult:
    score: int
    raw: float
    per_model: dict[str, int]
    coverage: float


def score_text(bundle: ModelBundle, text: str) -> ScoreResult:
    """Preprocess, embed, run all four models and combine their scores.

    Text with no in-vocabulary tokens cannot be embedded; it scores the
    bottom of the scale with coverage 0 rather than running the models on
    a zero vector.
    """
    tokens = preprocess(text, bundle.preproc, bundle.spell_model)
    vec, coverage = embed_average(tokens, bundle.embedding)
    if coverage == 0.0:
        low = bundle.scale.min_score
        return ScoreResult(low, float(low), {m: low for m in MODEL_IDS}, 0.0)
    seq = embed_sequence(tokens, bundle.embedding, bundle.max_seq_len)
    per_model = {
        "forest": predict_forest(bundle.forest, vec)[0],
        "svm": predict_svm(bundle.svm, vec)[0],
        "dnn": predict_nn(bundle.dnn, vec)[0],
        "lstm": predict_nn(bundle.lstm, seq)[0],
    }
    preds = [
        WeightedPrediction(m, bundle.kappas[m], per_model[m]) for m in MODEL_IDS
    ]
    combined = combine(preds, bundle.scale)
    return ScoreResult(
        score=combined.final, raw=combined.raw, per_model=per_model, coverage=coverage
    )


# --- serialization -----------------------------------------------------------


class _SectionWriter:
    def __init__(self) -> None:
        self.entries: list[dict] = []
        self.payloads: list[bytes] = []

    def add_array(self, name: str, arr: np.ndarray) -> None:
        data = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        self.entries.append(
            {
                "name": name,
                "kind": "f8",
                "shape": list(arr.shape),
                "sha256": hashlib.sha256(data).hexdigest(),
            }
        )
        self.payloads.append(data)

    def add_json(self, name: str, obj) -> None:
        data = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")
        self.entries.append(
            {"name": name, "kind": "json", "sha256": hashlib.sha256(data).hexdigest()}
        )
        self.payloads.append(data)


def save_bundle(bundle: ModelBundle, path: str | Path) -> None:
    w = _SectionWriter()
    w.add_json("embedding/vocab", bundle.embedding.words())
    w.add_array("embedding/vectors", bundle.embedding.vectors)
    if bundle.spell_model is not None:
        w.add_json("spell_model", bundle.spell_model.to_dict())
    w.add_json("forest", bundle.forest.to_dict())

    svm_meta = {
        "classes": bundle.svm.classes,
        "params": bundle.svm.machines[0].params.to_dict(),
        "machines": [
            {"bias": m.bias, "gamma": m.gamma} for m in bundle.svm.machines
        ],
    }
    w.add_json("svm/meta", svm_meta)
    for c, machine in zip(bundle.svm.classes, bundle.svm.machines):
        w.add_array(f"svm/class_{c}/support_vectors", machine.support_vectors)
        w.add_array(f"svm/class_{c}/coef", machine.coef)

    w.add_json(
        "dnn/meta",
        {"classes": bundle.dnn.classes, "input_dim": bundle.dnn.input_dim},
    )
    w.add_array("dnn/w1", bundle.dnn.hidden.weights)
    w.add_array("dnn/b1", bundle.dnn.hidden.bias)
    w.add_array("dnn/w2", bundle.dnn.output.weights)
    w.add_array("dnn/b2", bundle.dnn.output.bias)

    w.add_json(
        "lstm/meta",
        {
            "classes": bundle.lstm.classes,
            "input_dim": bundle.lstm.input_dim,
            "hidden": bundle.lstm.hidden,
        },
    )
    for gate in GATES:
        w.add_array(f"lstm/wx_{gate}", bundle.lstm.weights.wx[gate])
        w.add_array(f"lstm/wh_{gate}", bundle.lstm.weights.wh[gate])
        w.add_array(f"lstm/b_{gate}", bundle.lstm.weights.b[gate])
    w.add_array("lstm/head_w", bundle.lstm.weights.head.weights)
    w.add_array("lstm/head_b", bundle.lstm.weights.head.bias)

    manifest = {
        "format_version": FORMAT_VERSION,
        "essay_set": bundle.essay_set,
        "scale": {
            "set_id": bundle.scale.set_id,
            "min_score": bundle.scale.min_score,
            "max_score": bundle.scale.max_score,
        },
        "dim": bundle.dim,
        "embedding_source": bundle.embedding.source,
        "kappas": bundle.kappas,
        "preprocessing": bundle.preproc.to_dict(),
        "max_seq_len": bundle.max_seq_len,
        "sections": w.entries,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8"))
        fh.write(b"\n")
        for payload in w.payloads:
            fh.write(struct.pack("<Q", len(payload)))
            fh.write(payload)


def _read_exact(fh: BinaryIO, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise BundleCorrupt(f"truncated bundle while reading {what}")
    return data


def load_bundle(path: str | Path) -> ModelBundle:
    with open(path, "rb") as fh:
        header = fh.readline()
        try:
            manifest = json.loads(header.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            raise BundleCorrupt("bundle manifest is not valid JSON") from None
        version = manifest.get("format_version")
        if version != FORMAT_VERSION:
            raise BundleVersionUnsupported(
                f"bundle format version {version!r} not supported (expected {FORMAT_VERSION})"
            )
        sections: dict[str, object] = {}
        for entry in manifest["sections"]:
            (length,) = struct.unpack("<Q", _read_exact(fh, 8, "section length"))
            payload = _read_exact(fh, length, f"section {entry['name']!r}")
            digest = hashlib.sha256(payload).hexdigest()
            if digest != entry["sha256"]:
                raise BundleCorrupt(f"checksum mismatch in section {entry['name']!r}")
            if entry["kind"] == "f8":
                arr = np.frombuffer(payload, dtype="<f8").reshape(entry["shape"]).copy()
                sections[entry["name"]] = arr
            elif entry["kind"] == "json":
                sections[entry["name"]] = json.loads(payload.decode("utf-8"))
            else:
                raise BundleCorrupt(f"unknown section kind {entry['kind']!r}")

    scale = ScoreScale(
        manifest["scale"]["set_id"],
        manifest["scale"]["min_score"],
        manifest["scale"]["max_score"],
    )
    words = sections["embedding/vocab"]
    vectors = sections["embedding/vectors"]
    embedding = EmbeddingTable(
        dim=int(manifest["dim"]),
        vocab={w: i for i, w in enumerate(words)},
        vectors=vectors,
        source=manifest["embedding_source"],
    )
    spell = sections.get("spell_model")
    spell_model = SpellModel.from_dict(spell) if spell is not None else None

    forest = Forest.from_dict(sections["forest"])

    svm_meta = sections["svm/meta"]
    params = SvmParams.from_dict(svm_meta["params"])
    machines = []
    for c, meta in zip(svm_meta["classes"], svm_meta["machines"]):
        machines.append(
            SvmBinary(
                support_vectors=sections[f"svm/class_{c}/support_vectors"],
                coef=sections[f"svm/class_{c}/coef"],
                bias=float(meta["bias"]),
                gamma=float(meta["gamma"]),
                params=params,
            )
        )
    svm = SvmMulti(machines=machines, classes=[int(c) for c in svm_meta["classes"]])

    dnn_meta = sections["dnn/meta"]
    dnn = DnnModel(
        hidden=DenseLayer(sections["dnn/w1"], sections["dnn/b1"]),
        output=DenseLayer(sections["dnn/w2"], sections["dnn/b2"]),
        classes=[int(c) for c in dnn_meta["classes"]],
        input_dim=int(dnn_meta["input_dim"]),
        kappa=manifest["kappas"].get("dnn"),
    )

    lstm_meta = sections["lstm/meta"]
    lstm = LstmModel(
        weights=LstmWeights(
            wx={g: sections[f"lstm/wx_{g}"] for g in GATES},
            wh={g: sections[f"lstm/wh_{g}"] for g in GATES},
            b={g: sections[f"lstm/b_{g}"] for g in GATES},
            head=DenseLayer(sections["lstm/head_w"], sections["lstm/head_b"]),
        ),
        classes=[int(c) for c in lstm_meta["classes"]],
        input_dim=int(lstm_meta["input_dim"]),
        hidden=int(lstm_meta["hidden"]),
        kappa=manifest["kappas"].get("lstm"),
    )

    return ModelBundle(
        essay_set=int(manifest["essay_set"]),
        scale=scale,
        embedding=embedding,
        preproc=PreprocConfig.from_dict(manifest["preprocessing"]),
        spell_model=spell_model,
        forest=forest,
        svm=svm,
        dnn=dnn,
        lstm=lstm,
        kappas={k: float(v) for k, v in manifest["kappas"].items()},
        max_seq_len=int(manifest["max_seq_len"]),
    )
