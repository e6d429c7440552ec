"""Single-layer LSTM classifier trained by full backpropagation through
time over padded, length-masked batches. The classifier head consumes the
hidden state at each sequence's true final step."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..corpus import ScoreScale
from .base import (
    EmptySequenceBatch,
    ShapeMismatch,
    TrainConfig,
    carve_validation,
    check_classes,
    fit_early_stopping,
    glorot_uniform,
    softmax,
    validation_kappa,
)
from .dnn import DenseLayer
from .optim import make_optimizer, optimizer_step

GATES = ("i", "f", "o", "g")

GRAD_CLIP_NORM = 5.0  # BPTT occasionally spikes; clip the global norm


@dataclass
class LstmWeights:
    wx: dict[str, np.ndarray]  # gate -> hidden x input
    wh: dict[str, np.ndarray]  # gate -> hidden x hidden
    b: dict[str, np.ndarray]  # gate -> hidden
    head: DenseLayer

    def params(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for gate in GATES:
            out[f"wx_{gate}"] = self.wx[gate]
            out[f"wh_{gate}"] = self.wh[gate]
            out[f"b_{gate}"] = self.b[gate]
        out["head_w"] = self.head.weights
        out["head_b"] = self.head.bias
        return out

    def set_params(self, params: dict[str, np.ndarray]) -> None:
        for gate in GATES:
            self.wx[gate] = params[f"wx_{gate}"]
            self.wh[gate] = params[f"wh_{gate}"]
            self.b[gate] = params[f"b_{gate}"]
        self.head.weights = params["head_w"]
        self.head.bias = params["head_b"]


@dataclass
class LstmModel:
    weights: LstmWeights
    classes: list[int]
    input_dim: int
    hidden: int
    kappa: float | None = None


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def init_lstm(
    input_dim: int, hidden: int, classes: list[int], rng: np.random.Generator
) -> LstmModel:
    wx = {g: glorot_uniform(rng, hidden, input_dim) for g in GATES}
    wh = {g: glorot_uniform(rng, hidden, hidden) for g in GATES}
    b = {g: np.zeros(hidden) for g in GATES}
    b["f"] += 1.0  # open forget gates at the start of training
    head = DenseLayer(glorot_uniform(rng, len(classes), hidden), np.zeros(len(classes)))
    return LstmModel(
        weights=LstmWeights(wx=wx, wh=wh, b=b, head=head),
        classes=list(classes),
        input_dim=input_dim,
        hidden=hidden,
    )


def lstm_cell(
    x_t: np.ndarray,
    h_prev: np.ndarray,
    c_prev: np.ndarray,
    weights: LstmWeights,
) -> tuple[np.ndarray, np.ndarray]:
    """One recurrence step: gated update of (h, c). Accepts 1-D or batched input."""
    if x_t.shape[-1] != weights.wx["i"].shape[1]:
        raise ShapeMismatch(
            f"input width {x_t.shape[-1]} != expected {weights.wx['i'].shape[1]}"
        )
    if h_prev.shape != c_prev.shape or h_prev.shape[-1] != weights.wh["i"].shape[1]:
        raise ShapeMismatch("hidden/cell state shapes are inconsistent with the weights")
    z = {
        g: x_t @ weights.wx[g].T + h_prev @ weights.wh[g].T + weights.b[g]
        for g in GATES
    }
    gate_i = _sigmoid(z["i"])
    gate_f = _sigmoid(z["f"])
    gate_o = _sigmoid(z["o"])
    cand = np.tanh(z["g"])
    c = gate_f * c_prev + gate_i * cand
    h = gate_o * np.tanh(c)
    return h, c


def _forward_batch(
    w: LstmWeights,
    X3: np.ndarray,
    mask: np.ndarray,
    keep_caches: bool = False,
) -> tuple[np.ndarray, list]:
    """Run the recurrence over padded input; masked steps carry state through."""
    batch, length, _ = X3.shape
    hidden = w.wh["i"].shape[1]
    h = np.zeros((batch, hidden))
    c = np.zeros((batch, hidden))
    caches = []
    for t in range(length):
        x = X3[:, t]
        m = mask[:, t][:, None]
        zi = x @ w.wx["i"].T + h @ w.wh["i"].T + w.b["i"]
        zf = x @ w.wx["f"].T + h @ w.wh["f"].T + w.b["f"]
        zo = x @ w.wx["o"].T + h @ w.wh["o"].T + w.b["o"]
        zg = x @ w.wx["g"].T + h @ w.wh["g"].T + w.b["g"]
        gi, gf, go = _sigmoid(zi), _sigmoid(zf), _sigmoid(zo)
        gg = np.tanh(zg)
        c_new = gf * c + gi * gg
        tanh_c = np.tanh(c_new)
        h_new = go * tanh_c
        if keep_caches:
            caches.append((x, h, c, gi, gf, go, gg, tanh_c, m))
        h = m * h_new + (1.0 - m) * h
        c = m * c_new + (1.0 - m) * c
    return h, caches


def _backward_batch(
    model: LstmModel, X3: np.ndarray, mask: np.ndarray, y_idx: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean loss and full-BPTT gradients for one padded batch."""
    w = model.weights
    batch = X3.shape[0]
    h_final, caches = _forward_batch(w, X3, mask, keep_caches=True)
    logits = h_final @ w.head.weights.T + w.head.bias
    p = softmax(logits)
    loss = float(-np.log(np.clip(p[np.arange(batch), y_idx], 1e-12, 1.0)).mean())

    d_logits = p.copy()
    d_logits[np.arange(batch), y_idx] -= 1.0
    d_logits /= batch
    grads = {name: np.zeros_like(arr) for name, arr in w.params().items()}
    grads["head_w"] = d_logits.T @ h_final
    grads["head_b"] = d_logits.sum(axis=0)

    dh = d_logits @ w.head.weights
    dc = np.zeros_like(dh)
    for t in range(len(caches) - 1, -1, -1):
        x, h_prev, c_prev, gi, gf, go, gg, tanh_c, m = caches[t]
        dh_new = dh * m
        dh_carry = dh * (1.0 - m)
        dc_carry = dc * (1.0 - m)
        d_go = dh_new * tanh_c
        dc_total = dc * m + dh_new * go * (1.0 - tanh_c**2)
        d_gi = dc_total * gg
        d_gg = dc_total * gi
        d_gf = dc_total * c_prev
        dc = dc_total * gf + dc_carry
        dz = {
            "i": d_gi * gi * (1.0 - gi),
            "f": d_gf * gf * (1.0 - gf),
            "o": d_go * go * (1.0 - go),
            "g": d_gg * (1.0 - gg**2),
        }
        dh = dh_carry
        for gate in GATES:
            grads[f"wx_{gate}"] += dz[gate].T @ x
            grads[f"wh_{gate}"] += dz[gate].T @ h_prev
            grads[f"b_{gate}"] += dz[gate].sum(axis=0)
            dh = dh + dz[gate] @ w.wh[gate]
    return loss, grads


def _clip_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> None:
    total = np.sqrt(sum(float((g**2).sum()) for g in grads.values()))
    if total > max_norm:
        scale = max_norm / total
        for g in grads.values():
            g *= scale


def _pad_batch(
    sequences: list[np.ndarray], input_dim: int
) -> tuple[np.ndarray, np.ndarray]:
    lengths = [s.shape[0] for s in sequences]
    max_len = max(max(lengths), 1)
    X3 = np.zeros((len(sequences), max_len, input_dim))
    mask = np.zeros((len(sequences), max_len))
    for row, seq in enumerate(sequences):
        if seq.shape[0]:
            X3[row, : seq.shape[0]] = seq
            mask[row, : seq.shape[0]] = 1.0
    return X3, mask


def forward_lstm(model: LstmModel, sequence: np.ndarray) -> np.ndarray:
    """Probability vector for one (possibly empty) L x dim sequence."""
    sequence = np.asarray(sequence, dtype=np.float64)
    if sequence.ndim != 2 or (sequence.size and sequence.shape[1] != model.input_dim):
        raise ShapeMismatch(
            f"expected an L x {model.input_dim} sequence, got shape {sequence.shape}"
        )
    if sequence.shape[0] == 0:
        h = np.zeros((1, model.hidden))
    else:
        X3, mask = _pad_batch([sequence], model.input_dim)
        h, _ = _forward_batch(model.weights, X3, mask)
    logits = h @ model.weights.head.weights.T + model.weights.head.bias
    return softmax(logits)[0]


def predict_lstm_batch(model: LstmModel, sequences: list[np.ndarray]) -> np.ndarray:
    """Class indices for many sequences, padded into one masked batch."""
    X3, mask = _pad_batch(sequences, model.input_dim)
    h, _ = _forward_batch(model.weights, X3, mask)
    logits = h @ model.weights.head.weights.T + model.weights.head.bias
    return np.argmax(logits, axis=1)


def _snapshot(model: LstmModel) -> dict:
    return {k: v.copy() for k, v in model.weights.params().items()}


def train_lstm(
    sequences: Sequence[np.ndarray],
    y: Sequence[int],
    scale: ScoreScale,
    config: TrainConfig | None = None,
    validation: tuple[Sequence[np.ndarray], Sequence[int]] | None = None,
) -> LstmModel:
    """BPTT training with the same early-stopping regime as the DNN."""
    if config is None:
        config = TrainConfig()
    seqs = [np.asarray(s, dtype=np.float64) for s in sequences]
    widths = {s.shape[1] for s in seqs if s.size}
    if len(widths) > 1:
        raise ShapeMismatch(f"sequences disagree on input width: {sorted(widths)}")
    if not widths:
        raise EmptySequenceBatch("every training sequence is empty")
    input_dim = widths.pop()
    y_idx = check_classes(y, scale)
    rng = np.random.default_rng(config.seed)

    if validation is None:
        train_sel, val_sel = carve_validation(len(seqs), config.validation_fraction, rng)
        seq_train = [seqs[i] for i in train_sel]
        y_train = y_idx[train_sel]
        seq_val = [seqs[i] for i in val_sel]
        y_val = y_idx[val_sel]
    else:
        seq_train, y_train = seqs, y_idx
        seq_val = [np.asarray(s, dtype=np.float64) for s in validation[0]]
        y_val = check_classes(validation[1], scale)

    model = init_lstm(input_dim, config.hidden, scale.levels(), rng)
    opt = make_optimizer(config.optimizer, lr=config.lr)
    params = model.weights.params()

    def train_step(idx: np.ndarray) -> float:
        batch_seqs = [seq_train[i] for i in idx]
        X3, mask = _pad_batch(batch_seqs, input_dim)
        loss, grads = _backward_batch(model, X3, mask, y_train[idx])
        _clip_global_norm(grads, GRAD_CLIP_NORM)
        optimizer_step(opt, params, grads)
        model.weights.set_params(params)
        return loss

    def validate() -> float:
        pred = predict_lstm_batch(model, seq_val)
        return validation_kappa(y_val + scale.min_score, pred + scale.min_score, scale)

    model.kappa = fit_early_stopping(
        len(seq_train),
        config,
        rng,
        train_step,
        validate,
        lambda: _snapshot(model),
        lambda s: model.weights.set_params({k: v.copy() for k, v in s.items()}),
    )
    return model
