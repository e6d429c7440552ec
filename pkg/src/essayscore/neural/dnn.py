"""Feed-forward classifier: one ReLU hidden layer into a softmax output,
trained with sparse categorical cross-entropy."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..corpus import ScoreScale
from .base import (
    ClassOutOfRange,
    DimensionMismatch,
    TrainConfig,
    carve_validation,
    check_classes,
    fit_early_stopping,
    glorot_uniform,
    softmax,
    sparse_ce_loss,
    validation_kappa,
)
from .optim import make_optimizer, optimizer_step


@dataclass
class DenseLayer:
    weights: np.ndarray  # out x in
    bias: np.ndarray  # out


@dataclass
class DnnModel:
    hidden: DenseLayer
    output: DenseLayer
    classes: list[int]
    input_dim: int
    kappa: float | None = None

    def params(self) -> dict[str, np.ndarray]:
        return {
            "w1": self.hidden.weights,
            "b1": self.hidden.bias,
            "w2": self.output.weights,
            "b2": self.output.bias,
        }

    def set_params(self, params: dict[str, np.ndarray]) -> None:
        self.hidden.weights = params["w1"]
        self.hidden.bias = params["b1"]
        self.output.weights = params["w2"]
        self.output.bias = params["b2"]


def init_dnn(
    input_dim: int, hidden: int, classes: list[int], rng: np.random.Generator
) -> DnnModel:
    return DnnModel(
        hidden=DenseLayer(glorot_uniform(rng, hidden, input_dim), np.zeros(hidden)),
        output=DenseLayer(glorot_uniform(rng, len(classes), hidden), np.zeros(len(classes))),
        classes=list(classes),
        input_dim=input_dim,
    )


def _forward_batch(model: DnnModel, X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    z1 = X @ model.hidden.weights.T + model.hidden.bias
    h = np.maximum(z1, 0.0)
    logits = h @ model.output.weights.T + model.output.bias
    return z1, h, softmax(logits)


def forward_dnn(model: DnnModel, x: np.ndarray) -> np.ndarray:
    """Probability vector over the model's classes."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.input_dim,):
        raise DimensionMismatch(f"expected input of shape ({model.input_dim},), got {x.shape}")
    _, _, p = _forward_batch(model, x[None, :])
    return p[0]


def _backward_batch(
    model: DnnModel, X: np.ndarray, y_idx: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean loss and gradients of mean sparse CE over the batch."""
    batch = X.shape[0]
    z1, h, p = _forward_batch(model, X)
    loss = float(
        -np.log(np.clip(p[np.arange(batch), y_idx], 1e-12, 1.0)).mean()
    )
    d_logits = p.copy()
    d_logits[np.arange(batch), y_idx] -= 1.0
    d_logits /= batch
    grads = {
        "w2": d_logits.T @ h,
        "b2": d_logits.sum(axis=0),
    }
    dh = d_logits @ model.output.weights
    dz1 = dh * (z1 > 0.0)
    grads["w1"] = dz1.T @ X
    grads["b1"] = dz1.sum(axis=0)
    return loss, grads


def backward_dnn(
    model: DnnModel, x: np.ndarray, true_class: int
) -> dict[str, np.ndarray]:
    """Analytic gradients of sparse CE of ``forward_dnn`` for one sample."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.input_dim,):
        raise DimensionMismatch(f"expected input of shape ({model.input_dim},), got {x.shape}")
    if not 0 <= true_class < len(model.classes):
        raise ClassOutOfRange(
            f"class index {true_class} outside 0..{len(model.classes) - 1}"
        )
    _, grads = _backward_batch(model, x[None, :], np.array([true_class]))
    return grads


def _snapshot(model: DnnModel) -> dict:
    return {k: v.copy() for k, v in model.params().items()}


def train_dnn(
    X: np.ndarray,
    y: Sequence[int],
    scale: ScoreScale,
    config: TrainConfig | None = None,
    validation: tuple[np.ndarray, Sequence[int]] | None = None,
) -> DnnModel:
    """Mini-batch training with early stopping on validation kappa.

    When ``validation`` is not supplied, the trailing
    ``config.validation_fraction`` of the shuffled training set is held
    out. The model's stored kappa is the best validation kappa observed.
    """
    if config is None:
        config = TrainConfig()
    X = np.asarray(X, dtype=np.float64)
    y_idx = check_classes(y, scale)
    rng = np.random.default_rng(config.seed)

    if validation is None:
        train_sel, val_sel = carve_validation(X.shape[0], config.validation_fraction, rng)
        X_train, y_train = X[train_sel], y_idx[train_sel]
        X_val, y_val = X[val_sel], y_idx[val_sel]
    else:
        X_train, y_train = X, y_idx
        X_val = np.asarray(validation[0], dtype=np.float64)
        y_val = check_classes(validation[1], scale)

    model = init_dnn(X.shape[1], config.hidden, scale.levels(), rng)
    opt = make_optimizer(config.optimizer, lr=config.lr)
    params = model.params()

    def train_step(idx: np.ndarray) -> float:
        loss, grads = _backward_batch(model, X_train[idx], y_train[idx])
        optimizer_step(opt, params, grads)
        model.set_params(params)
        return loss

    def validate() -> float:
        _, _, p = _forward_batch(model, X_val)
        pred = np.argmax(p, axis=1)
        return validation_kappa(y_val + scale.min_score, pred + scale.min_score, scale)

    model.kappa = fit_early_stopping(
        X_train.shape[0],
        config,
        rng,
        train_step,
        validate,
        lambda: _snapshot(model),
        lambda s: model.set_params({k: v.copy() for k, v in s.items()}),
    )
    return model
