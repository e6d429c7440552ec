"""Shared pieces of the from-scratch neural models: training configuration,
activations, loss, initialization and the early-stopping fit loop."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..corpus import ScoreScale
from ..errors import EssayScoreError
from ..metrics import qwk


class NeuralError(EssayScoreError):
    pass


class ShapeMismatch(NeuralError):
    pass


class DimensionMismatch(ShapeMismatch):
    pass


class ClassOutOfRange(NeuralError):
    pass


class SingleClassInput(NeuralError):
    pass


class EmptySequenceBatch(NeuralError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    hidden: int = 128
    epochs: int = 50
    batch_size: int = 32
    optimizer: str = "rmsprop"
    lr: float = 0.001
    seed: int = 0
    validation_fraction: float = 0.1
    patience: int = 5
    verbose: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in (0, 1)")
        if self.epochs < 1 or self.batch_size < 1 or self.hidden < 1:
            raise ValueError("epochs, batch_size and hidden must be >= 1")

    def to_dict(self) -> dict:
        return {
            "hidden": self.hidden,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "optimizer": self.optimizer,
            "lr": self.lr,
            "seed": self.seed,
            "validation_fraction": self.validation_fraction,
            "patience": self.patience,
        }


def glorot_uniform(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax (works on 1-D and 2-D arrays)."""
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def sparse_ce_loss(p: np.ndarray, true_class: int) -> float:
    """Negative log probability of the integer-coded class, clipped at 1e-12."""
    p = np.asarray(p, dtype=np.float64)
    if not 0 <= true_class < p.shape[-1]:
        raise ClassOutOfRange(
            f"class {true_class} outside 0..{p.shape[-1] - 1}"
        )
    return float(-np.log(np.clip(p[true_class], 1e-12, 1.0)))


def check_classes(y: Sequence[int], scale: ScoreScale) -> np.ndarray:
    """Map scores onto 0-based class indices; require at least two distinct."""
    y_arr = np.asarray(y, dtype=np.int64)
    if y_arr.min() < scale.min_score or y_arr.max() > scale.max_score:
        raise ClassOutOfRange(
            f"labels outside the scale [{scale.min_score}, {scale.max_score}]"
        )
    if np.unique(y_arr).size < 2:
        raise SingleClassInput("training labels contain a single class")
    return y_arr - scale.min_score


def carve_validation(
    n: int, fraction: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Shuffle 0..n-1 and split off the trailing ``fraction`` as validation."""
    order = rng.permutation(n)
    n_val = int(round(fraction * n))
    n_val = min(max(n_val, 1), n - 1)
    return order[:-n_val], order[-n_val:]


def fit_early_stopping(
    n_train: int,
    config: TrainConfig,
    rng: np.random.Generator,
    train_step: Callable[[np.ndarray], float],
    validate: Callable[[], float],
    snapshot: Callable[[], dict],
    restore: Callable[[dict], None],
) -> float:
    """Mini-batch epochs with early stopping on validation kappa.

    Keeps the best-scoring parameter snapshot and restores it at the end,
    so the returned kappa is never below any evaluated epoch's kappa.
    """
    best_kappa = -np.inf
    best_state: dict | None = None
    best_epoch = -1
    for epoch in range(config.epochs):
        order = rng.permutation(n_train)
        losses = []
        for start in range(0, n_train, config.batch_size):
            losses.append(train_step(order[start : start + config.batch_size]))
        val_kappa = validate()
        if config.verbose:
            print(f"{epoch},{np.mean(losses):.6f},{val_kappa:.6f}")
        if val_kappa > best_kappa:
            best_kappa = val_kappa
            best_state = snapshot()
            best_epoch = epoch
        elif epoch - best_epoch >= config.patience:
            break
    if best_state is not None:
        restore(best_state)
    return float(best_kappa)


def validation_kappa(gold: np.ndarray, predicted: np.ndarray, scale: ScoreScale) -> float:
    return qwk(gold.tolist(), predicted.tolist(), scale).kappa
