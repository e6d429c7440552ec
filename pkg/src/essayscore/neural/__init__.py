"""From-scratch neural classifiers (feed-forward and LSTM) with a five-way
pluggable optimizer suite."""

from __future__ import annotations

import numpy as np

from .base import (
    ClassOutOfRange,
    DimensionMismatch,
    EmptySequenceBatch,
    NeuralError,
    ShapeMismatch,
    SingleClassInput,
    TrainConfig,
    softmax,
    sparse_ce_loss,
)
from .dnn import DenseLayer, DnnModel, backward_dnn, forward_dnn, init_dnn, train_dnn
from .lstm import (
    LstmModel,
    LstmWeights,
    forward_lstm,
    init_lstm,
    lstm_cell,
    predict_lstm_batch,
    train_lstm,
)
from .optim import KINDS as OPTIMIZER_KINDS
from .optim import OptimizerState, make_optimizer, optimizer_step


def predict_nn(model: DnnModel | LstmModel, inputs: np.ndarray) -> tuple[int, np.ndarray]:
    """Predicted score and class probabilities; ties go to the lower score."""
    if isinstance(model, DnnModel):
        p = forward_dnn(model, inputs)
    elif isinstance(model, LstmModel):
        p = forward_lstm(model, inputs)
    else:
        raise TypeError(f"unsupported model type {type(model).__name__}")
    return model.classes[int(np.argmax(p))], p


__all__ = [
    "ClassOutOfRange",
    "DenseLayer",
    "DimensionMismatch",
    "DnnModel",
    "EmptySequenceBatch",
    "LstmModel",
    "LstmWeights",
    "NeuralError",
    "OPTIMIZER_KINDS",
    "OptimizerState",
    "ShapeMismatch",
    "SingleClassInput",
    "TrainConfig",
    "backward_dnn",
    "forward_dnn",
    "forward_lstm",
    "init_dnn",
    "init_lstm",
    "lstm_cell",
    "make_optimizer",
    "optimizer_step",
    "predict_lstm_batch",
    "predict_nn",
    "softmax",
    "sparse_ce_loss",
    "train_dnn",
    "train_lstm",
]
