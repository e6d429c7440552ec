"""Five pluggable first-order optimizers operating on named parameter dicts.

Update rules (per parameter tensor, elementwise):

  sgd       w -= lr * g
  adagrad   acc += g^2;                    w -= lr * g / (sqrt(acc) + eps)
  rmsprop   acc = rho*acc + (1-rho)*g^2;   w -= lr * g / (sqrt(acc) + eps)
  adam      m, v with bias correction;     w -= lr * m_hat / (sqrt(v_hat) + eps)
  adadelta  accumulate-gradient / accumulate-update rule with rho, no lr
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .base import ShapeMismatch

KINDS = ("sgd", "adagrad", "adadelta", "adam", "rmsprop")


@dataclass
class OptimizerState:
    kind: str
    lr: float = 0.001
    rho: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    slots: dict[str, dict[str, np.ndarray]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown optimizer {self.kind!r}, expected one of {KINDS}")
        if self.eps <= 0:
            raise ValueError("eps must be positive")


def make_optimizer(kind: str, lr: float = 0.001, **hyper) -> OptimizerState:
    return OptimizerState(kind=kind, lr=lr, **hyper)


def _slot(state: OptimizerState, name: str, shape, keys: tuple[str, ...]) -> dict:
    if name not in state.slots:
        state.slots[name] = {k: np.zeros(shape) for k in keys}
    return state.slots[name]


def optimizer_step(
    state: OptimizerState,
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
) -> dict[str, np.ndarray]:
    """Apply one update in place; returns ``params`` for convenience."""
    state.t += 1
    for name, g in grads.items():
        w = params[name]
        if w.shape != g.shape:
            raise ShapeMismatch(
                f"parameter {name!r} has shape {w.shape} but gradient {g.shape}"
            )
        if state.kind == "sgd":
            w -= state.lr * g
        elif state.kind == "adagrad":
            acc = _slot(state, name, w.shape, ("acc",))["acc"]
            acc += g * g
            w -= state.lr * g / (np.sqrt(acc) + state.eps)
        elif state.kind == "rmsprop":
            acc = _slot(state, name, w.shape, ("acc",))["acc"]
            acc *= state.rho
            acc += (1.0 - state.rho) * g * g
            w -= state.lr * g / (np.sqrt(acc) + state.eps)
        elif state.kind == "adam":
            slot = _slot(state, name, w.shape, ("m", "v"))
            slot["m"] = state.beta1 * slot["m"] + (1.0 - state.beta1) * g
            slot["v"] = state.beta2 * slot["v"] + (1.0 - state.beta2) * g * g
            m_hat = slot["m"] / (1.0 - state.beta1**state.t)
            v_hat = slot["v"] / (1.0 - state.beta2**state.t)
            w -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
        elif state.kind == "adadelta":
            slot = _slot(state, name, w.shape, ("acc_g", "acc_d"))
            slot["acc_g"] = state.rho * slot["acc_g"] + (1.0 - state.rho) * g * g
            delta = -np.sqrt(slot["acc_d"] + state.eps) / np.sqrt(slot["acc_g"] + state.eps) * g
            slot["acc_d"] = state.rho * slot["acc_d"] + (1.0 - state.rho) * delta * delta
            w += delta
    return params
