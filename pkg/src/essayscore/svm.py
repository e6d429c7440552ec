"""RBF-kernel support vector machine trained by a deterministic simplified
SMO solver, extended one-vs-rest for multi-level scores.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EssayScoreError

# Minimum multiplier change for an SMO subproblem to count as progress.
_MIN_ALPHA_STEP = 1e-7


class SvmError(EssayScoreError):
    pass


class DimensionMismatch(SvmError):
    pass


class SingleClassInput(SvmError):
    pass


@dataclass(frozen=True)
class SvmParams:
    C: float = 10.0
    gamma: float | None = None  # None -> 1/d resolved at training time
    tol: float = 1e-3
    max_passes: int = 20

    def __post_init__(self) -> None:
        if self.C <= 0 or self.tol <= 0 or self.max_passes < 1:
            raise ValueError("C, tol and max_passes must all be positive")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be positive")

    def to_dict(self) -> dict:
        return {"C": self.C, "gamma": self.gamma, "tol": self.tol, "max_passes": self.max_passes}

    @classmethod
    def from_dict(cls, d: dict) -> "SvmParams":
        return cls(**d)


@dataclass
class SvmBinary:
    """Support vectors with coefficients alpha_i * y_i and bias."""

    support_vectors: np.ndarray  # k x d
    coef: np.ndarray  # k
    bias: float
    gamma: float
    params: SvmParams


@dataclass
class SvmMulti:
    machines: list[SvmBinary]  # aligned with classes
    classes: list[int]


def rbf_kernel(x: np.ndarray, z: np.ndarray, gamma: float) -> float:
    """exp(-gamma * squared euclidean distance)."""
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.shape != z.shape:
        raise DimensionMismatch(f"vectors differ in shape: {x.shape} vs {z.shape}")
    d = x - z
    return float(np.exp(-gamma * (d @ d)))


def _gram(X: np.ndarray, gamma: float) -> np.ndarray:
    sq = np.einsum("ij,ij->i", X, X)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(d2, 0.0, out=d2)
    K = np.exp(-gamma * d2)
    K = (K + K.T) / 2.0  # force bitwise symmetry
    np.fill_diagonal(K, 1.0)
    return K


class _SmoState:
    def __init__(self, K: np.ndarray, y: np.ndarray, C: float):
        self.K = K
        self.y = y.astype(np.float64)
        self.C = C
        self.alpha = np.zeros(y.size)
        self.b = 0.0
        self.errors = -self.y.copy()  # f(x) = 0 initially, E = f - y

    def try_pair(self, i: int, j: int) -> bool:
        """Analytically solve the two-multiplier subproblem; True on progress."""
        if i == j:
            return False
        K, y, alpha, C = self.K, self.y, self.alpha, self.C
        ai_old, aj_old = alpha[i], alpha[j]
        if y[i] != y[j]:
            low = max(0.0, aj_old - ai_old)
            high = min(C, C + aj_old - ai_old)
        else:
            low = max(0.0, ai_old + aj_old - C)
            high = min(C, ai_old + aj_old)
        if low >= high:
            return False
        eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
        if eta >= 0.0:
            return False
        aj = aj_old - y[j] * (self.errors[i] - self.errors[j]) / eta
        aj = min(max(aj, low), high)
        if abs(aj - aj_old) < _MIN_ALPHA_STEP * (aj + aj_old + _MIN_ALPHA_STEP):
            return False
        ai = ai_old + y[i] * y[j] * (aj_old - aj)

        d_i = y[i] * (ai - ai_old)
        d_j = y[j] * (aj - aj_old)
        b1 = self.b - self.errors[i] - d_i * K[i, i] - d_j * K[i, j]
        b2 = self.b - self.errors[j] - d_i * K[i, j] - d_j * K[j, j]
        if 0.0 < ai < C:
            b_new = b1
        elif 0.0 < aj < C:
            b_new = b2
        else:
            b_new = (b1 + b2) / 2.0
        self.errors += d_i * K[i] + d_j * K[j] + (b_new - self.b)
        alpha[i], alpha[j] = ai, aj
        self.b = b_new
        return True


def train_binary_smo(
    X: np.ndarray, y: Sequence[int], params: SvmParams | None = None
) -> SvmBinary:
    """Train a binary RBF machine with labels in {-1, +1}.

    Scans examples in fixed order, picks the partner with the largest
    error gap first (falling back to a forward scan), and stops early the
    first time a full pass changes nothing; ``max_passes`` caps the total
    number of passes. Fully deterministic.
    """
    if params is None:
        params = SvmParams()
    X = np.asarray(X, dtype=np.float64)
    y_arr = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y_arr.shape[0]:
        raise DimensionMismatch(f"X has shape {X.shape} but y has {y_arr.shape[0]} labels")
    if set(np.unique(y_arr)) != {-1, 1}:
        raise SingleClassInput("binary training requires both labels -1 and +1")

    m = X.shape[0]
    gamma = params.gamma if params.gamma is not None else 1.0 / X.shape[1]
    state = _SmoState(_gram(X, gamma), y_arr, params.C)
    tol, C = params.tol, params.C

    for _pass in range(params.max_passes):
        changed = 0
        for i in range(m):
            r = state.errors[i] * state.y[i]
            if not ((r < -tol and state.alpha[i] < C) or (r > tol and state.alpha[i] > 0)):
                continue
            gaps = np.abs(state.errors - state.errors[i])
            gaps[i] = -1.0
            j = int(np.argmax(gaps))
            if state.try_pair(i, j):
                changed += 1
                continue
            for step in range(1, m):
                if state.try_pair(i, (i + step) % m):
                    changed += 1
                    break
        if changed == 0:
            break

    support = state.alpha > 1e-12
    if not support.any():
        # degenerate but possible on conflicting duplicates; keep a bias-only machine
        return SvmBinary(
            support_vectors=np.zeros((0, X.shape[1])),
            coef=np.zeros(0),
            bias=state.b,
            gamma=gamma,
            params=params,
        )
    return SvmBinary(
        support_vectors=X[support].copy(),
        coef=(state.alpha * state.y)[support],
        bias=state.b,
        gamma=gamma,
        params=params,
    )


def decision_function(machine: SvmBinary, x: np.ndarray) -> float:
    """f(x) = sum_i coef_i * k(s_i, x) + b."""
    x = np.asarray(x, dtype=np.float64)
    if machine.support_vectors.shape[0] == 0:
        return machine.bias
    if x.shape != (machine.support_vectors.shape[1],):
        raise DimensionMismatch(
            f"expected a vector of {machine.support_vectors.shape[1]} features, got {x.shape}"
        )
    diff = machine.support_vectors - x
    k = np.exp(-machine.gamma * np.einsum("ij,ij->i", diff, diff))
    return float(machine.coef @ k + machine.bias)


def train_ovr(
    X: np.ndarray, y: Sequence[int], params: SvmParams | None = None
) -> SvmMulti:
    """One binary machine per class (+1 = that class, -1 = the rest)."""
    y_arr = np.asarray(y, dtype=np.int64)
    classes = sorted(set(int(v) for v in y_arr))
    if len(classes) < 2:
        raise SingleClassInput(f"need at least 2 classes, got {classes}")
    machines = []
    for c in classes:
        y_bin = np.where(y_arr == c, 1, -1)
        machines.append(train_binary_smo(X, y_bin, params))
    return SvmMulti(machines=machines, classes=classes)


def predict_svm(model: SvmMulti, x: np.ndarray) -> tuple[int, dict[int, float]]:
    """argmax decision value over classes; ties go to the lower class."""
    values = {
        c: decision_function(machine, x)
        for c, machine in zip(model.classes, model.machines)
    }
    best = model.classes[0]
    for c in model.classes[1:]:
        if values[c] > values[best]:
            best = c
    return best, values


def predict_svm_batch(model: SvmMulti, X: np.ndarray) -> np.ndarray:
    """Vectorized argmax predictions for an m x d matrix."""
    X = np.asarray(X, dtype=np.float64)
    scores = np.empty((X.shape[0], len(model.classes)))
    for col, machine in enumerate(model.machines):
        if machine.support_vectors.shape[0] == 0:
            scores[:, col] = machine.bias
            continue
        sq_x = np.einsum("ij,ij->i", X, X)
        sq_s = np.einsum("ij,ij->i", machine.support_vectors, machine.support_vectors)
        d2 = sq_x[:, None] + sq_s[None, :] - 2.0 * (X @ machine.support_vectors.T)
        np.maximum(d2, 0.0, out=d2)
        scores[:, col] = np.exp(-machine.gamma * d2) @ machine.coef + machine.bias
    classes = np.asarray(model.classes)
    return classes[np.argmax(scores, axis=1)]
