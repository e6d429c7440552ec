"""Random forest classifier: Gini decision trees over bootstrap samples,
majority voting with deterministic tie-breaks, JSON-serializable trees.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EssayScoreError


class ForestError(EssayScoreError):
    pass


class DimensionMismatch(ForestError):
    pass


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int | None = None
    min_samples_split: int = 2
    features_per_split: int | None = None  # None -> ceil(sqrt(d))
    seed: int = 0
    bootstrap: bool = True  # test hook; disabling trains every tree on the full sample

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ValueError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")

    def resolve_mtry(self, n_features: int) -> int:
        if self.features_per_split is None:
            return int(np.ceil(np.sqrt(n_features)))
        if not 1 <= self.features_per_split <= n_features:
            raise ValueError(
                f"features_per_split must be in 1..{n_features}, "
                f"got {self.features_per_split}"
            )
        return self.features_per_split

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "features_per_split": self.features_per_split,
            "seed": self.seed,
            "bootstrap": self.bootstrap,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ForestParams":
        return cls(**d)


@dataclass
class DecisionTree:
    """Flat node arrays; ``feature[i] == -1`` marks a leaf with a class histogram."""

    feature: list[int]
    threshold: list[float]
    left: list[int]
    right: list[int]
    hist: list[list[int] | None]
    n_classes: int
    n_features: int

    def leaf_class(self, node: int) -> int:
        return int(np.argmax(self.hist[node]))

    def predict_index(self, x: np.ndarray) -> int:
        node = 0
        while self.feature[node] >= 0:
            if x[self.feature[node]] <= self.threshold[node]:
                node = self.left[node]
            else:
                node = self.right[node]
        return self.leaf_class(node)

    def predict_index_batch(self, X: np.ndarray) -> np.ndarray:
        feature = np.asarray(self.feature)
        threshold = np.asarray(self.threshold)
        left = np.asarray(self.left)
        right = np.asarray(self.right)
        leaf_cls = np.array(
            [int(np.argmax(h)) if h is not None else 0 for h in self.hist]
        )
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = feature[node] >= 0
        while active.any():
            idx = np.nonzero(active)[0]
            cur = node[idx]
            go_left = X[idx, feature[cur]] <= threshold[cur]
            node[idx] = np.where(go_left, left[cur], right[cur])
            active[idx] = feature[node[idx]] >= 0
        return leaf_cls[node]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left,
            "right": self.right,
            "hist": self.hist,
            "n_classes": self.n_classes,
            "n_features": self.n_features,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        return cls(
            feature=[int(v) for v in d["feature"]],
            threshold=[float(v) for v in d["threshold"]],
            left=[int(v) for v in d["left"]],
            right=[int(v) for v in d["right"]],
            hist=[None if h is None else [int(c) for c in h] for h in d["hist"]],
            n_classes=int(d["n_classes"]),
            n_features=int(d["n_features"]),
        )


@dataclass
class Forest:
    trees: list[DecisionTree]
    params: ForestParams
    classes: list[int]

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "classes": self.classes,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Forest":
        return cls(
            trees=[DecisionTree.from_dict(t) for t in d["trees"]],
            params=ForestParams.from_dict(d["params"]),
            classes=[int(c) for c in d["classes"]],
        )


def _best_split(
    X: np.ndarray,
    y: np.ndarray,
    indices: np.ndarray,
    feats: np.ndarray,
    n_classes: int,
) -> tuple[int, float] | None:
    """Lowest weighted-Gini split over candidate features; thresholds are
    midpoints between consecutive distinct sorted values."""
    n = indices.size
    best_score = np.inf
    best: tuple[int, float] | None = None
    for f in feats:
        vals = X[indices, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        sy = y[indices[order]]
        boundary = np.nonzero(sv[1:] != sv[:-1])[0]
        if boundary.size == 0:
            continue
        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), sy] = 1.0
        prefix = np.cumsum(onehot, axis=0)
        left_counts = prefix[boundary]
        right_counts = prefix[-1] - left_counts
        nl = (boundary + 1).astype(np.float64)
        nr = n - nl
        gini_l = 1.0 - ((left_counts / nl[:, None]) ** 2).sum(axis=1)
        gini_r = 1.0 - ((right_counts / nr[:, None]) ** 2).sum(axis=1)
        weighted = (nl * gini_l + nr * gini_r) / n
        j = int(np.argmin(weighted))
        if weighted[j] < best_score:
            best_score = float(weighted[j])
            pos = boundary[j]
            best = (int(f), float((sv[pos] + sv[pos + 1]) / 2.0))
    return best


def train_tree(
    X: np.ndarray,
    y: np.ndarray,
    params: ForestParams,
    rng: np.random.Generator,
    n_classes: int | None = None,
) -> DecisionTree:
    """Grow one Gini tree; ``y`` holds class indices 0..n_classes-1."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DimensionMismatch(
            f"X has shape {X.shape} but y has {y.shape[0]} labels"
        )
    if n_classes is None:
        n_classes = int(y.max()) + 1
    mtry = params.resolve_mtry(X.shape[1])

    tree = DecisionTree([], [], [], [], [], n_classes, X.shape[1])

    def new_node() -> int:
        tree.feature.append(-1)
        tree.threshold.append(0.0)
        tree.left.append(-1)
        tree.right.append(-1)
        tree.hist.append(None)
        return len(tree.feature) - 1

    root = new_node()
    stack: list[tuple[int, np.ndarray, int]] = [(root, np.arange(X.shape[0]), 0)]
    while stack:
        node, indices, depth = stack.pop()
        counts = np.bincount(y[indices], minlength=n_classes)
        at_depth_limit = params.max_depth is not None and depth >= params.max_depth
        if (
            indices.size < params.min_samples_split
            or at_depth_limit
            or np.count_nonzero(counts) <= 1
        ):
            tree.hist[node] = counts.tolist()
            continue
        feats = rng.permutation(X.shape[1])[:mtry]
        found = _best_split(X, y, indices, feats, n_classes)
        if found is None:
            tree.hist[node] = counts.tolist()
            continue
        f, thr = found
        mask = X[indices, f] <= thr
        left_node = new_node()
        right_node = new_node()
        tree.feature[node] = f
        tree.threshold[node] = thr
        tree.left[node] = left_node
        tree.right[node] = right_node
        stack.append((left_node, indices[mask], depth + 1))
        stack.append((right_node, indices[~mask], depth + 1))
    return tree


def train_forest(X: np.ndarray, y: Sequence[int], params: ForestParams | None = None) -> Forest:
    """Train ``n_trees`` Gini trees on bootstrap samples.

    Each tree gets an independent PRNG stream derived from (seed, tree
    index), so the forest is fully determined by (X, y, params).
    """
    if params is None:
        params = ForestParams()
    X = np.asarray(X, dtype=np.float64)
    y_arr = np.asarray(y, dtype=np.int64)
    classes = sorted(set(int(v) for v in y_arr))
    to_index = {c: i for i, c in enumerate(classes)}
    y_idx = np.array([to_index[int(v)] for v in y_arr], dtype=np.int64)

    seed_u = params.seed % (2**64)
    trees = []
    for i in range(params.n_trees):
        rng = np.random.default_rng(np.random.SeedSequence([seed_u, i]))
        if params.bootstrap:
            sample = rng.integers(0, X.shape[0], size=X.shape[0])
        else:
            sample = np.arange(X.shape[0])
        trees.append(train_tree(X[sample], y_idx[sample], params, rng, len(classes)))
    return Forest(trees=trees, params=params, classes=classes)


def predict_forest(forest: Forest, x: np.ndarray) -> tuple[int, dict[int, int]]:
    """Plurality vote over trees; ties go to the lower class value."""
    x = np.asarray(x, dtype=np.float64)
    expected = forest.trees[0].n_features
    if x.ndim != 1 or x.shape[0] != expected:
        raise DimensionMismatch(f"expected a vector of {expected} features, got {x.shape}")
    counts = np.zeros(len(forest.classes), dtype=np.int64)
    for tree in forest.trees:
        counts[tree.predict_index(x)] += 1
    winner = forest.classes[int(np.argmax(counts))]
    votes = {
        forest.classes[i]: int(c) for i, c in enumerate(counts) if c > 0
    }
    return winner, votes


def predict_forest_batch(forest: Forest, X: np.ndarray) -> np.ndarray:
    """Vectorized plurality votes for an m x d matrix of inputs."""
    X = np.asarray(X, dtype=np.float64)
    expected = forest.trees[0].n_features
    if X.ndim != 2 or X.shape[1] != expected:
        raise DimensionMismatch(f"expected an m x {expected} matrix, got {X.shape}")
    tally = np.zeros((X.shape[0], len(forest.classes)), dtype=np.int64)
    for tree in forest.trees:
        pred = tree.predict_index_batch(X)
        tally[np.arange(X.shape[0]), pred] += 1
    classes = np.asarray(forest.classes)
    return classes[np.argmax(tally, axis=1)]
