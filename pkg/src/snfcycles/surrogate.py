"""Boosted regression trees that predict the cycle symmetric difference
between a graph and a centroid from cheap distance covariates."""

from __future__ import annotations

import json
import threading
import warnings
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import _kernels
from .cycles import CycleCache, symmetric_difference
from .errors import DegenerateDataWarning, InvalidConfig
from .graphs import LabeledGraph
from .metrics import batch_betweenness, batch_features, betweenness
from .models import CerChain, CerParams

FEATURE_NAMES = ("d_hamm", "d_jacc", "d_centr")


class _Tree:
    """Flat binary regression tree; ``feature == -1`` marks a leaf.

    Rows with ``x[feature] <= threshold`` go left.
    """

    __slots__ = ("feature", "threshold", "left", "right", "value", "depth")

    def __init__(self):
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.value = []
        self.depth = 0

    def add_node(self):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def freeze(self):
        self.feature = np.asarray(self.feature, dtype=np.int64)
        self.threshold = np.asarray(self.threshold, dtype=float)
        self.left = np.asarray(self.left, dtype=np.int64)
        self.right = np.asarray(self.right, dtype=np.int64)
        self.value = np.asarray(self.value, dtype=float)
        return self

    def apply(self, X, out=None, scale=1.0):
        """Leaf values for the rows of ``X``, accumulated as ``out += scale * value``."""
        if out is None:
            out = np.zeros(len(X))
        _kernels.tree_apply(X, self.feature, self.threshold, self.left, self.right, self.value,
                            out, scale)
        return out

    def to_dict(self, k=0):
        if self.feature[k] < 0:
            return {"leaf_value": float(self.value[k])}
        return {
            "feature": FEATURE_NAMES[self.feature[k]] if self.feature[k] < len(FEATURE_NAMES) else int(self.feature[k]),
            "threshold": float(self.threshold[k]),
            "left": self.to_dict(self.left[k]),
            "right": self.to_dict(self.right[k]),
        }

    @classmethod
    def from_dict(cls, obj):
        tree = cls()

        def build(node, depth):
            k = tree.add_node()
            tree.depth = max(tree.depth, depth)
            if "leaf_value" in node:
                tree.value[k] = float(node["leaf_value"])
                return k
            feat = node["feature"]
            tree.feature[k] = FEATURE_NAMES.index(feat) if isinstance(feat, str) else int(feat)
            tree.threshold[k] = float(node["threshold"])
            tree.left[k] = build(node["left"], depth + 1)
            tree.right[k] = build(node["right"], depth + 1)
            return k

        build(obj, 0)
        return tree.freeze()


def _grow_tree(X, r, orders, max_depth, min_leaf):
    cap = 2 ** (max_depth + 1) - 1
    tree = _Tree()
    tree.feature = np.empty(cap, dtype=np.int64)
    tree.threshold = np.zeros(cap)
    tree.left = np.empty(cap, dtype=np.int64)
    tree.right = np.empty(cap, dtype=np.int64)
    tree.value = np.zeros(cap)
    used = _kernels.grow_tree(X, r, orders, max_depth, min_leaf, tree.feature, tree.threshold,
                              tree.left, tree.right, tree.value)
    for name in ("feature", "threshold", "left", "right", "value"):
        setattr(tree, name, getattr(tree, name)[:used].copy())
    tree.depth = _depth(tree.left, tree.right)
    return tree


def _depth(left, right, k=0):
    if left[k] < 0:
        return 0
    return 1 + max(_depth(left, right, left[k]), _depth(left, right, right[k]))


class BoostedTreeRegressor(BaseEstimator, RegressorMixin):
    """Squared-error gradient boosting over depth-limited regression trees.

    Parameters
    ----------
    rounds : int
        Number of trees.
    max_depth : int
        Depth limit of each tree.
    shrinkage : float
        Learning rate in (0, 1] applied to every tree.
    min_leaf : int
        Minimum number of training rows per leaf.
    clamp_min : float or None
        Predictions are clipped from below at this value (symmetric
        differences cannot be negative).

    Attributes
    ----------
    base_prediction_ : float
        Mean training label.
    trees_ : list
        Fitted trees in boosting order.
    train_rmse_ : ndarray
        Training RMSE of the unclipped ensemble after 0, 1, ..., rounds trees.
    """

    def __init__(self, rounds=100, max_depth=4, shrinkage=0.1, min_leaf=5, clamp_min=0.0):
        self.rounds = rounds
        self.max_depth = max_depth
        self.shrinkage = shrinkage
        self.min_leaf = min_leaf
        self.clamp_min = clamp_min

    def _validate_params(self):
        if self.rounds < 0 or self.max_depth < 0 or self.min_leaf < 1:
            raise InvalidConfig("rounds and max_depth must be >= 0 and min_leaf >= 1")
        if not 0.0 < self.shrinkage <= 1.0:
            raise InvalidConfig("shrinkage must lie in (0, 1]")

    def fit(self, X, y):
        self._validate_params()
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        if len(X) < 2 * self.min_leaf:
            raise InvalidConfig(f"need at least {2 * self.min_leaf} rows, got {len(X)}")
        self.n_features_in_ = X.shape[1]
        self.base_prediction_ = float(y.mean())
        self.trees_ = []
        pred = np.full(len(y), self.base_prediction_)
        history = [float(np.sqrt(np.mean((y - pred) ** 2)))]
        degenerate = bool(np.all(X == X[0])) and not np.all(y == y[0])
        if degenerate:
            warnings.warn("all feature rows are identical but labels differ; fitting a constant",
                          DegenerateDataWarning, stacklevel=2)
        if not degenerate:
            X = np.ascontiguousarray(X)
            orders = np.stack([np.argsort(X[:, f], kind="stable") for f in range(X.shape[1])])
            for _ in range(self.rounds):
                resid = y - pred
                if not np.any(np.abs(resid) > 0):
                    break
                tree = _grow_tree(X, resid, orders, self.max_depth, self.min_leaf)
                self.trees_.append(tree)
                tree.apply(X, pred, self.shrinkage)
                history.append(float(np.sqrt(np.mean((y - pred) ** 2))))
        self.train_rmse_ = np.asarray(history)
        return self

    def decision_function(self, X):
        check_is_fitted(self, "trees_")
        X = check_array(X, dtype=float)
        X = np.ascontiguousarray(X)
        out = np.full(len(X), self.base_prediction_)
        for tree in self.trees_:
            tree.apply(X, out, self.shrinkage)
        return out

    def predict(self, X):
        raw = self.decision_function(X)
        if self.clamp_min is not None:
            raw = np.maximum(raw, self.clamp_min)
        return raw

    def to_dict(self):
        check_is_fitted(self, "trees_")
        return {
            "base_prediction": self.base_prediction_,
            "shrinkage": self.shrinkage,
            "max_depth": self.max_depth,
            "rounds": self.rounds,
            "trees": [t.to_dict() for t in self.trees_],
        }

    @classmethod
    def from_dict(cls, obj):
        model = cls(rounds=obj.get("rounds", len(obj["trees"])), max_depth=obj.get("max_depth", 4),
                    shrinkage=obj["shrinkage"])
        model.base_prediction_ = float(obj["base_prediction"])
        model.trees_ = [_Tree.from_dict(t) for t in obj["trees"]]
        model.n_features_in_ = len(FEATURE_NAMES)
        model.train_rmse_ = np.asarray([])
        return model

    def dump(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# training pool and features


@dataclass(frozen=True)
class TrainingPool:
    """Graphs drawn once from CER with their cycle sets, for surrogate
    training. Betweenness vectors are stored so that featurising against a
    new centroid touches no per-graph work beyond array arithmetic."""

    graphs: tuple
    cycle_sets: tuple
    matrix: np.ndarray
    betweenness: np.ndarray
    seed: int
    enumerations: int

    def __len__(self):
        return len(self.graphs)


def build_training_pool(alpha_tilde, centroid_tilde, size, seed=0, burnin=1000, thin=1,
                        omega=None, cache=None):
    """Draw ``size`` graphs from CER(alpha_tilde, centroid_tilde) and
    enumerate their cycles exactly once."""
    if size < 50:
        raise InvalidConfig(f"training pool size must be >= 50, got {size}")
    params = CerParams(centroid_tilde, alpha_tilde)
    chain = CerChain(params, omega, seed)
    mat = chain.draw(size, burnin, thin)
    cache = cache if cache is not None else CycleCache(maxsize=None)
    before = cache.enumerations
    graphs = tuple(LabeledGraph.from_vector(centroid_tilde.n, row) for row in mat)
    cycle_sets = tuple(cache.get(g) for g in graphs)
    mat.setflags(write=False)
    btw = batch_betweenness(mat, centroid_tilde.n)
    btw.setflags(write=False)
    return TrainingPool(graphs, cycle_sets, mat, btw, seed, cache.enumerations - before)


def featurize(pool, centroid, centroid_cycles, centroid_betweenness=None):
    """Covariate rows and symmetric-difference labels of the pool against
    ``centroid``."""
    centroid_cycles.check(centroid)
    rows = batch_features(pool.matrix, centroid, centroid_betweenness, pool.betweenness)
    labels = np.fromiter((symmetric_difference(cs, centroid_cycles) for cs in pool.cycle_sets),
                         dtype=float, count=len(pool))
    return rows, labels


@dataclass(frozen=True)
class SurrogateConfig:
    rounds: int = 100
    max_depth: int = 4
    shrinkage: float = 0.1
    min_leaf: int = 5

    def make(self):
        return BoostedTreeRegressor(self.rounds, self.max_depth, self.shrinkage, self.min_leaf)


class SymmetricDifferencePredictor:
    """Per-centroid surrogate models with an LRU cache keyed by centroid.

    A model is trained the first time a centroid is seen and reused until
    evicted.
    """

    def __init__(self, pool, config=None, cycle_cache=None, max_models=64):
        self.pool = pool
        self.config = config or SurrogateConfig()
        self.cycle_cache = cycle_cache if cycle_cache is not None else CycleCache()
        self.max_models = max_models
        self._models = OrderedDict()
        self._lock = threading.Lock()
        self.trainings = 0

    def centroid_stats(self, centroid):
        return self.cycle_cache.get(centroid), betweenness(centroid)

    def model_for(self, centroid):
        key = centroid.fingerprint
        with self._lock:
            entry = self._models.get(key)
            if entry is not None:
                self._models.move_to_end(key)
                return entry
        cycles, btw = self.centroid_stats(centroid)
        rows, labels = featurize(self.pool, centroid, cycles, btw)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateDataWarning)
            model = self.config.make().fit(rows, labels)
        entry = (model, btw)
        with self._lock:
            self.trainings += 1
            self._models[key] = entry
            if len(self._models) > self.max_models:
                self._models.popitem(last=False)
        return entry

    def predict(self, mat, centroid, mat_betweenness=None):
        model, btw = self.model_for(centroid)
        feats = batch_features(mat, centroid, btw, mat_betweenness)
        return model.predict(feats)


