"""Native model zoo and cross-validated model selection.

Three families are supported: logistic_or_linear, decision_tree and
random_forest.  Trees are CART with Gini impurity for classification and
variance reduction for regression; forests draw bootstrap samples and a
random feature subset of size ceil(sqrt(p)) at every split.  All randomness
flows from the run seed through counter-based (Philox) streams keyed by
(candidate, grid point, fold, tree), so identical seeds and inputs yield
identical reports on any platform.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ..tabular import DType, Table
from .base import ModelError

MODEL_FAMILIES = ("logistic_or_linear", "decision_tree", "random_forest")
TASK_TYPES = ("classification", "regression")


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=key))
    )


def feature_matrix(table: Table, feature_names: list[str]) -> np.ndarray:
    """Dense float matrix of the named columns; rejects gaps and text."""
    missing_features = [n for n in feature_names if not table.has_column(n)]
    if missing_features:
        raise ValueError(f"test table is missing feature columns {missing_features}")
    for name in feature_names:
        if not table.is_numeric(name):
            raise ValueError(
                f"feature {name!r} is {table.dtype(name).value}, expected numeric"
            )
        if table.missing_count(name):
            raise ValueError(f"feature {name!r} has missing cells")
    if not feature_names:
        raise ValueError("no feature columns")
    return np.array(
        [[float(v) for v in table.column(n)] for n in feature_names]
    ).T


# --- linear / logistic -------------------------------------------------------

class _LinearModel:
    def __init__(self, l2: float = 0.0, iterations: int = 600,
                 learning_rate: float = 0.5):
        self.l2 = float(l2)
        self.iterations = int(iterations)
        self.learning_rate = float(learning_rate)
        self._weights: np.ndarray | None = None
        self._ovr: list[np.ndarray] | None = None
        self._task = "regression"
        self._n_classes = 0
        self._mean: np.ndarray | None = None
        self._scale: np.ndarray | None = None

    def fit(self, X: np.ndarray, y: np.ndarray, task: str,
            rng: np.random.Generator) -> None:
        self._task = task
        self._mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0.0] = 1.0
        self._scale = scale
        Xs = (X - self._mean) / self._scale
        if task == "regression":
            design = np.hstack([np.ones((Xs.shape[0], 1)), Xs])
            if self.l2 > 0.0:
                penalty = self.l2 * np.eye(design.shape[1])
                penalty[0, 0] = 0.0
                self._weights = np.linalg.solve(
                    design.T @ design + penalty, design.T @ y
                )
            else:
                self._weights, *_ = np.linalg.lstsq(design, y, rcond=None)
            return
        self._n_classes = int(y.max()) + 1
        if self._n_classes == 2:
            self._weights = self._fit_binary(Xs, (y == 1).astype(float))
        else:
            self._ovr = [
                self._fit_binary(Xs, (y == k).astype(float))
                for k in range(self._n_classes)
            ]

    def _fit_binary(self, Xs: np.ndarray, y: np.ndarray) -> np.ndarray:
        design = np.hstack([np.ones((Xs.shape[0], 1)), Xs])
        weights = np.zeros(design.shape[1])
        n = design.shape[0]
        for _ in range(self.iterations):
            z = np.clip(design @ weights, -30, 30)
            probs = 1.0 / (1.0 + np.exp(-z))
            gradient = design.T @ (probs - y) / n
            if self.l2 > 0.0:
                gradient[1:] += self.l2 * weights[1:] / n
            weights -= self.learning_rate * gradient
        return weights

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self._mean is None:
            raise ModelError("model has not been fitted")
        Xs = (X - self._mean) / self._scale
        design = np.hstack([np.ones((Xs.shape[0], 1)), Xs])
        if self._task == "regression":
            return design @ self._weights
        if self._ovr is not None:
            scores = np.stack([design @ w for w in self._ovr], axis=1)
            return scores.argmax(axis=1)
        return (design @ self._weights > 0).astype(int)


# --- CART trees --------------------------------------------------------------

@dataclass
class _Node:
    feature: int = -1
    threshold: float = 0.0
    left: int = -1
    right: int = -1
    payload: np.ndarray | float = 0.0  # class counts or mean


class _CartTree:
    def __init__(self, max_depth: int | None = None, min_samples_split: int = 2,
                 feature_subset: bool = False):
        self.max_depth = max_depth
        self.min_samples_split = int(min_samples_split)
        self.feature_subset = feature_subset
        self.nodes: list[_Node] = []
        self._task = "classification"
        self._n_classes = 0

    def fit(self, X: np.ndarray, y: np.ndarray, task: str,
            rng: np.random.Generator) -> None:
        self._task = task
        self._n_classes = int(y.max()) + 1 if task == "classification" else 0
        self.nodes = []
        n, p = X.shape
        m = max(1, math.ceil(math.sqrt(p))) if self.feature_subset else p
        stack = [(np.arange(n), 0, -1, False)]
        while stack:
            indices, depth, parent, is_right = stack.pop()
            node_id = len(self.nodes)
            self.nodes.append(_Node(payload=self._leaf_payload(y[indices])))
            if parent >= 0:
                if is_right:
                    self.nodes[parent].right = node_id
                else:
                    self.nodes[parent].left = node_id
            if len(indices) < self.min_samples_split:
                continue
            if self.max_depth is not None and depth >= self.max_depth:
                continue
            if self._is_pure(y[indices]):
                continue
            if m < p:
                features = np.sort(rng.choice(p, size=m, replace=False))
            else:
                features = np.arange(p)
            split = self._best_split(X, y, indices, features)
            if split is None:
                continue
            feature, threshold = split
            node = self.nodes[node_id]
            node.feature = int(feature)
            node.threshold = float(threshold)
            mask = X[indices, feature] <= threshold
            stack.append((indices[~mask], depth + 1, node_id, True))
            stack.append((indices[mask], depth + 1, node_id, False))

    def _is_pure(self, y: np.ndarray) -> bool:
        if self._task == "classification":
            return bool((y == y[0]).all())
        return bool((y == y[0]).all())

    def _leaf_payload(self, y: np.ndarray):
        if self._task == "classification":
            return np.bincount(y.astype(int), minlength=self._n_classes)
        return float(y.mean())

    def _best_split(self, X: np.ndarray, y: np.ndarray, indices: np.ndarray,
                    features: np.ndarray):
        best = None  # (impurity, feature, threshold)
        n = len(indices)
        y_node = y[indices]
        for feature in features:
            x = X[indices, feature]
            order = np.argsort(x, kind="stable")
            xs = x[order]
            boundaries = np.nonzero(xs[:-1] < xs[1:])[0]
            if boundaries.size == 0:
                continue
            ys = y_node[order]
            if self._task == "classification":
                onehot = np.zeros((n, self._n_classes))
                onehot[np.arange(n), ys.astype(int)] = 1.0
                prefix = onehot.cumsum(axis=0)
                left = prefix[boundaries]
                total = prefix[-1]
                right = total - left
                nl = left.sum(axis=1)
                nr = right.sum(axis=1)
                gini_l = 1.0 - ((left / nl[:, None]) ** 2).sum(axis=1)
                gini_r = 1.0 - ((right / nr[:, None]) ** 2).sum(axis=1)
                impurity = (nl * gini_l + nr * gini_r) / n
            else:
                s1 = ys.cumsum()
                s2 = (ys ** 2).cumsum()
                nl = boundaries + 1.0
                nr = n - nl
                left_var = s2[boundaries] / nl - (s1[boundaries] / nl) ** 2
                right_sum = s1[-1] - s1[boundaries]
                right_sq = s2[-1] - s2[boundaries]
                right_var = right_sq / nr - (right_sum / nr) ** 2
                impurity = (nl * np.maximum(left_var, 0.0)
                            + nr * np.maximum(right_var, 0.0)) / n
            pick = int(impurity.argmin())
            value = float(impurity[pick])
            if best is None or value < best[0] - 1e-12:
                cut = boundaries[pick]
                threshold = (xs[cut] + xs[cut + 1]) / 2.0
                best = (value, int(feature), float(threshold))
        if best is None:
            return None
        return best[1], best[2]

    def _leaf_for(self, row: np.ndarray) -> _Node:
        node = self.nodes[0]
        while node.feature >= 0:
            node = self.nodes[node.left if row[node.feature] <= node.threshold
                              else node.right]
        return node

    def predict_payloads(self, X: np.ndarray) -> list:
        return [self._leaf_for(row).payload for row in X]

    def predict(self, X: np.ndarray) -> np.ndarray:
        payloads = self.predict_payloads(X)
        if self._task == "classification":
            return np.array([int(np.argmax(p)) for p in payloads])
        return np.array(payloads)


class _DecisionTreeModel:
    def __init__(self, max_depth: int | None = None, min_samples_split: int = 2):
        self.tree = _CartTree(max_depth=max_depth,
                              min_samples_split=min_samples_split)

    def fit(self, X, y, task, rng):
        self.tree.fit(X, y, task, rng)

    def predict(self, X):
        if not self.tree.nodes:
            raise ModelError("model has not been fitted")
        return self.tree.predict(X)


class _RandomForestModel:
    def __init__(self, n_estimators: int = 100, max_depth: int | None = None,
                 min_samples_split: int = 2):
        self.n_estimators = int(n_estimators)
        self.max_depth = max_depth
        self.min_samples_split = int(min_samples_split)
        self.trees: list[_CartTree] = []
        self._task = "classification"
        self._n_classes = 0
        self._seed_key: tuple[int, ...] = ()
        self._seed = 0

    def fit(self, X, y, task, rng):
        # rng carries the (seed, *key) identity; each tree opens its own
        # counter-based stream so tree t is independent of n_estimators
        entropy = rng.bit_generator.seed_seq.entropy
        key = tuple(rng.bit_generator.seed_seq.spawn_key)
        self._task = task
        self._n_classes = int(y.max()) + 1 if task == "classification" else 0
        self.trees = []
        n = X.shape[0]
        for t in range(self.n_estimators):
            tree_rng = _stream(entropy, *key, t)
            sample = tree_rng.integers(0, n, size=n)
            tree = _CartTree(max_depth=self.max_depth,
                             min_samples_split=self.min_samples_split,
                             feature_subset=True)
            tree.fit(X[sample], y[sample], task, tree_rng)
            self.trees.append(tree)

    def predict(self, X):
        if not self.trees:
            raise ModelError("model has not been fitted")
        if self._task == "classification":
            votes = np.zeros((X.shape[0], self._n_classes))
            for tree in self.trees:
                votes[np.arange(X.shape[0]), tree.predict(X)] += 1.0
            return votes.argmax(axis=1)
        total = np.zeros(X.shape[0])
        for tree in self.trees:
            total += tree.predict(X)
        return total / len(self.trees)


_FAMILY_CLASSES = {
    "logistic_or_linear": _LinearModel,
    "decision_tree": _DecisionTreeModel,
    "random_forest": _RandomForestModel,
}


def _build(family: str, params: dict):
    normalized = {
        k: (None if isinstance(v, str) and v.lower() == "none" else v)
        for k, v in params.items()
    }
    try:
        return _FAMILY_CLASSES[family](**normalized)
    except TypeError as exc:
        raise ModelError(f"bad hyperparameters for {family}: {exc}") from exc


# --- selection harness -------------------------------------------------------

@dataclass
class CandidateReport:
    family: str
    best_params: dict
    mean_cv_score: float
    evaluations: list[dict] = field(default_factory=list)


@dataclass
class ModelReport:
    candidates: list[CandidateReport]
    selected: str
    metric: str
    seed: int
    feature_names: list[str]
    cv_folds: int

    def best(self) -> CandidateReport:
        for candidate in self.candidates:
            if candidate.family == self.selected:
                return candidate
        raise ModelError(f"selected family {self.selected!r} not in report")

    def to_json(self) -> dict:
        return {
            "selected": self.selected,
            "metric": self.metric,
            "seed": self.seed,
            "cv_folds": self.cv_folds,
            "feature_names": self.feature_names,
            "candidates": [
                {
                    "family": c.family,
                    "best_params": c.best_params,
                    "mean_cv_score": c.mean_cv_score,
                    "evaluations": c.evaluations,
                }
                for c in self.candidates
            ],
        }


@dataclass
class FittedModel:
    family: str
    params: dict
    task_type: str
    metric: str
    feature_names: list[str]
    labels: list | None
    label_dtype: DType | None
    model: object

    def predict_table(self, test: Table) -> list:
        X = feature_matrix(test, self.feature_names)
        raw = self.model.predict(X)
        if self.task_type == "classification":
            return [self.labels[int(v)] for v in raw]
        return [float(v) for v in raw]


def _expand_grid(grid: dict | None) -> list[dict]:
    if not grid:
        return [{}]
    keys = list(grid.keys())
    expansions = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        expansions.append(dict(zip(keys, combo)))
    return expansions


def _score(metric: str, predicted: np.ndarray, actual: np.ndarray) -> float:
    if metric == "accuracy":
        return float((predicted == actual).mean())
    return float(np.sqrt(((predicted - actual) ** 2).mean()))


def _kfold_indices(n: int, folds: int, seed: int) -> list[np.ndarray]:
    rng = _stream(seed, 0xF01D)
    return [np.asarray(f) for f in np.array_split(rng.permutation(n), folds)]


def train_and_validation_and_select_the_best_model(
    train: Table,
    target: str,
    task_type: str = "classification",
    candidates: list[str] | None = None,
    grids: dict[str, dict] | None = None,
    cv_folds: int = 5,
    metric: str | None = None,
    seed: int = 0,
) -> tuple[ModelReport, FittedModel]:
    if task_type not in TASK_TYPES:
        raise ValueError(f"unknown task_type {task_type!r}")
    if not train.has_column(target):
        raise KeyError(target)
    candidates = list(candidates) if candidates else list(MODEL_FAMILIES)
    unknown = [c for c in candidates if c not in MODEL_FAMILIES]
    if unknown:
        raise ValueError(f"unknown model families {unknown}")
    grids = grids or {}
    if metric is None:
        metric = "accuracy" if task_type == "classification" else "rmse"
    if task_type == "classification" and metric != "accuracy":
        raise ValueError("classification supports the 'accuracy' metric")
    if task_type == "regression" and metric != "rmse":
        raise ValueError("regression supports the 'rmse' metric")
    if cv_folds < 2:
        raise ValueError("cv_folds must be >= 2")

    feature_names = [n for n in train.names if n != target]
    X = feature_matrix(train, feature_names)
    if train.missing_count(target):
        raise ValueError(f"target {target!r} has missing cells")
    target_cells = train.column(target)

    labels: list | None = None
    label_dtype: DType | None = None
    if task_type == "classification":
        labels = sorted(set(target_cells), key=lambda v: (str(type(v)), v))
        if len(labels) < 2:
            raise ValueError("classification target has a single class")
        label_dtype = train.dtype(target)
        index = {v: i for i, v in enumerate(labels)}
        y = np.array([index[v] for v in target_cells])
    else:
        if not train.is_numeric(target):
            raise ValueError(f"regression target {target!r} must be numeric")
        y = np.array([float(v) for v in target_cells])

    if cv_folds > train.n_rows:
        raise ValueError("cv_folds exceeds the number of rows")
    folds = _kfold_indices(train.n_rows, cv_folds, seed)
    larger_better = metric == "accuracy"

    reports: list[CandidateReport] = []
    for ci, family in enumerate(candidates):
        best_eval = None
        evaluations = []
        for gi, params in enumerate(_expand_grid(grids.get(family))):
            scores = []
            for fi, fold in enumerate(folds):
                mask = np.ones(train.n_rows, dtype=bool)
                mask[fold] = False
                model = _build(family, params)
                model.fit(X[mask], y[mask], task_type, _stream(seed, ci, gi, fi))
                scores.append(_score(metric, model.predict(X[fold]), y[fold]))
            mean_score = float(np.mean(scores))
            evaluations.append({"params": params, "mean_cv_score": mean_score})
            if best_eval is None:
                best_eval = (mean_score, params)
            else:
                improved = (mean_score > best_eval[0]) if larger_better \
                    else (mean_score < best_eval[0])
                if improved:
                    best_eval = (mean_score, params)
        reports.append(CandidateReport(
            family=family,
            best_params=best_eval[1],
            mean_cv_score=best_eval[0],
            evaluations=evaluations,
        ))

    selected = reports[0]
    for candidate in reports[1:]:
        improved = (candidate.mean_cv_score > selected.mean_cv_score) \
            if larger_better else (candidate.mean_cv_score < selected.mean_cv_score)
        if improved:
            selected = candidate

    final = _build(selected.family, selected.best_params)
    refit_key = (candidates.index(selected.family), 0xFFFF, 0xFFFF)
    final.fit(X, y, task_type, _stream(seed, *refit_key))
    report = ModelReport(
        candidates=reports,
        selected=selected.family,
        metric=metric,
        seed=seed,
        feature_names=feature_names,
        cv_folds=cv_folds,
    )
    fitted = FittedModel(
        family=selected.family,
        params=selected.best_params,
        task_type=task_type,
        metric=metric,
        feature_names=feature_names,
        labels=labels,
        label_dtype=label_dtype,
        model=final,
    )
    return report, fitted


def predict(model: FittedModel, test: Table) -> list:
    """One prediction per test row, as training-label values."""
    return model.predict_table(test)
