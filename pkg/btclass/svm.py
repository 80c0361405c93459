"""
Soft-margin linear SVMs and their one-vs-one combination.

A binary model minimizes ``1/2 |w|^2 + C * sum(max(0, 1 - y_i (w.x_i + b)))`` with an unregularized bias, solved in
the dual by `btclass._smo`. The multiclass model trains one binary model per unordered pair of categories and
predicts by majority vote.
"""
import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse

from ._smo import smo_solve
from .config import SvmConfig
from .corpus import CategorySet
from .tasks import TaskSpace, spawn
from .task_runtime import Scheduler

logger = logging.getLogger(__name__)

__all__ = ["TrainConfig", "TrainTrace", "BinaryLinearModel", "OvoModel", "Prediction", "train_binary", "decision",
           "primal_objective", "train_ovo", "predict", "TIE_BREAKS"]

TrainConfig = SvmConfig

TIE_BREAKS = ("none", "margin", "prior", "order")

FeatureMatrix = Union[sparse.spmatrix, np.ndarray]


@dataclass(frozen=True)
class BinaryLinearModel:
    """
    A separating hyperplane for a pair of categories; a non-negative decision value means the first one.
    """
    weights: np.ndarray
    bias: float
    pair: Tuple[str, str] = ("+1", "-1")

    @property
    def dimension(self) -> int:
        return self.weights.shape[0]

    @property
    def is_constant(self) -> bool:
        return not np.any(self.weights)


@dataclass(frozen=True)
class TrainTrace:
    objective: np.ndarray
    """The dual objective after every epoch and at the end; non-increasing."""
    iterations: int
    converged: bool
    violation: float = 0.0
    """The maximal KKT violation when the solver stopped; below the tolerance on convergence."""
    primal: np.ndarray = field(default_factory=lambda: np.zeros(1))
    """The regularized hinge objective of the hyperplane at the same points as `objective`."""


def _as_csr(X: FeatureMatrix) -> sparse.csr_matrix:
    if sparse.issparse(X):
        return sparse.csr_matrix(X, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, np.newaxis]
    return sparse.csr_matrix(X)


def _as_row(x: FeatureMatrix) -> sparse.csr_matrix:
    if sparse.issparse(x):
        return sparse.csr_matrix(x, dtype=float)
    x = np.asarray(x, dtype=float)
    return sparse.csr_matrix(x.reshape(1, -1) if x.ndim <= 1 else x)


def _check_finite(X: sparse.csr_matrix):
    if not np.all(np.isfinite(X.data)):
        raise ValueError("Feature values must be finite")


def _constant(dimension: int, positive: bool, pair) -> BinaryLinearModel:
    return BinaryLinearModel(np.zeros(dimension), 1.0 if positive else -1.0, tuple(pair))


def train_binary(X: FeatureMatrix, y: Sequence[int], cfg: Optional[TrainConfig] = None,
                 pair: Tuple[str, str] = ("+1", "-1"),
                 return_trace: bool = False) -> Union[BinaryLinearModel, Tuple[BinaryLinearModel, TrainTrace]]:
    """
    Train a binary soft-margin linear SVM.

    If only one label occurs the result is the constant model predicting it (zero weights, bias +1 or -1).

    :param X: ``n x d`` samples, sparse or dense. A 1-D array is taken as ``n`` one-feature samples.
    :param y: ``n`` labels in {-1, +1}; +1 is the first category of `pair`.
    :param cfg: C, tolerance, epoch limit and the seed of the sample order.
    :param return_trace: Also return the `TrainTrace`.
    :raises ValueError: on mismatched lengths, empty input, labels other than +/-1 or non-finite features.
    """
    cfg = cfg or TrainConfig()
    cfg.validate()
    X = _as_csr(X)
    y = np.asarray(y, dtype=float).ravel()
    n, d = X.shape
    if n != y.shape[0]:
        raise ValueError("Got {} samples but {} labels".format(n, y.shape[0]))
    if n == 0:
        raise ValueError("Cannot train on an empty sample")
    if not np.all(np.abs(y) == 1):
        raise ValueError("Labels must be -1 or +1")
    _check_finite(X)

    if np.all(y == y[0]):
        model = _constant(d, y[0] > 0, pair)
        trace = TrainTrace(np.zeros(1), 0, True, 0.0, np.zeros(1))
        return (model, trace) if return_trace else model

    order = np.random.default_rng(cfg.seed).permutation(n)
    Xp = X[order]
    Xp.sort_indices()
    yp = y[order]
    max_iter = cfg.max_epochs * n
    alpha, rho, iterations, objective, primal, violation = smo_solve(
        Xp.data.astype(np.float64), Xp.indices.astype(np.int64), Xp.indptr.astype(np.int64), yp,
        d, float(cfg.c), float(cfg.tolerance), max_iter, n)
    converged = iterations < max_iter
    if not converged:
        logger.warning("Pair %s did not converge within %d epochs", pair, cfg.max_epochs)
    weights = np.asarray(Xp.T @ (alpha * yp)).ravel()
    model = BinaryLinearModel(weights, float(-rho), tuple(pair))
    logger.debug("Trained pair %s on %d samples: %d iterations, %d support vectors",
                 pair, n, iterations, int(np.count_nonzero(alpha)))
    if return_trace:
        return model, TrainTrace(np.asarray(objective), int(iterations), converged, float(violation),
                                 np.asarray(primal))
    return model


def decision(model: BinaryLinearModel, x: FeatureMatrix) -> float:
    """
    :return: ``w.x + b`` for a single sample.
    :raises ValueError: if the dimensions differ.
    """
    x = _as_row(x)
    if x.shape != (1, model.dimension):
        raise ValueError("Expected a 1 x {} sample, got {}".format(model.dimension, x.shape))
    return float((x @ model.weights)[0] + model.bias)


def primal_objective(model: BinaryLinearModel, X: FeatureMatrix, y: Sequence[int], c: float) -> float:
    """
    :return: ``1/2 |w|^2 + c * sum(hinge)`` of a model on a labeled sample.
    """
    X = _as_csr(X)
    y = np.asarray(y, dtype=float).ravel()
    margins = y * (X @ model.weights + model.bias)
    return float(0.5 * model.weights @ model.weights + c * np.maximum(0.0, 1.0 - margins).sum())


@dataclass(frozen=True)
class Prediction:
    category: str
    votes: Dict[str, int]
    tie_break: str
    """How the winner was chosen: ``none`` (clear majority), ``margin``, ``prior`` or ``order``."""

    def __post_init__(self):
        if self.tie_break not in TIE_BREAKS:
            raise ValueError("Unknown tie break {!r}; expected one of {}".format(self.tie_break, TIE_BREAKS))

    @property
    def confidence(self) -> float:
        """The share of its k-1 pairwise contests the winner won."""
        k = len(self.votes)
        return self.votes[self.category] / (k - 1) if k > 1 else 1.0


@dataclass(frozen=True)
class OvoModel:
    """
    One binary model per unordered category pair, in canonical order: (0, 1), (0, 2), ..., (k-2, k-1).

    Weights are stored as one ``pairs x d`` matrix.
    """
    categories: CategorySet
    weights: np.ndarray
    biases: np.ndarray
    train_counts: np.ndarray

    def __post_init__(self):
        k = len(self.categories)
        if self.weights.shape[0] != k * (k - 1) // 2 or self.biases.shape != (self.weights.shape[0],):
            raise ValueError("An OvO model over {} categories needs {} pair models".format(k, k * (k - 1) // 2))

    @property
    def k(self) -> int:
        return len(self.categories)

    @property
    def pairs(self) -> List[Tuple[int, int]]:
        return list(combinations(range(self.k), 2))

    @property
    def dimension(self) -> int:
        return self.weights.shape[1]

    @property
    def models(self) -> List[BinaryLinearModel]:
        labels = self.categories.labels
        return [BinaryLinearModel(self.weights[p], float(self.biases[p]), (labels[a], labels[b]))
                for p, (a, b) in enumerate(self.pairs)]

    @classmethod
    def from_models(cls, categories: CategorySet, models: Sequence[BinaryLinearModel],
                    train_counts: Sequence[int]) -> "OvoModel":
        return cls(categories, np.vstack([m.weights for m in models]), np.array([m.bias for m in models]),
                   np.asarray(train_counts, dtype=np.int64))

    def margins(self, X: FeatureMatrix) -> np.ndarray:
        """
        :return: The ``n x pairs`` decision values of every pair model.
        """
        X = _as_csr(X)
        if X.shape[1] != self.dimension:
            raise ValueError("Expected samples of dimension {}, got {}".format(self.dimension, X.shape[1]))
        return np.asarray(X @ self.weights.T) + self.biases

    def _resolve(self, margins: np.ndarray) -> Prediction:
        k = self.k
        votes = np.zeros(k, dtype=np.int64)
        support = np.zeros(k)
        for p, (a, b) in enumerate(self.pairs):
            winner = a if margins[p] >= 0 else b
            votes[winner] += 1
            support[winner] += abs(margins[p])
        labels = self.categories.labels
        vote_map = {labels[c]: int(votes[c]) for c in range(k)}
        tied = np.flatnonzero(votes == votes.max())
        if len(tied) == 1:
            return Prediction(labels[tied[0]], vote_map, "none")
        # Cascade: largest margin sum in favor, then largest training count, then category order.
        for name, key in (("margin", support), ("prior", self.train_counts)):
            best = key[tied].max()
            tied = tied[key[tied] == best]
            if len(tied) == 1:
                return Prediction(labels[tied[0]], vote_map, name)
        return Prediction(labels[tied[0]], vote_map, "order")

    def predict(self, x: FeatureMatrix) -> Prediction:
        x = _as_row(x)
        if x.shape[0] != 1:
            raise ValueError("predict takes a single sample; use predict_many")
        return self._resolve(self.margins(x)[0])

    def predict_many(self, X: FeatureMatrix) -> List[Prediction]:
        return [self._resolve(row) for row in self.margins(X)]


def predict(model: OvoModel, x: FeatureMatrix) -> Prediction:
    """
    Majority vote of the pair models for a single ``1 x d`` sample.
    """
    return model.predict(x)


def train_ovo(X: FeatureMatrix, labels: Sequence[str], categories: CategorySet, cfg: Optional[TrainConfig] = None,
              n_threads: Optional[int] = None) -> OvoModel:
    """
    Train the k(k-1)/2 pair models, each on the samples of its two categories, in parallel.

    A pair where one category has no samples gets the constant model voting for the other one; a pair where both
    are absent votes for its first category.

    :param X: ``n x d`` samples.
    :param labels: The category of every sample.
    :param n_threads: Worker threads, defaults to the number of physical cores.
    :raises ValueError: if the sample is empty.
    """
    cfg = cfg or TrainConfig()
    cfg.validate()
    X = _as_csr(X)
    labels = np.array([categories.index(label) for label in labels], dtype=np.int64)
    if X.shape[0] == 0:
        raise ValueError("Cannot train on an empty training set")
    if X.shape[0] != labels.shape[0]:
        raise ValueError("Got {} samples but {} labels".format(X.shape[0], labels.shape[0]))
    _check_finite(X)
    counts = np.bincount(labels, minlength=len(categories))
    if np.count_nonzero(counts) < 2:
        logger.warning("Only %d category present in the training data; every pair model is constant",
                       np.count_nonzero(counts))
    names = categories.labels
    pairs = list(combinations(range(len(categories)), 2))
    d = X.shape[1]

    with Scheduler(n_threads) as scheduler:
        T = TaskSpace("pair")
        for p, (a, b) in enumerate(pairs):
            pair = (names[a], names[b])
            if counts[a] == 0 or counts[b] == 0:
                model = _constant(d, counts[b] == 0, pair)

                @spawn(T[p])
                def constant():
                    return model
                continue
            rows = np.flatnonzero((labels == a) | (labels == b))

            @spawn(T[p])
            def fit():
                return train_binary(X[rows], np.where(labels[rows] == a, 1, -1), cfg, pair)
        logger.info("Training %d pair models on %d samples with %d threads", len(pairs), X.shape[0],
                    scheduler.n_threads)
    models = [T[p].task.result for p in range(len(pairs))]
    return OvoModel.from_models(categories, models, counts)
