"""k-nearest-neighbour regression with Gaussian similarity weights.

The prediction for a query is the weighted mean of its k nearest training
targets (Euclidean distance), each weighted by exp(-d^2 / (2 sigma^2)). By
default sigma adapts per query: the median distance among the k retrieved
neighbours.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from . import artifacts
from .dataset import Dataset
from .errors import ConfigError, DataError, KTooLarge

SCHEMA_VERSION = 1
MEDIAN = "median"

Bandwidth = Union[str, float]


@dataclass(frozen=True, eq=False)
class KnnModel:
    X_train: np.ndarray
    y_train: np.ndarray
    k: int = 300
    bandwidth: Bandwidth = MEDIAN

    def __post_init__(self):
        X = np.array(self.X_train, dtype=float, copy=True)
        y = np.array(self.y_train, dtype=float, copy=True).reshape(-1)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.shape[0] != y.shape[0]:
            raise DataError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise DataError("training data must be finite")
        if not 1 <= self.k:
            raise KTooLarge(f"k must be >= 1, got {self.k}")
        if self.k > X.shape[0]:
            raise KTooLarge(f"k={self.k} exceeds the {X.shape[0]} training rows")
        if self.bandwidth != MEDIAN and not float(self.bandwidth) > 0:
            raise ConfigError(f"bandwidth must be 'median' or a positive number, got {self.bandwidth!r}")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X_train", X)
        object.__setattr__(self, "y_train", y)

    @property
    def n_features(self) -> int:
        return self.X_train.shape[1]

    def neighbours(self, Q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Indices and distances of the k nearest rows for each query row.

        Ties at equal distance resolve to the lower training-row index.
        """
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        if Q.shape[1] != self.n_features:
            raise DataError(f"query has {Q.shape[1]} features, model expects {self.n_features}")
        if not np.isfinite(Q).all():
            raise DataError("query must be finite")
        diff = Q[:, None, :] - self.X_train[None, :, :]
        dist = np.sqrt(np.einsum("qnp,qnp->qn", diff, diff))
        order = np.argsort(dist, axis=1, kind="stable")[:, : self.k]
        return order, np.take_along_axis(dist, order, axis=1)

    def _combine(self, targets: np.ndarray, dist: np.ndarray) -> float:
        if self.bandwidth == MEDIAN:
            sigma = float(np.median(dist))
            if sigma == 0.0:
                return float(np.mean(targets[dist == 0.0]))
        else:
            sigma = float(self.bandwidth)
        # shift by the nearest distance so weights cannot all underflow
        w = np.exp(-(dist**2 - dist[0] ** 2) / (2.0 * sigma**2))
        return float(np.sum(w * targets) / np.sum(w))

    def predict(self, X, chunk_size: int = 64) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty(X.shape[0])
        for s in range(0, X.shape[0], chunk_size):
            idx, dist = self.neighbours(X[s : s + chunk_size])
            for r in range(idx.shape[0]):
                out[s + r] = self._combine(self.y_train[idx[r]], dist[r])
        return out

    def to_dict(self) -> dict:
        return {
            "kind": "knn",
            "schema_version": SCHEMA_VERSION,
            "k": int(self.k),
            "bandwidth": self.bandwidth if self.bandwidth == MEDIAN else float(self.bandwidth),
            "X_train": artifacts.encode_array(self.X_train),
            "y_train": artifacts.encode_array(self.y_train),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "KnnModel":
        return cls(
            artifacts.decode_array(doc["X_train"]),
            artifacts.decode_array(doc["y_train"]),
            k=doc["k"],
            bandwidth=doc["bandwidth"],
        )


def knn_fit(train, y=None, k: int = 300, bandwidth: Bandwidth = MEDIAN) -> KnnModel:
    """Store the training set; a lazy learner has nothing else to fit.

    ``train`` is either a normalized :class:`Dataset` or a feature matrix
    accompanied by ``y``.
    """
    if isinstance(train, Dataset):
        if not train.normalized:
            raise DataError("kNN expects a normalized dataset")
        X, y = train.X, train.y
    else:
        X = train
    return KnnModel(X, y, k=k, bandwidth=bandwidth)


def knn_predict(model: KnnModel, x) -> float:
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return float(model.predict(x)[0])
