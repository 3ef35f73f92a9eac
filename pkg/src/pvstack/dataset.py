"""Aligned feature matrix + target vector container."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import FeatureMismatch, LengthMismatch, UnknownFeature


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Rows are hours in chronological order.

    ``normalized`` records whether :func:`pvstack.preprocess.transform` has
    already been applied, so a second application can be refused.
    """

    X: np.ndarray
    y: np.ndarray
    timestamps: np.ndarray
    feature_names: tuple[str, ...]
    normalized: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if len(self.feature_names) == 1 else X.reshape(-1, len(self.feature_names))
        y = np.asarray(self.y, dtype=float).reshape(-1)
        ts = np.asarray(self.timestamps, dtype="datetime64[s]").reshape(-1)
        names = tuple(self.feature_names)
        if X.shape[0] != y.shape[0] or X.shape[0] != ts.shape[0]:
            raise LengthMismatch(f"X has {X.shape[0]} rows, y {y.shape[0]}, timestamps {ts.shape[0]}")
        if X.shape[1] != len(names):
            raise FeatureMismatch(f"X has {X.shape[1]} columns but {len(names)} feature names")
        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "timestamps", _frozen(ts))
        object.__setattr__(self, "feature_names", names)

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def take(self, rows) -> "Dataset":
        """Row subset by boolean mask or integer index."""
        return replace(self, X=self.X[rows], y=self.y[rows], timestamps=self.timestamps[rows])

    def select(self, names: Sequence[str]) -> "Dataset":
        """Column subset in the order given by ``names``."""
        missing = [n for n in names if n not in self.feature_names]
        if missing:
            raise UnknownFeature(f"unknown feature(s) {missing}; have {list(self.feature_names)}")
        idx = [self.feature_names.index(n) for n in names]
        return replace(self, X=self.X[:, idx], feature_names=tuple(names))

    def concat(self, other: "Dataset") -> "Dataset":
        if other.feature_names != self.feature_names or other.normalized != self.normalized:
            raise FeatureMismatch("cannot concatenate datasets with different features or normalization state")
        return replace(
            self,
            X=np.vstack([self.X, other.X]),
            y=np.concatenate([self.y, other.y]),
            timestamps=np.concatenate([self.timestamps, other.timestamps]),
        )
