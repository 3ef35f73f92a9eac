"""Feature selection and min-max scaling to [0, 1]."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .dataset import Dataset
from .errors import (
    AlreadyNormalized,
    EmptyDataset,
    FeatureMismatch,
    SchemaMismatch,
    UnknownFeature,
)
from .ingest import VARIABLES, WeatherRecord

__all__ = [
    "Dataset",
    "FeatureSpec",
    "Normalizer",
    "DEFAULT_FEATURES",
    "NN_FEATURES",
    "fit_normalizer",
    "transform",
    "denormalize",
    "select_features",
]

NORMALIZER_SCHEMA = 1


@dataclass(frozen=True)
class FeatureSpec:
    selected: tuple[str, ...]

    def __post_init__(self):
        sel = tuple(self.selected)
        if not sel:
            raise UnknownFeature("feature spec must name at least one variable")
        unknown = [s for s in sel if s not in VARIABLES]
        if unknown:
            raise UnknownFeature(f"unknown variable(s) {unknown}; expected names from {VARIABLES}")
        if len(set(sel)) != len(sel):
            raise UnknownFeature(f"duplicate variables in {sel}")
        object.__setattr__(self, "selected", sel)

    def __iter__(self):
        return iter(self.selected)

    def __len__(self):
        return len(self.selected)


# Cloud cover plus the four radiation/precipitation fields.
DEFAULT_FEATURES = FeatureSpec(("TCC", "SSRD", "STRD", "TSR", "TP"))
# The network sees irradiance only.
NN_FEATURES = FeatureSpec(("SSRD",))


@dataclass(frozen=True, eq=False)
class Normalizer:
    feature_names: tuple[str, ...]
    mins: np.ndarray
    maxs: np.ndarray

    @property
    def degenerate(self) -> np.ndarray:
        return self.maxs == self.mins

    @property
    def span(self) -> np.ndarray:
        s = self.maxs - self.mins
        return np.where(s > 0, s, 1.0)

    def to_dict(self) -> dict:
        return {
            "schema_version": NORMALIZER_SCHEMA,
            "features": [
                {"name": n, "min": float(lo), "max": float(hi), "degenerate": bool(d)}
                for n, lo, hi, d in zip(self.feature_names, self.mins, self.maxs, self.degenerate)
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Normalizer":
        if doc.get("schema_version") != NORMALIZER_SCHEMA:
            raise SchemaMismatch(f"normalizer schema {doc.get('schema_version')} != {NORMALIZER_SCHEMA}")
        feats = doc["features"]
        return cls(
            tuple(f["name"] for f in feats),
            np.array([f["min"] for f in feats], dtype=float),
            np.array([f["max"] for f in feats], dtype=float),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Normalizer":
        return cls.from_dict(json.loads(text))


def fit_normalizer(train: Dataset) -> Normalizer:
    """Column-wise extrema of the training matrix."""
    if len(train) < 2:
        raise EmptyDataset(f"need at least 2 training rows to fit a normalizer, got {len(train)}")
    return Normalizer(train.feature_names, train.X.min(axis=0), train.X.max(axis=0))


def _check_features(norm: Normalizer, data: Dataset) -> None:
    if tuple(data.feature_names) != tuple(norm.feature_names):
        raise FeatureMismatch(f"dataset features {data.feature_names} != normalizer features {norm.feature_names}")


def transform(norm: Normalizer, data: Dataset) -> Dataset:
    """(x - min) / (max - min); degenerate columns become 0. Test rows are not clipped."""
    _check_features(norm, data)
    if data.normalized:
        raise AlreadyNormalized("dataset is already normalized")
    Xn = (data.X - norm.mins) / norm.span
    Xn[:, norm.degenerate] = 0.0
    return replace(data, X=Xn, normalized=True)


def denormalize(norm: Normalizer, data: Dataset) -> Dataset:
    """Inverse of :func:`transform`; degenerate columns come back as their constant value."""
    _check_features(norm, data)
    if not data.normalized:
        raise FeatureMismatch("dataset is not normalized")
    X = data.X * norm.span + norm.mins
    return replace(data, X=X, normalized=False)


def select_features(records: Sequence[WeatherRecord], spec: FeatureSpec | Sequence[str]) -> np.ndarray:
    """n x p matrix whose columns follow the order of ``spec``."""
    if not isinstance(spec, FeatureSpec):
        spec = FeatureSpec(tuple(spec))
    return np.array([r.values(spec.selected) for r in records], dtype=float).reshape(len(records), len(spec))
