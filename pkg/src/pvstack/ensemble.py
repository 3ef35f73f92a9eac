"""Stacked generalization: least-squares blend of member forecasts.

Weights are the minimum-norm least-squares solution w = pinv(P) y, fitted on
out-of-sample (validation) member predictions. No sign or sum-to-one
constraint is imposed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DataError, MemberMismatch

SCHEMA_VERSION = 1
DEFAULT_MEMBERS = ("knn", "qrf", "svr")


@dataclass(frozen=True, eq=False)
class EnsembleWeights:
    member_names: tuple[str, ...]
    w: np.ndarray
    intercept: bool = False
    clip: bool = True
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.array(self.w, dtype=float).reshape(-1)
        names = tuple(self.member_names)
        if w.shape[0] != len(names) + int(self.intercept):
            raise MemberMismatch(f"{w.shape[0]} weights for {len(names)} members (intercept={self.intercept})")
        if not np.isfinite(w).all():
            raise DataError("ensemble weights must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "member_names", names)

    def predict(self, member_preds) -> np.ndarray:
        """Blend an (m x k) prediction matrix, or a single k-vector."""
        P = np.asarray(member_preds, dtype=float)
        single = P.ndim == 1
        P = np.atleast_2d(P)
        if P.shape[1] != len(self.member_names):
            raise MemberMismatch(f"expected predictions for {self.member_names}, got {P.shape[1]} columns")
        if self.intercept:
            P = np.column_stack([P, np.ones(P.shape[0])])
        out = P @ self.w
        if self.clip:
            out = np.clip(out, 0.0, 1.0)
        return out[0] if single else out

    def to_dict(self) -> dict:
        return {
            "kind": "ensemble",
            "schema_version": SCHEMA_VERSION,
            "member_names": list(self.member_names),
            "weights": [float(v) for v in self.w],
            "intercept": self.intercept,
            "clip": self.clip,
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EnsembleWeights":
        return cls(tuple(doc["member_names"]), np.array(doc["weights"]), doc["intercept"], doc["clip"],
                   doc.get("diagnostics", {}))


def fit_weights(P, y, member_names: Sequence[str] | None = None, intercept: bool = False,
                clip: bool = True) -> EnsembleWeights:
    P = np.atleast_2d(np.asarray(P, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    if P.shape[0] != y.shape[0]:
        raise DataError(f"P has {P.shape[0]} rows but y has {y.shape[0]}")
    if not (np.isfinite(P).all() and np.isfinite(y).all()):
        raise DataError("member predictions and targets must be finite")
    k = P.shape[1]
    names = tuple(member_names) if member_names is not None else tuple(f"m{j}" for j in range(k))
    if len(names) != k:
        raise MemberMismatch(f"{len(names)} member names for {k} prediction columns")
    A = np.column_stack([P, np.ones(P.shape[0])]) if intercept else P
    if A.shape[0] < A.shape[1]:
        raise DataError(f"need at least {A.shape[1]} rows to fit {A.shape[1]} weights, got {A.shape[0]}")
    w = np.linalg.pinv(A) @ y
    resid = A @ w - y
    diagnostics = {
        "rank": int(np.linalg.matrix_rank(A)),
        "residual_ss": float(resid @ resid),
        "n_rows": int(A.shape[0]),
        "singular_values": [float(s) for s in np.linalg.svd(A, compute_uv=False)],
    }
    return EnsembleWeights(names, w, intercept, clip, diagnostics)


def ensemble_predict(weights: EnsembleWeights, member_preds, member_names: Sequence[str] | None = None) -> float:
    if member_names is not None and tuple(member_names) != weights.member_names:
        raise MemberMismatch(f"members {tuple(member_names)} do not match {weights.member_names}")
    return float(weights.predict(np.asarray(member_preds, dtype=float).reshape(-1)))
