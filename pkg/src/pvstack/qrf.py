"""Quantile regression forest.

Bagged CART regression trees grown with the squared-error criterion. Leaves
keep the (bootstrap) training rows that reached them; a prediction is a
quantile of the training targets weighted by how often, and in how small a
leaf, each row co-occurs with the query across the forest.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import sparse

from . import artifacts
from .dataset import Dataset
from .errors import AllZeroWeights, ConfigError, DataError, TooFewSamples

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
LEAF = -1
# relative slack used when comparing split losses and cumulative weights
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class QrfConfig:
    n_trees: int = 300
    min_samples_leaf: int = 5
    mtry: int | None = None
    quantile: float = 0.4
    bootstrap: bool = True
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        if self.n_trees < 1:
            raise ConfigError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.min_samples_leaf < 1:
            raise ConfigError(f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")
        if self.mtry is not None and self.mtry < 1:
            raise ConfigError(f"mtry must be >= 1, got {self.mtry}")
        if not 0.0 < self.quantile < 1.0:
            raise ConfigError(f"quantile must be in (0, 1), got {self.quantile}")

    def resolve_mtry(self, p: int) -> int:
        return min(p, self.mtry if self.mtry is not None else max(1, p // 3))


@dataclass(frozen=True)
class TreeNode:
    """Readable view of one node; leaves carry ``rows``, internal nodes a split."""

    feature: int = LEAF
    threshold: float = np.nan
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    rows: tuple[int, ...] = ()

    @property
    def is_leaf(self) -> bool:
        return self.feature == LEAF


@dataclass(frozen=True, eq=False)
class Tree:
    """Flat node arrays in preorder. Leaf ``i`` owns ``rows[leaf_start[i]:leaf_end[i]]``."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_start: np.ndarray
    leaf_end: np.ndarray
    rows: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.feature == LEAF)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf node id reached by each row of ``X`` (x <= threshold goes left)."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[node] != LEAF
        while active.any():
            idx = np.flatnonzero(active)
            n = node[idx]
            go_left = X[idx, self.feature[n]] <= self.threshold[n]
            node[idx] = np.where(go_left, self.left[n], self.right[n])
            active[idx] = self.feature[node[idx]] != LEAF
        return node

    def leaf_rows(self, node: int) -> np.ndarray:
        return self.rows[self.leaf_start[node] : self.leaf_end[node]]

    def in_bag_counts(self, n: int) -> np.ndarray:
        return np.bincount(self.rows, minlength=n)

    def as_node(self, i: int = 0) -> TreeNode:
        if self.feature[i] == LEAF:
            return TreeNode(rows=tuple(int(r) for r in self.leaf_rows(i)))
        return TreeNode(
            int(self.feature[i]),
            float(self.threshold[i]),
            self.as_node(int(self.left[i])),
            self.as_node(int(self.right[i])),
        )

    def to_dict(self) -> dict:
        return {k: artifacts.encode_array(getattr(self, k)) for k in
                ("feature", "threshold", "left", "right", "leaf_start", "leaf_end", "rows")}

    @classmethod
    def from_dict(cls, doc: dict) -> "Tree":
        return cls(**{k: artifacts.decode_array(v) for k, v in doc.items()})


def best_split(X: np.ndarray, y: np.ndarray, features: Sequence[int], min_samples_leaf: int):
    """Lowest-SSE split of the node (X, y) over ``features``.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values that leave at least ``min_samples_leaf`` rows per side. Returns
    ``(feature, threshold, sse)`` or ``None``. Near-ties (within TIE_RTOL)
    go to the lowest feature index, then the lowest threshold.
    """
    m = y.shape[0]
    yc = y - y.mean()
    total_sse = float(yc @ yc)
    pos = np.arange(1, m)  # rows in the left child
    ok_size = (pos >= min_samples_leaf) & (m - pos >= min_samples_leaf)
    candidates = []
    for f in sorted(features):
        order = np.argsort(X[:, f], kind="stable")
        xs, ys = X[order, f], yc[order]
        cs = np.cumsum(ys)[:-1]
        cs2 = np.cumsum(ys * ys)[:-1]
        sr = ys.sum() - cs
        sse = (cs2 - cs * cs / pos) + ((total_sse - cs2) - sr * sr / (m - pos))
        valid = ok_size & (xs[:-1] < xs[1:])
        if not valid.any():
            continue
        i = np.flatnonzero(valid)
        best_local = i[np.argmin(sse[i])]
        candidates.append((f, xs, sse, i, float(sse[best_local])))
    if not candidates:
        return None
    best = min(c[4] for c in candidates)
    cutoff = best + TIE_RTOL * max(total_sse, 1e-300)
    for f, xs, sse, i, _ in candidates:  # ascending feature index
        near = i[sse[i] <= cutoff]
        if near.size:
            j = near[0]  # ascending threshold
            thr = 0.5 * (xs[j] + xs[j + 1])
            if thr >= xs[j + 1]:  # adjacent floats
                thr = xs[j]
            return f, thr, float(sse[j])
    return None  # unreachable


def _grow_tree(X, y, sample, min_samples_leaf, mtry, rng) -> Tree:
    feature, threshold, left, right, leaf_start, leaf_end = [], [], [], [], [], []
    leaf_chunks = []
    n_leaf_rows = 0
    p = X.shape[1]

    def new_node():
        for lst in (feature, left, right, leaf_start, leaf_end):
            lst.append(LEAF)
        threshold.append(np.nan)
        return len(feature) - 1

    def make_leaf(node, rows):
        nonlocal n_leaf_rows
        leaf_start[node] = n_leaf_rows
        n_leaf_rows += rows.shape[0]
        leaf_end[node] = n_leaf_rows
        leaf_chunks.append(rows)

    def grow(rows):
        node = new_node()
        ys = y[rows]
        if rows.shape[0] < 2 * min_samples_leaf or ys.min() == ys.max():
            make_leaf(node, rows)
            return node
        Xs = X[rows]
        # constant features are skipped and do not count towards mtry
        chosen = []
        for f in rng.permutation(p):
            col = Xs[:, f]
            if col.min() < col.max():
                chosen.append(int(f))
                if len(chosen) == mtry:
                    break
        split = best_split(Xs, ys, chosen, min_samples_leaf) if chosen else None
        if split is None:
            make_leaf(node, rows)
            return node
        f, thr, _ = split
        go_left = Xs[:, f] <= thr
        feature[node], threshold[node] = f, thr
        left[node] = grow(rows[go_left])
        right[node] = grow(rows[~go_left])
        return node

    grow(sample)
    return Tree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=float),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(leaf_start, dtype=np.int64),
        np.array(leaf_end, dtype=np.int64),
        np.concatenate(leaf_chunks).astype(np.int64),
    )


def _fit_one(args) -> Tree:
    X, y, cfg, t, mtry = args
    rng = np.random.default_rng([cfg.seed, t])
    n = X.shape[0]
    sample = rng.integers(0, n, size=n) if cfg.bootstrap else np.arange(n)
    return _grow_tree(X, y, sample, cfg.min_samples_leaf, mtry, rng)


def weighted_quantile(values, weights, q: float) -> float:
    """Smallest v whose cumulative weight (values sorted ascending) reaches q of the total."""
    values = np.asarray(values, dtype=float).reshape(-1)
    weights = np.asarray(weights, dtype=float).reshape(-1)
    if values.shape != weights.shape or values.size == 0:
        raise DataError("values and weights must be non-empty and of equal length")
    if (weights < 0).any() or not np.isfinite(weights).all():
        raise DataError("weights must be finite and non-negative")
    if not 0.0 < q < 1.0:
        raise DataError(f"q must be in (0, 1), got {q}")
    total = weights.sum()
    if not total > 0:
        raise AllZeroWeights("all weights are zero")
    order = np.argsort(values, kind="stable")
    cum = np.cumsum(weights[order])
    hit = (cum >= q * total - TIE_RTOL * total) & (cum > 0)
    return float(values[order][np.argmax(hit)])


@dataclass(frozen=True, eq=False)
class QrfModel:
    trees: tuple[Tree, ...]
    y_train: np.ndarray
    config: QrfConfig = field(default_factory=QrfConfig)
    n_features: int = 0

    @property
    def quantile(self) -> float:
        return self.config.quantile

    @cached_property
    def _leaf_matrix(self):
        """Sparse (global leaf id x training row) matrix of count/|leaf|, plus per-tree leaf offsets."""
        n = self.y_train.shape[0]
        rows, cols, vals, offsets = [], [], [], []
        base = 0
        for tree in self.trees:
            offsets.append(base)
            sizes = tree.leaf_end - tree.leaf_start
            leaf_of_entry = np.repeat(np.arange(tree.n_nodes), sizes)
            rows.append(base + leaf_of_entry)
            cols.append(tree.rows)
            vals.append(1.0 / sizes[leaf_of_entry])
            base += tree.n_nodes
        L = sparse.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(base, n)
        )
        L.sum_duplicates()
        return L, np.array(offsets)

    @cached_property
    def _y_order(self) -> np.ndarray:
        return np.argsort(self.y_train, kind="stable")

    def weights(self, X, tree_mask: np.ndarray | None = None) -> np.ndarray:
        """Dense (queries x training rows) weights; each row sums to 1.

        ``tree_mask`` (queries x trees, bool) restricts each query to a subset
        of trees, as used for out-of-bag prediction.
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise DataError(f"query has {X.shape[1]} features, model expects {self.n_features}")
        L, offsets = self._leaf_matrix
        m, T = X.shape[0], len(self.trees)
        leaf_ids = np.column_stack([offsets[t] + tree.apply(X) for t, tree in enumerate(self.trees)])
        mask = np.ones((m, T), dtype=bool) if tree_mask is None else np.asarray(tree_mask, dtype=bool)
        n_used = mask.sum(axis=1)
        if (n_used == 0).any():
            raise AllZeroWeights("a query has no trees to aggregate")
        r, c = np.nonzero(mask)
        M = sparse.csr_matrix((1.0 / n_used[r], (r, leaf_ids[r, c])), shape=(m, L.shape[0]))
        return (M @ L).toarray()

    def predict_quantiles(self, X, qs: Sequence[float], tree_mask=None, chunk_size: int = 256) -> np.ndarray:
        qs = np.asarray(qs, dtype=float).reshape(-1)
        if ((qs <= 0) | (qs >= 1)).any():
            raise DataError(f"quantiles must lie in (0, 1), got {qs}")
        X = np.atleast_2d(np.asarray(X, dtype=float))
        ys = self.y_train[self._y_order]
        out = np.empty((X.shape[0], qs.size))
        for s in range(0, X.shape[0], chunk_size):
            sl = slice(s, s + chunk_size)
            W = self.weights(X[sl], None if tree_mask is None else tree_mask[sl])
            cum = np.cumsum(W[:, self._y_order], axis=1)
            total = cum[:, -1:]
            for j, q in enumerate(qs):
                hit = (cum >= q * total - TIE_RTOL * total) & (cum > 0)
                out[sl, j] = ys[np.argmax(hit, axis=1)]
        return out

    def predict(self, X, q: float | None = None) -> np.ndarray:
        return self.predict_quantiles(X, [self.quantile if q is None else q])[:, 0]

    def oob_mask(self) -> np.ndarray:
        """(training rows x trees) True where the row is out of bag."""
        n = self.y_train.shape[0]
        return np.column_stack([t.in_bag_counts(n) == 0 for t in self.trees])

    def to_dict(self) -> dict:
        return {
            "kind": "qrf",
            "schema_version": SCHEMA_VERSION,
            "config": asdict(self.config),
            "n_features": int(self.n_features),
            "y_train": artifacts.encode_array(self.y_train),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "QrfModel":
        return cls(
            tuple(Tree.from_dict(t) for t in doc["trees"]),
            artifacts.decode_array(doc["y_train"]),
            QrfConfig(**doc["config"]),
            doc["n_features"],
        )


def qrf_fit(train, y=None, config: QrfConfig | None = None) -> QrfModel:
    """Grow ``config.n_trees`` trees, each from its own RNG stream (seed, tree index)."""
    config = config or QrfConfig()
    if isinstance(train, Dataset):
        X, y = train.X, train.y
    else:
        X = np.atleast_2d(np.asarray(train, dtype=float))
        y = np.asarray(y, dtype=float).reshape(-1)
    if X.shape[0] != y.shape[0]:
        raise DataError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise DataError("training data must be finite")
    n, p = X.shape
    if n < 2 * config.min_samples_leaf:
        raise TooFewSamples(f"need at least {2 * config.min_samples_leaf} rows, got {n}")
    mtry = config.resolve_mtry(p)
    jobs = [(X, y, config, t, mtry) for t in range(config.n_trees)]
    if config.n_jobs > 1:
        with ProcessPoolExecutor(config.n_jobs) as pool:
            trees = tuple(pool.map(_fit_one, jobs))
    else:
        trees = tuple(_fit_one(j) for j in jobs)
    logger.debug("grew %d trees (mtry=%d) on %d rows", len(trees), mtry, n)
    return QrfModel(trees, np.array(y, dtype=float), config, p)


def qrf_predict(model: QrfModel, x, q: float | None = None) -> float:
    return float(model.predict(np.asarray(x, dtype=float).reshape(1, -1), q)[0])
