"""nu-support-vector regression with a Gaussian RBF kernel.

The dual is solved by sequential minimal optimization over the stacked
variables z = (alpha, alpha*):

    minimize    1/2 beta' K beta - y' beta,        beta = alpha - alpha*
    subject to  sum(alpha) = sum(alpha*) = budget / 2
                0 <= alpha_i, alpha*_i <= box

With the default ``"c_over_n"`` convention box = c/n and budget = c*nu, so
c is a total budget and the solution is invariant to duplicating every
training row. ``"c"`` selects the libsvm convention (box = c,
budget = c*nu*n). The two equalities together are equivalent to
sum(beta) = 0 with sum(alpha + alpha*) = budget; the budget inequality of the
textbook dual is active at an optimum.

Each constraint couples only variables of one block, so every SMO step moves
mass between two alphas, or between two alpha*s, picked as the maximal
KKT-violating pair of that block.
"""

from __future__ import annotations

import logging
from collections import OrderedDict
from dataclasses import asdict, dataclass, field

import numpy as np

from . import artifacts
from .dataset import Dataset
from .errors import ConfigError, DataError, DegenerateKernel, NoConvergence

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CONVENTIONS = ("c_over_n", "c")
FULL_CACHE_MAX_ROWS = 5000
TAU = 1e-12
SNAP = 1e-12


@dataclass(frozen=True)
class SvrConfig:
    nu: float = 0.5
    gamma: float = 1.25
    c: float = 1.0
    tol: float = 1e-3
    max_iter: int = 100_000
    convention: str = "c_over_n"
    cache_rows: int = 2048
    debug: bool = False

    def __post_init__(self):
        if not 0.0 < self.nu <= 1.0:
            raise ConfigError(f"nu must be in (0, 1], got {self.nu}")
        if not self.gamma > 0:
            raise ConfigError(f"gamma must be > 0, got {self.gamma}")
        if not self.c > 0:
            raise ConfigError(f"c must be > 0, got {self.c}")
        if not self.tol > 0:
            raise ConfigError(f"tol must be > 0, got {self.tol}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.convention not in CONVENTIONS:
            raise ConfigError(f"convention must be one of {CONVENTIONS}, got {self.convention!r}")

    def box(self, n: int) -> float:
        return self.c / n if self.convention == "c_over_n" else self.c

    def budget(self, n: int) -> float:
        return self.c * self.nu if self.convention == "c_over_n" else self.c * self.nu * n


def rbf_kernel(A, B, gamma: float) -> np.ndarray:
    """exp(-gamma * ||a - b||^2) for every row pair."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    d2 = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(d2, 0.0))


class KernelRows:
    """Row access to the Gram matrix: fully precomputed for small n, LRU-cached above."""

    def __init__(self, X: np.ndarray, gamma: float, cache_rows: int = 2048):
        self.X = X
        self.gamma = gamma
        self.n = X.shape[0]
        self._sq = (X * X).sum(1)
        if self.n <= FULL_CACHE_MAX_ROWS:
            self._full = rbf_kernel(X, X, gamma)
            np.fill_diagonal(self._full, 1.0)
        else:
            self._full = None
            self._cache: OrderedDict[int, np.ndarray] = OrderedDict()
            self._capacity = max(2, cache_rows)

    def __getitem__(self, i: int) -> np.ndarray:
        if self._full is not None:
            return self._full[i]
        row = self._cache.get(i)
        if row is not None:
            self._cache.move_to_end(i)
            return row
        d2 = self._sq[i] + self._sq - 2.0 * (self.X @ self.X[i])
        row = np.exp(-self.gamma * np.maximum(d2, 0.0))
        row[i] = 1.0
        self._cache[i] = row
        if len(self._cache) > self._capacity:
            self._cache.popitem(last=False)
        return row


def _violating_pair(G: np.ndarray, z: np.ndarray, box: float):
    """(i, j, gap) with i the steepest variable that can grow, j the one that can shrink."""
    up = z < box
    down = z > 0
    if not up.any() or not down.any():
        return -1, -1, 0.0
    Gu = np.where(up, G, np.inf)
    Gd = np.where(down, G, -np.inf)
    i = int(np.argmin(Gu))
    j = int(np.argmax(Gd))
    return i, j, float(Gd[j] - Gu[i])


def _threshold(G: np.ndarray, z: np.ndarray, box: float) -> float:
    """KKT multiplier of one block: mean gradient over free variables, else the midpoint of its bounds."""
    free = (z > 0) & (z < box)
    if free.any():
        return float(G[free].mean())
    at_upper, at_lower = z >= box, z <= 0
    lb = float(G[at_upper].max()) if at_upper.any() else -np.inf
    ub = float(G[at_lower].min()) if at_lower.any() else np.inf
    if np.isinf(lb):
        return ub
    if np.isinf(ub):
        return lb
    return 0.5 * (lb + ub)


def _initial_block(n: int, box: float, total: float) -> np.ndarray:
    z = np.zeros(n)
    remaining = total
    for i in range(n):
        if remaining <= SNAP * box:
            break
        z[i] = min(remaining, box)
        remaining -= z[i]
    return z


@dataclass
class DualSolution:
    alpha: np.ndarray
    alpha_star: np.ndarray
    f: np.ndarray  # K @ beta on the training rows
    n_iter: int
    gap: float
    converged: bool
    history: list = field(default_factory=list)

    @property
    def beta(self) -> np.ndarray:
        return self.alpha - self.alpha_star


def dual_objective(beta, Kbeta, y) -> float:
    """Dual objective in maximization form: -1/2 beta'K beta + y'beta."""
    return float(-0.5 * beta @ Kbeta + y @ beta)


def solve_dual(K: KernelRows, y: np.ndarray, box: float, budget: float, tol: float,
               max_iter: int, debug: bool = False) -> DualSolution:
    n = y.shape[0]
    a = _initial_block(n, box, budget / 2.0)
    b = a.copy()
    f = np.zeros(n)  # beta starts at zero
    history = [dual_objective(a - b, f, y)] if debug else []
    gap = np.inf
    it = 0
    while it < max_iter:
        Ga = f - y
        Gb = -Ga
        ia, ja, gap_a = _violating_pair(Ga, a, box)
        ib, jb, gap_b = _violating_pair(Gb, b, box)
        gap = max(gap_a, gap_b)
        if gap <= tol:
            break
        if gap_a >= gap_b:
            z, G, i, j, sign = a, Ga, ia, ja, 1.0
        else:
            z, G, i, j, sign = b, Gb, ib, jb, -1.0
        Ki, Kj = K[i], K[j]
        eta = max(Ki[i] + Kj[j] - 2.0 * Ki[j], TAU)
        room_i, room_j = box - z[i], z[j]
        d = min((G[j] - G[i]) / eta, room_i, room_j)
        z[i] = z[i] + d
        z[j] = z[j] - d
        # snap round-off residue onto the bounds so bound status stays exact
        if z[i] >= box - SNAP * box:
            z[i] = box
        if z[j] <= SNAP * box:
            z[j] = 0.0
        # beta_i moves by sign*d, beta_j by -sign*d
        f += (sign * d) * (Ki - Kj)
        it += 1
        if debug:
            history.append(dual_objective(a - b, f, y))
    converged = gap <= tol
    return DualSolution(a, b, f, it, gap, converged, history)


@dataclass(frozen=True, eq=False)
class SvrModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha - alpha* per support vector
    bias: float
    epsilon: float
    config: SvrConfig = field(default_factory=SvrConfig)
    n_train: int = 0
    diagnostics: dict = field(default_factory=dict)

    @property
    def convention(self) -> str:
        return self.config.convention

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.support_vectors.shape[0] == 0:
            return np.full(X.shape[0], self.bias)
        if X.shape[1] != self.support_vectors.shape[1]:
            raise DataError(f"query has {X.shape[1]} features, model expects {self.support_vectors.shape[1]}")
        out = np.empty(X.shape[0])
        for s in range(0, X.shape[0], 1024):
            out[s : s + 1024] = rbf_kernel(X[s : s + 1024], self.support_vectors, self.config.gamma) @ self.dual_coef
        return out + self.bias

    predict = decision_function

    def to_dict(self) -> dict:
        return {
            "kind": "svr",
            "schema_version": SCHEMA_VERSION,
            "convention": self.config.convention,
            "config": asdict(self.config),
            "n_train": int(self.n_train),
            "bias": float(self.bias),
            "epsilon": float(self.epsilon),
            "support_vectors": artifacts.encode_array(self.support_vectors),
            "dual_coef": artifacts.encode_array(self.dual_coef),
            "diagnostics": {k: v for k, v in self.diagnostics.items() if k != "history"},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SvrModel":
        return cls(
            artifacts.decode_array(doc["support_vectors"]),
            artifacts.decode_array(doc["dual_coef"]),
            doc["bias"],
            doc["epsilon"],
            SvrConfig(**doc["config"]),
            doc["n_train"],
            doc.get("diagnostics", {}),
        )


def svr_fit(train, y=None, config: SvrConfig | None = None) -> SvrModel:
    """Fit nu-SVR; raises :class:`NoConvergence` (carrying the partial model) past ``max_iter``."""
    config = config or SvrConfig()
    if isinstance(train, Dataset):
        X, y = train.X, train.y
    else:
        X = np.atleast_2d(np.asarray(train, dtype=float))
        y = np.asarray(y, dtype=float).reshape(-1)
    if X.shape[0] != y.shape[0]:
        raise DataError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    n = X.shape[0]
    if n < 2:
        raise DataError(f"need at least 2 rows, got {n}")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise DataError("training data must be finite")
    if (X == X[0]).all():
        raise DegenerateKernel("all training rows are identical")

    box, budget = config.box(n), config.budget(n)
    K = KernelRows(X, config.gamma, config.cache_rows)
    sol = solve_dual(K, y, box, budget, config.tol, config.max_iter, config.debug)

    Ga = sol.f - y
    r1 = _threshold(Ga, sol.alpha, box)
    r2 = _threshold(-Ga, sol.alpha_star, box)
    bias = 0.5 * (r2 - r1)
    epsilon = -0.5 * (r1 + r2)

    sv = (sol.alpha > 0) | (sol.alpha_star > 0)
    beta = sol.beta
    diagnostics = {
        "n_iter": sol.n_iter,
        "kkt_gap": sol.gap,
        "converged": sol.converged,
        "dual_objective": dual_objective(beta, sol.f, y),
        "n_support": int(sv.sum()),
        "n_bounded": int(((sol.alpha >= box) | (sol.alpha_star >= box)).sum()),
        "box": box,
        "budget": budget,
        "sum_beta": float(beta.sum()),
    }
    if config.debug:
        diagnostics["history"] = sol.history
    model = SvrModel(X[sv].copy(), beta[sv].copy(), bias, epsilon, config, n, diagnostics)
    if not sol.converged:
        raise NoConvergence(
            f"nu-SVR did not reach KKT gap {config.tol} in {config.max_iter} iterations (gap {sol.gap:.3g})",
            diagnostics,
            model,
        )
    logger.debug("nu-SVR converged in %d iterations, %d SVs", sol.n_iter, diagnostics["n_support"])
    return model


def svr_predict(model: SvrModel, x) -> float:
    return float(model.decision_function(np.asarray(x, dtype=float).reshape(1, -1))[0])
