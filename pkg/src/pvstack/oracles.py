"""Brute-force reference implementations.

Each oracle reaches its answer by a route that shares no code with the
production path: a dense projected-gradient QP plus an LP for the SVR offset,
an exhaustive split enumeration for trees, an exact rational CDF walk for
weighted quantiles, ridge-stabilised normal equations for the stacker, and a
scalar loop for kNN. :func:`run_suite` compares both routes on seeded random
instances; the CLI ``oracle`` command prints its results.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog


# --------------------------------------------------------------------- SVR
def _clip_root(v: np.ndarray, a: np.ndarray, upper: float, target: float) -> np.ndarray:
    """clip(v - lam*a, 0, upper) with lam chosen so that a . result == target (a entries +-1)."""
    bps = np.unique(np.concatenate([v / a, (v - upper) / a]))

    def g(lam):
        return np.clip(v[None, :] - np.atleast_1d(lam)[:, None] * a[None, :], 0.0, upper) @ a

    vals = g(bps)  # non-increasing in lam
    if target >= vals[0]:
        lam = bps[0]
    elif target <= vals[-1]:
        lam = bps[-1]
    else:
        k = int(np.searchsorted(-vals, -target, side="left"))
        lo, hi = bps[k - 1], bps[k]
        glo, ghi = vals[k - 1], vals[k]
        lam = lo if glo == ghi else lo + (glo - target) * (hi - lo) / (glo - ghi)
    return np.clip(v - lam * a, 0.0, upper)


def project_nu_svr_feasible(v: np.ndarray, box: float, budget: float) -> np.ndarray:
    """Euclidean projection onto {0<=z<=box, sum(alpha)=sum(alpha*), sum(z)<=budget}."""
    n = v.shape[0] // 2
    s = np.concatenate([np.ones(n), -np.ones(n)])
    z = _clip_root(v, s, box, 0.0)
    if z.sum() <= budget * (1 + 1e-15):
        return z
    # the budget binds, so each block carries exactly half of it
    ones = np.ones(n)
    return np.concatenate([_clip_root(v[:n], ones, box, budget / 2), _clip_root(v[n:], ones, box, budget / 2)])


@dataclass
class QpSolution:
    beta: np.ndarray
    bias: float
    epsilon: float
    objective: float  # maximization form
    n_iter: int


def svr_dense_qp(X, y, nu: float, gamma: float, c: float, convention: str = "c_over_n",
                 tol: float = 1e-8, max_iter: int = 200_000) -> QpSolution:
    """nu-SVR dual solved by accelerated projected gradient on the full Gram matrix.

    The offset and tube width come from the primal with w held fixed, a
    two-variable piecewise-linear problem solved exactly as an LP.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    diff = X[:, None, :] - X[None, :, :]
    K = np.exp(-gamma * (diff**2).sum(-1))
    box = c / n if convention == "c_over_n" else c
    budget = c * nu if convention == "c_over_n" else c * nu * n
    Q = np.block([[K, -K], [-K, K]])
    p = np.concatenate([-y, y])
    L = float(np.linalg.eigvalsh(Q)[-1])

    def h(z):
        return 0.5 * z @ Q @ z + p @ z

    z = project_nu_svr_feasible(np.full(2 * n, budget / (2 * n)), box, budget)
    w, t, hz = z.copy(), 1.0, h(z)
    it = 0
    for it in range(1, max_iter + 1):
        z_new = project_nu_svr_feasible(w - (Q @ w + p) / L, box, budget)
        h_new = h(z_new)
        if h_new > hz + 1e-14 * (1 + abs(hz)):  # adaptive restart
            t, w = 1.0, z.copy()
            continue
        t_new = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
        w = z_new + ((t - 1) / t_new) * (z_new - z)
        z, t, hz = z_new, t_new, h_new
        grad_map = L * np.linalg.norm(z - project_nu_svr_feasible(z - (Q @ z + p) / L, box, budget))
        if grad_map <= tol:
            break
    beta = z[:n] - z[n:]
    r = y - K @ beta
    # variables (b, eps, xi_1..n): minimize budget*eps + box*sum(xi)
    cost = np.concatenate([[0.0, budget], np.full(n, box)])
    I = np.eye(n)
    A = np.vstack([
        np.column_stack([-np.ones(n), -np.ones(n), -I]),   # r - b - eps <= xi
        np.column_stack([np.ones(n), -np.ones(n), -I]),    # b - r - eps <= xi
    ])
    rhs = np.concatenate([-r, r])
    bounds = [(None, None), (0, None)] + [(0, None)] * n
    lp = linprog(cost, A_ub=A, b_ub=rhs, bounds=bounds, method="highs")
    if not lp.success:
        raise RuntimeError(f"offset LP failed: {lp.message}")
    # The optimal offset can be an interval (no free variable pins it); take
    # its centre, found by minimizing and maximizing b over the optimal face.
    A_face = np.vstack([A, cost])
    rhs_face = np.concatenate([rhs, [lp.fun + 1e-10 * (1 + abs(lp.fun))]])
    ends = []
    for sign in (1.0, -1.0):
        obj = np.zeros(n + 2)
        obj[0] = sign
        face = linprog(obj, A_ub=A_face, b_ub=rhs_face, bounds=bounds, method="highs")
        ends.append(face.x if face.success else lp.x)
    b = 0.5 * (ends[0][0] + ends[1][0])
    eps = 0.5 * (ends[0][1] + ends[1][1])
    return QpSolution(beta, float(b), float(eps), float(-h(z)), it)


def svr_oracle_predict(sol: QpSolution, X_train, X, gamma: float) -> np.ndarray:
    out = []
    for x in np.atleast_2d(X):
        k = [math.exp(-gamma * float(((x - xi) ** 2).sum())) for xi in X_train]
        out.append(math.fsum(b * kk for b, kk in zip(sol.beta, k)) + sol.bias)
    return np.array(out)


# --------------------------------------------------------------------- trees
def exhaustive_tree(X, y, rows=None, min_samples_leaf: int = 1, rtol: float = 1e-12):
    """CART grown by trying every feature and every midpoint, losses computed directly.

    Returns nested tuples: ``("leaf", sorted_rows)`` or
    ``("split", feature, threshold, left, right)``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    rows = np.arange(len(y)) if rows is None else np.asarray(rows)
    ys = y[rows]
    if len(rows) < 2 * min_samples_leaf or ys.min() == ys.max():
        return ("leaf", tuple(sorted(int(r) for r in rows)))
    total = float(((ys - ys.mean()) ** 2).sum())
    cands = []
    for f in range(X.shape[1]):
        vals = sorted(set(X[rows, f].tolist()))
        for lo, hi in zip(vals, vals[1:]):
            t = 0.5 * (lo + hi)
            if t >= hi:
                t = lo
            left = rows[X[rows, f] <= t]
            right = rows[X[rows, f] > t]
            if len(left) < min_samples_leaf or len(right) < min_samples_leaf:
                continue
            sse = float(((y[left] - y[left].mean()) ** 2).sum() + ((y[right] - y[right].mean()) ** 2).sum())
            cands.append((sse, f, t, left, right))
    if not cands:
        return ("leaf", tuple(sorted(int(r) for r in rows)))
    best = min(c[0] for c in cands)
    near = [c for c in cands if c[0] <= best + rtol * max(total, 1e-300)]
    near.sort(key=lambda c: (c[1], c[2]))
    _, f, t, left, right = near[0]
    return ("split", f, t,
            exhaustive_tree(X, y, left, min_samples_leaf, rtol),
            exhaustive_tree(X, y, right, min_samples_leaf, rtol))


def tree_to_nested(node):
    """Convert a :class:`pvstack.qrf.TreeNode` to the oracle's nested-tuple form."""
    if node.is_leaf:
        return ("leaf", tuple(sorted(node.rows)))
    return ("split", node.feature, node.threshold, tree_to_nested(node.left), tree_to_nested(node.right))


def exact_weighted_quantile(values, weights, q) -> float:
    """CDF walk in exact rational arithmetic."""
    fw = [w if isinstance(w, Fraction) else Fraction(float(w)) for w in weights]
    total = sum(fw)
    target = Fraction(float(q)) * total
    for v in sorted(set(float(v) for v in values)):
        cum = sum((w for x, w in zip(values, fw) if float(x) <= v), Fraction(0))
        if cum >= target and cum > 0:
            return v
    return float(max(values))


def forest_weights_bruteforce(trees, x, n: int) -> list[Fraction]:
    """Per-training-row weight 1/(T |leaf|) per occurrence, walking nested TreeNodes."""
    w = [Fraction(0)] * n
    T = len(trees)
    for root in trees:
        node = root
        while not node.is_leaf:
            node = node.left if x[node.feature] <= node.threshold else node.right
        for r in node.rows:
            w[r] += Fraction(1, T * len(node.rows))
    return w


# --------------------------------------------------------------------- ensemble
def ridge_normal_equations(P, y, ridge: float = 1e-12) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    return np.linalg.solve(P.T @ P + ridge * np.eye(P.shape[1]), P.T @ np.asarray(y, dtype=float))


# --------------------------------------------------------------------- kNN
def knn_bruteforce(X, y, x, k: int, sigma: float | None = None) -> float:
    """Scalar-loop Gaussian-weighted kNN; ``sigma=None`` uses the neighbour median distance."""
    d = [(math.sqrt(math.fsum((float(a) - float(b)) ** 2 for a, b in zip(row, x))), i) for i, row in enumerate(X)]
    d.sort()
    nb = d[:k]
    s = statistics.median(di for di, _ in nb) if sigma is None else sigma
    if s == 0:
        zero = [float(y[i]) for di, i in nb if di == 0]
        return math.fsum(zero) / len(zero)
    w = [math.exp(-(di * di) / (2 * s * s)) for di, _ in nb]
    return math.fsum(wi * float(y[i]) for wi, (_, i) in zip(w, nb)) / math.fsum(w)


# --------------------------------------------------------------------- suite
@dataclass
class OracleResult:
    name: str
    passed: bool
    max_deviation: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: max deviation {self.max_deviation:.3e} (tol {self.tolerance:.1e}) {self.detail}".rstrip()


# KKT tolerance for solver runs compared against the dense QP. At the default
# 1e-3 a stopped-early solution can itself sit ~1e-3 from the optimum.
ORACLE_SVR_KKT_TOL = 1e-6


def _svr_check(rng, n_instances, tol):
    from .svr import SvrConfig, svr_fit

    max_dev, nu_violation = 0.0, 0.0
    for _ in range(n_instances):
        n = int(rng.integers(5, 31))
        p = int(rng.integers(1, 6))
        X = rng.random((n, p))
        y = np.clip(rng.random() * X[:, 0] + 0.2 * rng.standard_normal(n), 0, 1)
        cfg = SvrConfig(tol=ORACLE_SVR_KKT_TOL)
        model = svr_fit(X, y, cfg)
        ref = svr_dense_qp(X, y, cfg.nu, cfg.gamma, cfg.c)
        Xq = np.vstack([X, rng.random((10, p))])
        dev = float(np.max(np.abs(model.predict(Xq) - svr_oracle_predict(ref, X, Xq, cfg.gamma))))
        max_dev = max(max_dev, dev)
        frac_sv, frac_out = nu_fractions(model, X, y)
        # both fractions may miss nu by up to 2/n from rows sitting on the tube edge
        slack = 2.0 / n + 1e-6
        nu_violation = max(nu_violation, cfg.nu - slack - frac_sv, frac_out - cfg.nu - slack)
    return [
        OracleResult("svr vs dense QP", max_dev < tol, max_dev, tol, f"({n_instances} instances)"),
        OracleResult("svr nu-property", nu_violation <= 0.0, max(nu_violation, 0.0), 0.0),
    ]


def nu_fractions(model, X, y, margin: float | None = None) -> tuple[float, float]:
    """(support-vector fraction, fraction strictly outside the tube).

    ``margin`` defaults to the solver's KKT tolerance: points within it of the
    tube edge are on the edge to solver accuracy.
    """
    margin = model.config.tol if margin is None else margin
    n = len(y)
    resid = np.abs(np.asarray(y) - model.predict(X))
    return model.diagnostics["n_support"] / n, float(np.mean(resid > model.epsilon + margin))


def _tree_check(rng, n_instances):
    from .qrf import QrfConfig, qrf_fit

    mismatches = 0
    for _ in range(n_instances):
        n = int(rng.integers(4, 21))
        p = int(rng.integers(1, 4))
        X = np.round(rng.random((n, p)), 2)
        y = rng.random(n)
        leaf = int(rng.integers(1, 4))
        if n < 2 * leaf:
            leaf = 1
        model = qrf_fit(X, y, QrfConfig(n_trees=1, min_samples_leaf=leaf, mtry=p, bootstrap=False,
                                        seed=int(rng.integers(1 << 31))))
        mismatches += tree_to_nested(model.trees[0].as_node()) != exhaustive_tree(X, y, min_samples_leaf=leaf)
    return OracleResult("tree split vs exhaustive search", mismatches == 0, float(mismatches), 0.0,
                        f"({mismatches}/{n_instances} mismatched)")


def _quantile_check(rng, n_instances, tol):
    from .qrf import weighted_quantile

    max_dev = 0.0
    for _ in range(n_instances):
        m = int(rng.integers(1, 30))
        v = np.round(rng.random(m), 2)
        w = rng.random(m) * (rng.random(m) > 0.2)
        if w.sum() == 0:
            w[0] = 1.0
        q = float(rng.uniform(0.01, 0.99))
        max_dev = max(max_dev, abs(weighted_quantile(v, w, q) - exact_weighted_quantile(v, w, q)))
    return OracleResult("weighted quantile vs exact CDF walk", max_dev <= tol, max_dev, tol)


def _ensemble_check(rng, n_instances, tol):
    from .ensemble import fit_weights

    max_dev = 0.0
    for _ in range(n_instances):
        m, k = int(rng.integers(5, 50)), int(rng.integers(1, 5))
        P = rng.random((m, k))
        y = P @ rng.standard_normal(k) + 0.1 * rng.standard_normal(m)
        dev = float(np.max(np.abs(fit_weights(P, y).w - ridge_normal_equations(P, y))))
        max_dev = max(max_dev, dev)
    return OracleResult("ensemble pinv vs normal equations", max_dev <= tol, max_dev, tol)


def _knn_check(rng, n_instances, tol):
    from .knn import knn_fit

    max_dev = 0.0
    for _ in range(n_instances):
        n, p = int(rng.integers(1, 40)), int(rng.integers(1, 6))
        X, y = rng.random((n, p)), rng.random(n)
        k = int(rng.integers(1, n + 1))
        x = rng.random(p)
        model = knn_fit(X, y, k=k)
        max_dev = max(max_dev, abs(float(model.predict(x[None])[0]) - knn_bruteforce(X, y, x, k)))
    return OracleResult("knn vs scalar formula", max_dev <= tol, max_dev, tol)


def run_suite(seed: int = 42, n_instances: int = 100, corrupt: bool = False) -> list[OracleResult]:
    """All oracle comparisons on instances drawn from ``seed``.

    ``corrupt`` replaces every numeric tolerance with a negative one so that
    the failure path, including the reported deviation, can be exercised.
    """
    rng = np.random.default_rng(seed)

    def tol(value):
        return -1.0 if corrupt else value

    results = []
    results += _svr_check(rng, n_instances, tol(1e-3))
    results.append(_tree_check(rng, max(1, n_instances // 2)))
    results.append(_quantile_check(rng, n_instances, tol(0.0)))
    results.append(_ensemble_check(rng, n_instances, tol(1e-6)))
    results.append(_knn_check(rng, n_instances, tol(1e-12)))
    return results
