"""One-input, three-hidden-unit feed-forward network with Bayesian regularization.

Training minimizes F = beta * E_D + alpha * E_W, with E_D the sum of squared
errors and E_W the sum of squared parameters, by Levenberg-Marquardt steps.
After every accepted step the evidence approximation re-estimates the
hyperparameters:

    gamma = N_w - alpha * trace((beta J'J + alpha I)^-1)
    alpha = gamma / (2 E_W),   beta = (n - gamma) / (2 E_D)

(J'J scaled by beta plus alpha I is half the Gauss-Newton Hessian of F.)
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .dataset import Dataset
from .errors import ConfigError, DataError, NonFinite, SingularHessian

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
N_HIDDEN = 3
N_WEIGHTS = 3 * N_HIDDEN + 1  # W1, b1, W2, b2
JITTER = 1e-10


@dataclass(frozen=True)
class NnTrainConfig:
    max_epochs: int = 300
    mu_init: float = 0.005
    mu_inc: float = 10.0
    mu_dec: float = 0.1
    mu_max: float = 1e10
    grad_tol: float = 1e-7
    init_scale: float = 0.5
    refit_window: str = "all"  # "all" history or trailing "week"

    def __post_init__(self):
        for name in ("max_epochs", "mu_init", "mu_inc", "mu_dec", "mu_max", "grad_tol", "init_scale"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.refit_window not in ("all", "week"):
            raise ConfigError(f"refit_window must be 'all' or 'week', got {self.refit_window!r}")


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def unpack(w: np.ndarray):
    h = N_HIDDEN
    return w[:h], w[h : 2 * h], w[2 * h : 3 * h], w[3 * h]


def forward(w: np.ndarray, x: np.ndarray):
    """Network output and hidden activations for a 1-D input vector."""
    W1, b1, W2, b2 = unpack(w)
    hidden = sigmoid(np.outer(x, W1) + b1)
    return hidden @ W2 + b2, hidden


def jacobian(w: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(output, d output / d w) with columns ordered as the packed weight vector."""
    _, _, W2, _ = unpack(w)
    out, hidden = forward(w, x)
    dh = hidden * (1.0 - hidden) * W2
    J = np.column_stack([dh * x[:, None], dh, hidden, np.ones_like(x)])
    return out, J


def objective(w, x, y, alpha: float, beta: float) -> float:
    e = forward(w, x)[0] - y
    return float(beta * (e @ e) + alpha * (w @ w))


def gradient(w, x, y, alpha: float, beta: float) -> np.ndarray:
    out, J = jacobian(w, x)
    return 2.0 * beta * (J.T @ (out - y)) + 2.0 * alpha * w


def _chol(A: np.ndarray):
    try:
        return cho_factor(A)
    except LinAlgError:
        pass
    try:
        return cho_factor(A + JITTER * np.eye(A.shape[0]))
    except LinAlgError:
        return None


@dataclass(frozen=True, eq=False)
class NnModel:
    weights: np.ndarray
    alpha: float
    beta: float
    gamma_eff: float
    rng_seed: int = 0
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.shape[0] != N_WEIGHTS:
            raise DataError(f"expected {N_WEIGHTS} weights, got {w.shape[0]}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def W1(self):
        return unpack(self.weights)[0]

    @property
    def b1(self):
        return unpack(self.weights)[1]

    @property
    def W2(self):
        return unpack(self.weights)[2]

    @property
    def b2(self):
        return unpack(self.weights)[3]

    def predict(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 2:
            if x.shape[1] != 1:
                raise DataError(f"network takes one input feature, got {x.shape[1]}")
            x = x[:, 0]
        return forward(self.weights, np.atleast_1d(x))[0]

    def objective(self, x, y, alpha: float | None = None, beta: float | None = None) -> float:
        """beta * E_D + alpha * E_W, by default under this model's own hyperparameters.

        After an evidence update that value is n/2 by construction, so compare
        two models under one shared (alpha, beta).
        """
        x, y = _xy(x, y)
        alpha = self.alpha if alpha is None else alpha
        beta = self.beta if beta is None else beta
        return objective(self.weights, x, y, alpha, beta)

    @classmethod
    def from_arrays(cls, W1, b1, W2, b2, alpha=1.0, beta=1.0) -> "NnModel":
        w = np.concatenate([np.ravel(W1), np.ravel(b1), np.ravel(W2), np.atleast_1d(b2)])
        return cls(w, alpha, beta, float(N_WEIGHTS))

    def to_dict(self) -> dict:
        W1, b1, W2, b2 = unpack(self.weights)
        diag = {k: v for k, v in self.diagnostics.items() if k != "history"}
        return {
            "kind": "nn",
            "schema_version": SCHEMA_VERSION,
            "W1": W1.tolist(),
            "b1": b1.tolist(),
            "W2": W2.tolist(),
            "b2": float(b2),
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma_eff": self.gamma_eff,
            "rng_seed": self.rng_seed,
            "diagnostics": diag,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "NnModel":
        w = np.concatenate([doc["W1"], doc["b1"], doc["W2"], [doc["b2"]]])
        return cls(w, doc["alpha"], doc["beta"], doc["gamma_eff"], doc["rng_seed"], doc.get("diagnostics", {}))


def _xy(x, y=None):
    if isinstance(x, Dataset):
        if x.n_features != 1:
            raise DataError(f"network takes one input feature, got {x.feature_names}")
        return x.X[:, 0], x.y
    x = np.asarray(x, dtype=float)
    if x.ndim == 2:
        if x.shape[1] != 1:
            raise DataError(f"network takes one input feature, got {x.shape[1]}")
        x = x[:, 0]
    return x, np.asarray(y, dtype=float).reshape(-1)


def _train(w, x, y, config: NnTrainConfig, alpha=None, beta=None):
    n = y.shape[0]
    e = forward(w, x)[0] - y
    E_D, E_W = float(e @ e), float(w @ w)
    if alpha is None or beta is None:
        gamma = float(N_WEIGHTS)
        alpha = gamma / (2.0 * E_W) if E_W > 0 else 1.0
        beta = max(n - gamma, 1.0) / (2.0 * E_D) if E_D > 0 else 1.0
    gamma = float(N_WEIGHTS)
    mu = config.mu_init
    eye = np.eye(N_WEIGHTS)
    history = []
    stop = "max_epochs"
    epoch = 0
    for epoch in range(1, config.max_epochs + 1):
        out, J = jacobian(w, x)
        e = out - y
        JJ, Je = J.T @ J, J.T @ e
        F = beta * E_D + alpha * E_W
        half_grad = beta * Je + alpha * w
        if 2.0 * np.linalg.norm(half_grad) < config.grad_tol:
            stop = "grad_tol"
            break
        accepted = False
        while True:
            cf = _chol(beta * JJ + (alpha + mu) * eye)
            if cf is None:
                raise SingularHessian("damped Hessian is not positive definite", _model(w, alpha, beta, gamma, history))
            w_new = w - cho_solve(cf, half_grad)
            e_new = forward(w_new, x)[0] - y
            E_D_new, E_W_new = float(e_new @ e_new), float(w_new @ w_new)
            F_new = beta * E_D_new + alpha * E_W_new
            if np.isfinite(F_new) and F_new < F:
                mu *= config.mu_dec
                accepted = True
                break
            mu *= config.mu_inc
            if mu > config.mu_max:
                break
        if not accepted:
            stop = "mu_max"
            break
        w, E_D, E_W = w_new, E_D_new, E_W_new
        # evidence update at the new weights; with lam the eigenvalues of J'J,
        # alpha * tr((beta J'J + alpha I)^-1) = sum(alpha / (beta lam + alpha))
        _, J = jacobian(w, x)
        lam = np.maximum(np.linalg.eigvalsh(J.T @ J), 0.0)
        gamma = float(N_WEIGHTS - np.sum(alpha / (beta * lam + alpha)))
        history.append({"epoch": epoch, "F_before": F, "F_after": F_new, "alpha": alpha, "beta": beta,
                        "gamma": gamma, "mu": mu})
        if E_W > 0:
            alpha = gamma / (2.0 * E_W)
        if E_D > 0:
            beta = max(n - gamma, 1e-12) / (2.0 * E_D)
        if not (np.isfinite(w).all() and np.isfinite([alpha, beta, gamma]).all()):
            raise NonFinite(f"non-finite state at epoch {epoch}")
    return w, alpha, beta, gamma, history, stop, epoch


def _model(w, alpha, beta, gamma, history, seed=0, stop="", epochs=0):
    return NnModel(w.copy(), float(alpha), float(beta), float(gamma), seed,
                   {"history": history, "stop_reason": stop, "epochs": epochs})


def nn_fit(train, y=None, config: NnTrainConfig | None = None, rng_seed: int = 0,
           init_weights=None) -> NnModel:
    """Train from weights drawn uniformly in +-init_scale (or ``init_weights``)."""
    config = config or NnTrainConfig()
    x, y = _xy(train, y)
    if x.shape[0] != y.shape[0] or x.shape[0] == 0:
        raise DataError("network needs a non-empty training set with matching targets")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise DataError("training data must be finite")
    if init_weights is None:
        rng = np.random.default_rng(rng_seed)
        w0 = rng.uniform(-config.init_scale, config.init_scale, N_WEIGHTS)
    else:
        w0 = np.array(init_weights, dtype=float).reshape(N_WEIGHTS)
    w, a, b, g, history, stop, epochs = _train(w0, x, y, config)
    logger.debug("network training stopped (%s) after %d epochs", stop, epochs)
    return _model(w, a, b, g, history, rng_seed, stop, epochs)


def nn_refit_weekly(model: NnModel, window, y=None, config: NnTrainConfig | None = None) -> NnModel:
    """Continue training from ``model``'s weights and hyperparameters on a new window."""
    config = config or NnTrainConfig()
    x, y = _xy(window, y)
    if x.shape[0] == 0:
        raise DataError("refit window is empty")
    w, a, b, g, history, stop, epochs = _train(np.array(model.weights), x, y, config, model.alpha, model.beta)
    return _model(w, a, b, g, history, model.rng_seed, stop, epochs)


def nn_predict(model: NnModel, x: float) -> float:
    return float(model.predict(np.array([float(x)]))[0])


def with_weights(model: NnModel, weights) -> NnModel:
    return replace(model, weights=np.asarray(weights, dtype=float))
