import math

import numpy as np
import pytest

from pvstack.errors import ConfigError, DataError
from pvstack.nn import (
    N_WEIGHTS,
    NnModel,
    NnTrainConfig,
    gradient,
    nn_fit,
    nn_predict,
    nn_refit_weekly,
    objective,
    with_weights,
)


def solar_like(seed, n=200):
    r = np.random.default_rng(seed)
    x = r.random(n)
    y = np.clip(0.9 * x - 0.1 * x**2 + 0.05 * r.standard_normal(n), 0, 1)
    return x, y


def central_diff(fun, w, h=1e-6):
    g = np.empty_like(w)
    for i in range(w.size):
        e = np.zeros_like(w)
        e[i] = h
        g[i] = (fun(w + e) - fun(w - e)) / (2 * h)
    return g


def test_zero_target_zero_init_stays_zero():
    m = nn_fit(np.linspace(0, 1, 50), np.zeros(50), init_weights=np.zeros(N_WEIGHTS))
    assert np.all(m.weights == 0)
    assert np.all(m.predict(np.linspace(0, 1, 7)) == 0)


def test_learns_a_linear_map():
    x = np.linspace(0, 1, 500)
    m = nn_fit(x, 0.8 * x, rng_seed=0)
    assert math.sqrt(np.mean((m.predict(x) - 0.8 * x) ** 2)) < 0.02


@pytest.mark.parametrize("seed", range(5))
def test_gradient_matches_finite_differences(seed):
    r = np.random.default_rng(seed)
    x, y = r.random(40), r.random(40)
    w = r.uniform(-1, 1, N_WEIGHTS)
    for alpha, beta in [(0.0, 1.0), (0.7, 3.0)]:
        g = gradient(w, x, y, alpha, beta)
        num = central_diff(lambda v: objective(v, x, y, alpha, beta), w)
        assert np.linalg.norm(g - num) / max(np.linalg.norm(num), 1e-12) < 1e-5


def test_bias_only_network():
    m = NnModel.from_arrays(np.zeros(3), np.zeros(3), np.zeros(3), 0.3)
    assert nn_predict(m, 0.0) == 0.3 and nn_predict(m, 0.77) == 0.3


def test_output_at_zero_input():
    b1, W2 = np.array([0.5, -1.0, 2.0]), np.array([0.3, 0.2, -0.4])
    m = NnModel.from_arrays([1.0, 2.0, 3.0], b1, W2, 0.1)
    expected = sum(w / (1 + math.exp(-b)) for w, b in zip(W2, b1)) + 0.1
    assert nn_predict(m, 0.0) == pytest.approx(expected, abs=1e-15)


def test_hidden_unit_permutation_invariance(rng):
    W1, b1, W2 = rng.standard_normal((3, 3))
    a = NnModel.from_arrays(W1, b1, W2, 0.2)
    perm = [2, 0, 1]
    b = NnModel.from_arrays(W1[perm], b1[perm], W2[perm], 0.2)
    x = rng.random(20)
    assert np.allclose(a.predict(x), b.predict(x), rtol=0, atol=1e-15)


def test_training_history_is_sound():
    x, y = solar_like(1)
    m = nn_fit(x, y, rng_seed=3)
    hist = m.diagnostics["history"]
    assert hist and m.diagnostics["epochs"] >= len(hist)
    for rec in hist:
        assert rec["F_after"] < rec["F_before"]
        assert 0.0 <= rec["gamma"] <= N_WEIGHTS
    assert 0.0 <= m.gamma_eff <= N_WEIGHTS
    assert m.alpha > 0 and m.beta > 0


def test_evidence_update_balances_objective():
    # after re-estimation beta*E_D + alpha*E_W equals n/2
    x, y = solar_like(2, n=150)
    m = nn_fit(x, y, NnTrainConfig(max_epochs=30), rng_seed=1)
    assert m.objective(x, y) == pytest.approx(75.0, rel=1e-9)


def test_seeded_training_is_deterministic():
    x, y = solar_like(4)
    a, b = nn_fit(x, y, rng_seed=11), nn_fit(x, y, rng_seed=11)
    assert a.weights.tobytes() == b.weights.tobytes()
    assert nn_fit(x, y, rng_seed=12).weights.tobytes() != a.weights.tobytes()


def test_refit_does_not_worsen_objective_on_new_window():
    cfg = NnTrainConfig(max_epochs=40)
    for s in range(10):
        x, y = solar_like(100 + s, n=240)
        m = nn_fit(x[:168], y[:168], cfg, rng_seed=s)
        xw, yw = x[72:], y[72:]
        refit = nn_refit_weekly(m, xw, yw, cfg)
        assert refit.objective(xw, yw, m.alpha, m.beta) <= m.objective(xw, yw, m.alpha, m.beta)


def test_refit_on_empty_window():
    x, y = solar_like(0, n=30)
    m = nn_fit(x, y, NnTrainConfig(max_epochs=5))
    with pytest.raises(DataError):
        nn_refit_weekly(m, np.zeros(0), np.zeros(0))


def test_rejects_multiple_inputs():
    with pytest.raises(DataError):
        nn_fit(np.zeros((5, 2)), np.zeros(5))


@pytest.mark.parametrize("kw", [{"max_epochs": 0}, {"mu_init": -1}, {"refit_window": "month"}])
def test_bad_train_config(kw):
    with pytest.raises(ConfigError):
        NnTrainConfig(**kw)


def test_weights_are_immutable_and_replaceable():
    m = NnModel.from_arrays(np.ones(3), np.zeros(3), np.ones(3), 0.0)
    with pytest.raises(ValueError):
        m.weights[0] = 5.0
    m2 = with_weights(m, np.zeros(N_WEIGHTS))
    assert nn_predict(m2, 0.5) == 0.0 and nn_predict(m, 0.0) == 1.5


def test_serialization_round_trip():
    x, y = solar_like(8, n=60)
    m = nn_fit(x, y, NnTrainConfig(max_epochs=10), rng_seed=2)
    back = NnModel.from_dict(m.to_dict())
    assert back.weights.tobytes() == m.weights.tobytes()
    assert (back.alpha, back.beta, back.gamma_eff) == (m.alpha, m.beta, m.gamma_eff)
    assert "history" not in back.diagnostics
