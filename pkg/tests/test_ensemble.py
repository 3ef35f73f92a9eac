import numpy as np
import pytest

from pvstack.errors import DataError, MemberMismatch
from pvstack.ensemble import EnsembleWeights, ensemble_predict, fit_weights
from pvstack.oracles import ridge_normal_equations


def test_single_exact_member():
    y = np.linspace(0, 1, 12)
    ew = fit_weights(y[:, None], y)
    assert ew.w.tolist() == pytest.approx([1.0], abs=1e-14)
    assert ew.diagnostics["residual_ss"] < 1e-28


def test_orthogonal_noise_member_gets_zero_weight(rng):
    y = rng.random(10)
    noise = rng.standard_normal(10)
    noise -= (noise @ y) / (y @ y) * y  # orthogonal to y
    w = fit_weights(np.column_stack([noise, y]), y).w
    assert np.allclose(w, [0.0, 1.0], rtol=0, atol=1e-8)
    assert np.allclose(w, ridge_normal_equations(np.column_stack([noise, y]), y), rtol=0, atol=1e-8)


def test_consistent_system():
    ew = fit_weights([[1, 0], [0, 1], [1, 1]], [1, 1, 2])
    assert np.allclose(ew.w, [1, 1], rtol=0, atol=1e-14)
    assert ew.diagnostics["residual_ss"] < 1e-28
    assert ew.diagnostics["rank"] == 2


@pytest.mark.parametrize("w,preds,expected", [
    ([1, 0, 0], [0.4, 0.9, 0.1], 0.4),
    ([0.5, 0.5, 0], [0.2, 0.6, 0.77], 0.4),
    ([2, 0, 0], [0.8, 0.3, 0.3], 1.0),
    ([-1, 0, 0], [0.8, 0.3, 0.3], 0.0),
])
def test_blend_examples(w, preds, expected):
    ew = EnsembleWeights(("knn", "qrf", "svr"), w)
    assert ensemble_predict(ew, preds) == pytest.approx(expected, abs=1e-15)


def test_clip_can_be_disabled():
    ew = EnsembleWeights(("a",), [2.0], clip=False)
    assert ensemble_predict(ew, [0.8]) == pytest.approx(1.6)


def test_intercept_column():
    x = np.linspace(0, 1, 20)
    ew = fit_weights(x[:, None], 0.5 * x + 0.1, intercept=True)
    assert np.allclose(ew.w, [0.5, 0.1], rtol=0, atol=1e-12)
    assert ensemble_predict(ew, [0.4]) == pytest.approx(0.3)


def test_least_squares_optimality_and_dominance(rng):
    for _ in range(50):
        m, k = int(rng.integers(5, 60)), int(rng.integers(1, 5))
        y = rng.random(m)
        P = y[:, None] + 0.2 * rng.standard_normal((m, k))
        w = fit_weights(P, y).w
        grad = 2 * P.T @ (P @ w - y)
        assert np.linalg.norm(grad) <= 1e-8 * np.linalg.norm(P.T @ P, 2) * np.linalg.norm(w) + 1e-12
        sse = float(((P @ w - y) ** 2).sum())
        assert sse <= min(float(((P[:, j] - y) ** 2).sum()) for j in range(k)) + 1e-12
        assert np.allclose(w, ridge_normal_equations(P, y), rtol=0, atol=1e-6)


def test_rank_deficient_is_not_an_error(rng):
    a = rng.random(15)
    ew = fit_weights(np.column_stack([a, a]), a)
    assert ew.diagnostics["rank"] == 1
    assert np.allclose(ew.w, [0.5, 0.5])  # minimum-norm solution


def test_column_order_equivariance(rng):
    P, y = rng.random((30, 3)), rng.random(30)
    perm = [2, 0, 1]
    assert np.allclose(fit_weights(P[:, perm], y).w, fit_weights(P, y).w[perm], rtol=0, atol=1e-12)


def test_member_mismatch():
    ew = EnsembleWeights(("knn", "qrf", "svr"), [0.3, 0.3, 0.4])
    with pytest.raises(MemberMismatch):
        ensemble_predict(ew, [0.1, 0.2])
    with pytest.raises(MemberMismatch):
        ensemble_predict(ew, [0.1, 0.2, 0.3], member_names=("qrf", "knn", "svr"))
    with pytest.raises(MemberMismatch):
        EnsembleWeights(("a", "b"), [1.0])


def test_needs_enough_rows():
    with pytest.raises(DataError):
        fit_weights([[0.1, 0.2, 0.3]], [0.2])


def test_round_trip(rng):
    ew = fit_weights(rng.random((10, 3)), rng.random(10), ("knn", "qrf", "svr"))
    back = EnsembleWeights.from_dict(ew.to_dict())
    assert back.member_names == ew.member_names and back.w.tobytes() == ew.w.tobytes()
