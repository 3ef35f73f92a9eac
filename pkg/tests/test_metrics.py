import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pvstack.errors import IncompleteDay, LengthMismatch, ZeroCapacity
from pvstack.metrics import daily_weekly_report, nmae

WEEK = np.arange(np.datetime64("2014-02-20T00"), np.datetime64("2014-02-27T00"), np.timedelta64(1, "h"))


def test_perfect_prediction():
    assert nmae([0.1, 0.5], [0.1, 0.5]) == 0.0


@pytest.mark.parametrize("n", [1, 24, 168])
def test_constant_offset(n):
    a = np.random.default_rng(n).random(n) * 0.9
    assert nmae(a + 0.05, a) == pytest.approx(5.0, abs=1e-12)


def test_hand_example():
    assert nmae([0.2, 0.4], [0.1, 0.7]) == pytest.approx(20.0, abs=1e-12)


def test_capacity_normalization():
    assert nmae([2.0], [1.0], capacity=4.0) == 25.0


floats = st.lists(st.floats(-10, 10), min_size=1, max_size=30)


@settings(max_examples=100, deadline=None)
@given(floats, st.floats(0.01, 100))
def test_symmetry_and_scaling(a, lam):
    a = np.array(a)
    p = a[::-1].copy()
    assert nmae(p, a) == nmae(a, p)
    assert nmae(lam * p, lam * a, lam * 2.0) == pytest.approx(nmae(p, a, 2.0), rel=1e-12, abs=1e-12)


def test_nmae_errors():
    with pytest.raises(LengthMismatch):
        nmae([1, 2], [1])
    with pytest.raises(LengthMismatch):
        nmae([], [])
    with pytest.raises(ZeroCapacity):
        nmae([1], [1], capacity=0.0)


def _offset_preds(daily):
    # a series whose daily nMAE equals the given percentages
    actual = np.full(168, 0.5)
    return actual + np.repeat(np.asarray(daily) / 100.0, 24), actual


@pytest.mark.parametrize("daily,published", [
    ([6.27, 5.92, 4.85, 4.52, 6.28, 5.10, 5.83], 5.53),
    ([7.23, 5.40, 4.84, 5.16, 7.24, 7.16, 8.54], 6.51),
])
def test_weekly_is_mean_of_daily(daily, published):
    p, a = _offset_preds(daily)
    rep = daily_weekly_report({"m": p}, a, WEEK)
    assert len(rep.days) == 7
    assert np.allclose(rep.daily["m"], daily, rtol=0, atol=1e-9)
    assert abs(rep.weekly["m"] - float(np.mean(rep.daily["m"]))) < 5e-3
    assert abs(rep.weekly["m"] - published) <= 0.02


def test_all_zero_error_report():
    a = np.random.default_rng(0).random(168)
    rep = daily_weekly_report({"x": a, "y": a.copy()}, a, WEEK)
    assert all(v == 0 for m in ("x", "y") for v in rep.daily[m]) and rep.weekly == {"x": 0.0, "y": 0.0}
    assert rep.to_csv().splitlines()[-1] == "weekly,0.0000,0.0000"


def test_incomplete_day():
    a = np.zeros(167)
    with pytest.raises(IncompleteDay):
        daily_weekly_report({"m": a}, a, WEEK[:-1])


def test_duplicate_hour_is_incomplete():
    ts = WEEK.copy()
    ts[5] = ts[4]
    with pytest.raises(IncompleteDay):
        daily_weekly_report({"m": np.zeros(168)}, np.zeros(168), ts)


def test_configured_days_must_match():
    import datetime as dt

    days = [dt.date(2014, 2, 20) + dt.timedelta(days=i) for i in range(1, 8)]
    with pytest.raises(IncompleteDay):
        daily_weekly_report({"m": np.zeros(168)}, np.zeros(168), WEEK, days=days)


def test_prediction_length_mismatch():
    with pytest.raises(LengthMismatch):
        daily_weekly_report({"m": np.zeros(100)}, np.zeros(168), WEEK)


def test_text_table_layout():
    p, a = _offset_preds([1, 2, 3, 4, 5, 6, 7])
    text = daily_weekly_report({"qrf": p, "knn": a}, a, WEEK).to_text()
    lines = text.splitlines()
    assert "QRF" in lines[0] and "KNN" in lines[0]
    assert lines[-1].startswith("Weekly Error (%)") and lines[-1].split()[-2:] == ["4.00", "0.00"]
    assert sum(line.startswith("2014-02-") for line in lines) == 7
