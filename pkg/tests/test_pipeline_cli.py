import csv
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from conftest import small_config
from pvstack.cli import main
from pvstack.config import RunConfig
from pvstack.pipeline import (
    PREDICTION_COLUMNS,
    load_models,
    read_predictions,
    report_from_predictions,
    write_predictions,
)

ARTIFACTS = ["config.toml", "ensemble.json", "knn.json", "nn.json", "normalizers.json", "qrf.json", "svr.json"]


def config_file(tmp_path, csv_path, out_dir, **extra) -> Path:
    path = tmp_path / "run.toml"
    path.write_text(small_config(csv_path, out_dir, **extra).dumps())
    return path


@pytest.fixture(scope="module")
def trained(synthetic_csv, tmp_path_factory):
    base = tmp_path_factory.mktemp("run")
    cfg = config_file(base, synthetic_csv, base / "art")
    assert main(["train", "-c", str(cfg)]) == 0
    return base, cfg


def test_train_writes_all_artifacts(trained):
    base, _ = trained
    assert sorted(p.name for p in (base / "art").iterdir()) == ARTIFACTS
    restored = load_models(base / "art")
    assert restored.ensemble.member_names == ("knn", "qrf", "svr")
    assert RunConfig.load(base / "art" / "config.toml").knn.k == 25


def test_training_is_byte_reproducible(trained, tmp_path):
    base, cfg = trained
    assert main(["train", "-c", str(cfg), "--out", str(tmp_path / "again")]) == 0
    for name in ARTIFACTS[1:]:
        assert (tmp_path / "again" / name).read_bytes() == (base / "art" / name).read_bytes(), name


def test_evaluate_outputs(trained, tmp_path, capsys):
    base, cfg = trained
    assert main(["evaluate", "-c", str(cfg), "--artifacts", str(base / "art"), "--out", str(tmp_path)]) == 0
    table = capsys.readouterr().out
    with open(tmp_path / "predictions.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == PREDICTION_COLUMNS
    assert len(rows) == 1 + 168 and rows[1][0] == "2013-02-01 00:00"
    assert (tmp_path / "predictions.csv").read_bytes().count(b"\r\n") == 169
    lines = table.splitlines()
    assert all(m in lines[0] for m in ("NN", "KNN", "QRF", "SVR", "ENS"))
    assert lines[-1].startswith("Weekly Error (%)")
    nmae_rows = (tmp_path / "nmae.csv").read_text().splitlines()
    assert nmae_rows[0] == "day,nn,knn,qrf,svr,ens" and len(nmae_rows) == 9
    assert all(float(v) >= 0 for v in nmae_rows[-1].split(",")[1:])


def test_evaluate_predictions_are_byte_reproducible(trained, tmp_path):
    base, cfg = trained
    for sub in ("a", "b"):
        assert main(["evaluate", "-c", str(cfg), "--artifacts", str(base / "art"), "--out", str(tmp_path / sub)]) == 0
    assert (tmp_path / "a" / "predictions.csv").read_bytes() == (tmp_path / "b" / "predictions.csv").read_bytes()


def test_missing_artifact_is_a_data_error(trained, tmp_path, capsys):
    base, cfg = trained
    art = tmp_path / "art"
    art.mkdir()
    for name in ARTIFACTS:
        if name != "svr.json":
            (art / name).write_bytes((base / "art" / name).read_bytes())
    assert main(["evaluate", "-c", str(cfg), "--artifacts", str(art)]) == 3
    assert "svr.json" in capsys.readouterr().err


def test_invalid_config_exits_2(trained, capsys):
    _, cfg = trained
    assert main(["train", "-c", str(cfg), "--set", "knn.k=0"]) == 2
    assert "ConfigError" in capsys.readouterr().err


def test_k_larger_than_training_rows_is_rejected(trained, tmp_path, capsys):
    _, cfg = trained
    assert main(["train", "-c", str(cfg), "--set", "knn.k=100000", "--out", str(tmp_path)]) == 2
    assert "KTooLarge" in capsys.readouterr().err


def test_missing_data_file_exits_3(tmp_path):
    cfg = config_file(tmp_path, tmp_path / "nope.csv", tmp_path / "art")
    assert main(["train", "-c", str(cfg)]) == 3


def test_predict_from_weather_file(trained, synthetic_csv, tmp_path):
    base, cfg = trained
    weather = tmp_path / "w.csv"
    with open(synthetic_csv, newline="") as src, open(weather, "w", newline="") as dst:
        reader, writer = csv.reader(src), csv.writer(dst)
        header = next(reader)
        keep = [j for j, h in enumerate(header) if h != "POWER"]
        writer.writerow([header[j] for j in keep])
        for row in reader:
            if row[1].startswith("20130203") or row[1].startswith("20130204"):
                writer.writerow([row[j] for j in keep])
    out = tmp_path / "fc.csv"
    assert main(["predict", "-c", str(cfg), str(weather), "-o", str(out), "--artifacts", str(base / "art")]) == 0
    ts, cols = read_predictions(out)
    assert len(ts) == 48 and "actual" not in cols
    assert sorted(cols) == ["ens", "knn", "nn", "qrf", "svr"]
    assert 0 <= cols["ens"].min() and cols["ens"].max() <= 1


def test_report_command_formats(trained, tmp_path, capsys):
    base, cfg = trained
    main(["evaluate", "-c", str(cfg), "--artifacts", str(base / "art"), "--out", str(tmp_path)])
    capsys.readouterr()
    assert main(["report", str(tmp_path / "predictions.csv"), "--format", "csv"]) == 0
    out = capsys.readouterr().out
    assert out == (tmp_path / "nmae.csv").read_text()
    assert main(["report", str(tmp_path / "absent.csv")]) == 3


def test_perfect_models_report_zeros(tmp_path):
    ts = np.arange(np.datetime64("2014-02-20T00"), np.datetime64("2014-02-27T00"), np.timedelta64(1, "h"))
    actual = np.random.default_rng(0).random(168)
    path = write_predictions(tmp_path / "p.csv", ts, actual, {m: actual for m in ("nn", "knn", "qrf", "svr", "ens")})
    rep = report_from_predictions(path)
    assert all(v == 0.0 for vals in rep.daily.values() for v in vals)
    assert rep.to_csv().splitlines()[-1] == "weekly,0.0000,0.0000,0.0000,0.0000,0.0000"


def test_oracle_command(capsys):
    assert main(["oracle", "--seed", "42", "--instances", "5"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out


def test_oracle_corrupt_tolerance_fails(capsys):
    assert main(["oracle", "--instances", "3", "--corrupt-tolerance"]) == 1
    out = capsys.readouterr().out
    assert "FAIL" in out and "deviation" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "pvstack", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert all(c in proc.stdout for c in ("train", "predict", "evaluate", "oracle", "report"))
