"""Train / predict / evaluate flows behind the command-line interface."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

import numpy as np

from . import artifacts
from .config import RunConfig
from .dataset import Dataset
from .ensemble import EnsembleWeights, fit_weights
from .errors import DataError, IncompleteDay, SchemaMismatch
from .ingest import VARIABLES, align, deaccumulate, load_power, load_weather, split
from .knn import KnnModel, knn_fit
from .metrics import ErrorReport, daily_weekly_report
from .nn import NnModel, nn_fit, nn_refit_weekly
from .preprocess import Normalizer, fit_normalizer, transform
from .qrf import QrfModel, qrf_fit
from .svr import SvrModel, svr_fit

logger = logging.getLogger(__name__)

MODELS = ("nn", "knn", "qrf", "svr")
PREDICTION_COLUMNS = ("timestamp", "actual", *MODELS, "ens")
NORMALIZER_KIND = "normalizers"
NORMALIZER_SCHEMA = 1
HOURS_PER_WEEK = 168

_LOADERS = {"nn": NnModel, "knn": KnnModel, "qrf": QrfModel, "svr": SvrModel}
_SCHEMAS = {"nn": 1, "knn": 1, "qrf": 1, "svr": 1, "ensemble": 1}


def artifact_path(out_dir, name: str) -> Path:
    return Path(out_dir) / f"{name}.json"


def load_dataset(cfg: RunConfig, weather_path=None, power_path=None) -> Dataset:
    zone = cfg.data.zone
    weather = load_weather(weather_path or cfg.data.weather_path, zone, cfg.data.column_map())
    if cfg.data.deaccumulate:
        weather = deaccumulate(weather)
    power = load_power(power_path or cfg.data.power_path, zone)
    return align(weather, power)


@dataclass(frozen=True)
class Normalizers:
    members: Normalizer
    nn: Normalizer

    def apply(self, data: Dataset, cfg: RunConfig) -> tuple[Dataset, Dataset]:
        return (transform(self.members, data.select(cfg.features.features)),
                transform(self.nn, data.select(cfg.features.nn_features)))

    def to_dict(self) -> dict:
        return {"kind": NORMALIZER_KIND, "schema_version": NORMALIZER_SCHEMA,
                "members": self.members.to_dict(), "nn": self.nn.to_dict()}

    @classmethod
    def from_dict(cls, doc: dict) -> "Normalizers":
        return cls(Normalizer.from_dict(doc["members"]), Normalizer.from_dict(doc["nn"]))


@dataclass
class TrainedModels:
    normalizers: Normalizers
    models: dict
    ensemble: EnsembleWeights

    def predict(self, data: Dataset, cfg: RunConfig) -> dict[str, np.ndarray]:
        """Member and ensemble predictions for raw (unnormalized) rows."""
        X, X_nn = self.normalizers.apply(data, cfg)
        preds = {"nn": self.models["nn"].predict(X_nn.X)}
        preds["knn"] = self.models["knn"].predict(X.X)
        preds["qrf"] = self.models["qrf"].predict(X.X)
        preds["svr"] = self.models["svr"].predict(X.X)
        P = np.column_stack([preds[m] for m in self.ensemble.member_names])
        preds["ens"] = self.ensemble.predict(P)
        return preds


def fit_all(cfg: RunConfig, data: Dataset) -> TrainedModels:
    train, validation, _ = split(data, cfg.split.spec())
    norms = Normalizers(fit_normalizer(train.select(cfg.features.features)),
                        fit_normalizer(train.select(cfg.features.nn_features)))
    tr, tr_nn = norms.apply(train, cfg)
    va, va_nn = norms.apply(validation, cfg)
    seed = cfg.run.seed

    logger.info("fitting kNN (k=%d) on %d rows", cfg.knn.k, len(tr))
    models = {"knn": knn_fit(tr, k=cfg.knn.k, bandwidth=cfg.knn.bandwidth_value())}
    logger.info("fitting QRF (%d trees)", cfg.qrf.n_trees)
    models["qrf"] = qrf_fit(tr, config=cfg.qrf.model_config(seed))
    logger.info("fitting nu-SVR")
    models["svr"] = svr_fit(tr, config=cfg.svr.model_config())
    logger.info("training network")
    nn_config = cfg.nn.model_config()
    models["nn"] = nn_fit(tr_nn, config=nn_config, rng_seed=seed)

    # ensemble weights come from out-of-sample member forecasts on the validation block
    val_preds = {
        "nn": models["nn"].predict(va_nn.X),
        "knn": models["knn"].predict(va.X),
        "qrf": models["qrf"].predict(va.X),
        "svr": models["svr"].predict(va.X),
    }
    members = cfg.ensemble.members
    weights = fit_weights(np.column_stack([val_preds[m] for m in members]), va.y, members,
                          cfg.ensemble.intercept, cfg.ensemble.clip)

    if cfg.nn.refit:
        window = tr_nn.concat(va_nn)
        if nn_config.refit_window == "week":
            window = va_nn.take(slice(max(0, len(va_nn) - HOURS_PER_WEEK), None))
        models["nn"] = nn_refit_weekly(models["nn"], window, config=nn_config)
    return TrainedModels(norms, models, weights)


def save_models(trained: TrainedModels, out_dir) -> list[Path]:
    out = Path(out_dir)
    paths = [artifacts.save(trained.normalizers.to_dict(), artifact_path(out, "normalizers"))]
    for name in MODELS:
        paths.append(artifacts.save(trained.models[name].to_dict(), artifact_path(out, name)))
    paths.append(artifacts.save(trained.ensemble.to_dict(), artifact_path(out, "ensemble")))
    return paths


def load_models(out_dir) -> TrainedModels:
    out = Path(out_dir)
    norms = Normalizers.from_dict(
        artifacts.load(artifact_path(out, "normalizers"), NORMALIZER_KIND, NORMALIZER_SCHEMA))
    models = {name: _LOADERS[name].from_dict(artifacts.load(artifact_path(out, name), name, _SCHEMAS[name]))
              for name in MODELS}
    ens = EnsembleWeights.from_dict(artifacts.load(artifact_path(out, "ensemble"), "ensemble", _SCHEMAS["ensemble"]))
    return TrainedModels(norms, models, ens)


def cmd_train(cfg: RunConfig) -> list[Path]:
    cfg.validate()
    trained = fit_all(cfg, load_dataset(cfg))
    out = Path(cfg.run.output_dir)
    paths = save_models(trained, out)
    (out / "config.toml").write_text(cfg.dumps())
    return paths


def _fmt_ts(t) -> str:
    return np.datetime_as_string(np.datetime64(t, "s"), unit="m").replace("T", " ")


def write_predictions(path, timestamps, actual, preds: dict) -> Path:
    """RFC-4180 CSV; ``actual`` may be None when the target is unknown."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = [c for c in PREDICTION_COLUMNS if c == "timestamp" or (c == "actual" and actual is not None) or c in preds]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)  # QUOTE_MINIMAL with CRLF line ends
        w.writerow(cols)
        for i, t in enumerate(timestamps):
            row = [_fmt_ts(t)]
            if actual is not None:
                row.append(f"{actual[i]:.6f}")
            row += [f"{preds[c][i]:.6f}" for c in cols[len(row):]]
            w.writerow(row)
    return path


def read_predictions(path) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Timestamps and numeric columns of a predictions CSV."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"predictions file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "timestamp":
            raise SchemaMismatch(f"{path}: first column must be 'timestamp'")
        rows = list(reader)
    ts = np.array([np.datetime64(datetime.strptime(r[0], "%Y-%m-%d %H:%M"), "s") for r in rows])
    cols = {name: np.array([float(r[j]) for r in rows]) for j, name in enumerate(header) if j > 0}
    return ts, cols


def report_from_predictions(path, capacity: float = 1.0, days=None) -> ErrorReport:
    ts, cols = read_predictions(path)
    if "actual" not in cols:
        raise IncompleteDay(f"{path} has no 'actual' column to score against")
    actual = cols.pop("actual")
    return daily_weekly_report(cols, actual, ts, capacity, days)


def cmd_evaluate(cfg: RunConfig, artifact_dir=None, out_dir=None) -> ErrorReport:
    cfg.validate()
    artifact_dir = Path(artifact_dir or cfg.run.output_dir)
    out_dir = Path(out_dir or artifact_dir)
    trained = load_models(artifact_dir)
    spec = cfg.split.spec()
    _, _, test = split(load_dataset(cfg), spec)
    preds = trained.predict(test, cfg)
    path = write_predictions(out_dir / "predictions.csv", test.timestamps, test.y, preds)
    # score the values as written, so `report` on this file reproduces the table exactly
    report = report_from_predictions(path, cfg.data.capacity, spec.test_days)
    (out_dir / "nmae.csv").write_text(report.to_csv())
    (out_dir / "nmae.txt").write_text(report.to_text())
    return report


def cmd_predict(cfg: RunConfig, weather_path, out_path, artifact_dir=None) -> Path:
    """Forecast every row of a weather file (no power needed)."""
    cfg.validate()
    trained = load_models(artifact_dir or cfg.run.output_dir)
    weather = load_weather(weather_path, cfg.data.zone, cfg.data.column_map())
    if cfg.data.deaccumulate:
        weather = deaccumulate(weather)
    if not weather:
        raise DataError(f"{weather_path}: no rows for zone {cfg.data.zone}")
    data = Dataset(np.array([r.values() for r in weather], dtype=float), np.zeros(len(weather)),
                   np.array([np.datetime64(r.timestamp, "s") for r in weather]), VARIABLES)
    preds = trained.predict(data, cfg)
    return write_predictions(out_path, data.timestamps, None, preds)
