"""Run configuration: TOML file plus ``section.key=value`` overrides."""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, fields, replace
from datetime import date, datetime
from pathlib import Path
from typing import Sequence

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError, PvStackError
from .ingest import DEFAULT_COLUMNS, VARIABLES, SplitSpec
from .knn import MEDIAN
from .nn import N_HIDDEN, NnTrainConfig
from .qrf import QrfConfig
from .svr import SvrConfig

MODEL_NAMES = ("nn", "knn", "qrf", "svr")


def _check(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


@dataclass(frozen=True)
class DataSection:
    weather_path: str = "data/gefcom_solar.csv"
    power_path: str = "data/gefcom_solar.csv"
    zone: int = 1
    capacity: float = 1.0
    deaccumulate: bool = True
    # file column -> variable name; empty means the GEFCom codes (VAR78 ... VAR228)
    columns: dict = field(default_factory=dict)

    def column_map(self) -> dict:
        return dict(self.columns) if self.columns else dict(DEFAULT_COLUMNS)

    def validate(self):
        _check(self.zone >= 1, f"data.zone must be >= 1, got {self.zone}")
        _check(self.capacity > 0, f"data.capacity must be > 0, got {self.capacity}")
        names = sorted(self.column_map().values())
        _check(names == sorted(VARIABLES), f"data.columns must map onto exactly the variables {VARIABLES}")


@dataclass(frozen=True)
class SplitSection:
    train_start: str = "2013-01-01T00:00"
    train_end: str = "2013-10-20T00:00"
    validation_end: str = "2014-01-01T00:00"
    test_days: tuple[str, ...] = tuple(f"2014-02-{d}" for d in range(20, 27))

    def spec(self) -> SplitSpec:
        try:
            t0, t1, v1 = (datetime.fromisoformat(s) for s in (self.train_start, self.train_end, self.validation_end))
            days = [date.fromisoformat(d) for d in self.test_days]
        except ValueError as exc:
            raise ConfigError(f"split: {exc}") from None
        return SplitSpec((t0, t1), (t1, v1), days)

    def validate(self):
        self.spec()


@dataclass(frozen=True)
class FeatureSection:
    features: tuple[str, ...] = ("TCC", "SSRD", "STRD", "TSR", "TP")
    nn_features: tuple[str, ...] = ("SSRD",)

    def validate(self):
        for name in (*self.features, *self.nn_features):
            _check(name in VARIABLES, f"unknown feature {name!r}; choose from {VARIABLES}")
        _check(len(self.features) >= 1, "features.features must not be empty")
        _check(len(set(self.features)) == len(self.features), "features.features has duplicates")
        _check(len(self.nn_features) == 1, "the network takes exactly one input feature")


@dataclass(frozen=True)
class KnnSection:
    k: int = 300
    bandwidth: str = MEDIAN  # "median" or a positive number written as a string

    def bandwidth_value(self):
        if self.bandwidth == MEDIAN:
            return MEDIAN
        try:
            return float(self.bandwidth)
        except ValueError:
            raise ConfigError(f"knn.bandwidth must be 'median' or a number, got {self.bandwidth!r}") from None

    def validate(self):
        _check(self.k >= 1, f"knn.k must be >= 1, got {self.k}")
        bw = self.bandwidth_value()
        _check(bw == MEDIAN or bw > 0, f"knn.bandwidth must be positive, got {self.bandwidth}")


@dataclass(frozen=True)
class QrfSection:
    n_trees: int = 300
    min_samples_leaf: int = 5
    mtry: int = 0  # 0: one third of the features
    quantile: float = 0.4
    bootstrap: bool = True
    n_jobs: int = 1

    def model_config(self, seed: int) -> QrfConfig:
        return QrfConfig(self.n_trees, self.min_samples_leaf, self.mtry or None, self.quantile,
                         self.bootstrap, seed, self.n_jobs)

    def validate(self):
        _check(self.mtry >= 0, f"qrf.mtry must be >= 0, got {self.mtry}")
        _check(self.n_jobs >= 1, f"qrf.n_jobs must be >= 1, got {self.n_jobs}")
        self.model_config(0)


@dataclass(frozen=True)
class SvrSection:
    nu: float = 0.5
    gamma: float = 1.25
    c: float = 1.0
    tol: float = 1e-3
    max_iter: int = 100_000
    convention: str = "c_over_n"

    def model_config(self) -> SvrConfig:
        return SvrConfig(self.nu, self.gamma, self.c, self.tol, self.max_iter, self.convention)

    def validate(self):
        self.model_config()


@dataclass(frozen=True)
class NnSection:
    hidden: int = N_HIDDEN
    max_epochs: int = 300
    mu_init: float = 0.005
    mu_inc: float = 10.0
    mu_dec: float = 0.1
    mu_max: float = 1e10
    grad_tol: float = 1e-7
    refit: bool = True
    refit_window: str = "all"

    def model_config(self) -> NnTrainConfig:
        return NnTrainConfig(self.max_epochs, self.mu_init, self.mu_inc, self.mu_dec, self.mu_max,
                             self.grad_tol, refit_window=self.refit_window)

    def validate(self):
        _check(self.hidden == N_HIDDEN, f"nn.hidden is fixed at {N_HIDDEN}, got {self.hidden}")
        self.model_config()


@dataclass(frozen=True)
class EnsembleSection:
    members: tuple[str, ...] = ("knn", "qrf", "svr")
    intercept: bool = False
    clip: bool = True

    def validate(self):
        _check(len(self.members) >= 1, "ensemble.members must not be empty")
        for m in self.members:
            _check(m in MODEL_NAMES, f"unknown ensemble member {m!r}; choose from {MODEL_NAMES}")
        _check(len(set(self.members)) == len(self.members), "ensemble.members has duplicates")


@dataclass(frozen=True)
class RunSection:
    seed: int = 0
    output_dir: str = "out"

    def validate(self):
        _check(self.seed >= 0, f"run.seed must be >= 0, got {self.seed}")


SECTIONS = {
    "data": DataSection,
    "split": SplitSection,
    "features": FeatureSection,
    "knn": KnnSection,
    "qrf": QrfSection,
    "svr": SvrSection,
    "nn": NnSection,
    "ensemble": EnsembleSection,
    "run": RunSection,
}


@dataclass(frozen=True)
class RunConfig:
    data: DataSection = field(default_factory=DataSection)
    split: SplitSection = field(default_factory=SplitSection)
    features: FeatureSection = field(default_factory=FeatureSection)
    knn: KnnSection = field(default_factory=KnnSection)
    qrf: QrfSection = field(default_factory=QrfSection)
    svr: SvrSection = field(default_factory=SvrSection)
    nn: NnSection = field(default_factory=NnSection)
    ensemble: EnsembleSection = field(default_factory=EnsembleSection)
    run: RunSection = field(default_factory=RunSection)

    def validate(self) -> "RunConfig":
        for name in SECTIONS:
            try:
                getattr(self, name).validate()
            except PvStackError as exc:  # includes range errors raised by model configs
                raise ConfigError(f"[{name}] {exc}") from None
        return self

    def to_dict(self) -> dict:
        return {name: {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(getattr(self, name)).items()}
                for name in SECTIONS}

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        unknown = set(doc) - set(SECTIONS)
        if unknown:
            raise ConfigError(f"unknown config section(s) {sorted(unknown)}")
        parts = {}
        for name, section_cls in SECTIONS.items():
            values = doc.get(name, {})
            if not isinstance(values, dict):
                raise ConfigError(f"[{name}] must be a table")
            parts[name] = _build_section(name, section_cls, values)
        return cls(**parts)

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        try:
            doc = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML: {exc}") from None
        return cls.from_dict(doc)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.loads(text)

    def with_overrides(self, overrides: Sequence[str]) -> "RunConfig":
        """Apply ``section.key=value`` strings; values are parsed as TOML literals, else taken as strings."""
        doc = self.to_dict()
        for item in overrides:
            key, sep, raw = item.partition("=")
            section, dot, name = key.strip().partition(".")
            if not sep or not dot or not name:
                raise ConfigError(f"override {item!r} is not of the form section.key=value")
            if section not in SECTIONS:
                raise ConfigError(f"unknown config section {section!r} in override {item!r}")
            doc[section][name] = _parse_value(raw.strip())
        return RunConfig.from_dict(doc)


def _parse_value(raw: str):
    try:
        return tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        return raw


def _build_section(name: str, section_cls, values: dict):
    known = {f.name: f for f in fields(section_cls)}
    unknown = set(values) - set(known)
    if unknown:
        raise ConfigError(f"[{name}] unknown key(s) {sorted(unknown)}")
    default = section_cls()
    kwargs = {}
    for key, value in values.items():
        expected = type(getattr(default, key))
        if expected is dict:
            if not isinstance(value, dict):
                raise ConfigError(f"{name}.{key} must be a table, got {value!r}")
            value = {str(k): str(v) for k, v in value.items()}
        elif expected is tuple:
            if isinstance(value, str):
                value = [v.strip() for v in value.split(",") if v.strip()]
            if not isinstance(value, (list, tuple)):
                raise ConfigError(f"{name}.{key} must be a list, got {value!r}")
            value = tuple(str(v) for v in value)
        elif expected is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        elif expected is str and isinstance(value, (int, float)) and not isinstance(value, bool):
            value = repr(value)
        if not isinstance(value, expected) or (expected is int and isinstance(value, bool)):
            raise ConfigError(f"{name}.{key} must be {expected.__name__}, got {value!r}")
        kwargs[key] = value
    return replace(default, **kwargs)


def load_config(path=None, overrides: Sequence[str] = ()) -> RunConfig:
    cfg = RunConfig.load(path) if path is not None else RunConfig()
    return cfg.with_overrides(overrides).validate()
