import pytest

from pvstack.config import RunConfig, load_config
from pvstack.errors import ConfigError
from pvstack.ingest import DEFAULT_COLUMNS, SplitSpec


def test_defaults_validate_and_match_default_split():
    cfg = RunConfig().validate()
    assert cfg.split.spec() == SplitSpec.default()
    assert cfg.knn.k == 300 and cfg.knn.bandwidth_value() == "median"
    assert cfg.features.features == ("TCC", "SSRD", "STRD", "TSR", "TP")
    assert cfg.ensemble.members == ("knn", "qrf", "svr")


def test_toml_round_trip(tmp_path):
    cfg = RunConfig().with_overrides(["knn.k=17", "svr.nu=0.3", "data.columns={a=\"TCC\"}"])
    path = tmp_path / "c.toml"
    path.write_text(cfg.dumps())
    assert RunConfig.load(path) == cfg


def test_override_types():
    cfg = RunConfig().with_overrides([
        "svr.c=2",                       # int promoted to float
        "knn.bandwidth=0.25",            # number stored as text
        "features.features=SSRD,TCC",    # comma list
        "run.output_dir=results/a",      # bare string
    ])
    assert cfg.svr.c == 2.0 and isinstance(cfg.svr.c, float)
    assert cfg.knn.bandwidth_value() == 0.25
    assert cfg.features.features == ("SSRD", "TCC")
    assert cfg.run.output_dir == "results/a"


@pytest.mark.parametrize("override", [
    "knn.k=0",
    "svr.nu=1.5",
    "qrf.quantile=0",
    "nn.refit_window=\"month\"",
    "data.capacity=0",
    "features.features=SSRD,GHI",
    "knn.bandwidth=wide",
    'split.train_end="2012-01-01T00:00"',
])
def test_invalid_values_are_config_errors(override):
    with pytest.raises(ConfigError):
        load_config(overrides=[override])


@pytest.mark.parametrize("override", ["knn.k=\"three\"", "nope.k=1", "knn.nope=1", "knn.k", "qrf.bootstrap=1"])
def test_malformed_overrides(override):
    with pytest.raises(ConfigError):
        RunConfig().with_overrides([override])


def test_bad_toml_and_missing_file(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[knn\nk = 3")
    with pytest.raises(ConfigError):
        RunConfig.load(bad)
    with pytest.raises(ConfigError):
        RunConfig.load(tmp_path / "absent.toml")
    with pytest.raises(ConfigError):
        RunConfig.loads("[extra]\na = 1")


def test_column_map():
    assert RunConfig().data.column_map() == dict(DEFAULT_COLUMNS)
    cols = {f"c{i}": v for i, v in enumerate(DEFAULT_COLUMNS.values())}
    custom = RunConfig.from_dict({"data": {"columns": cols}}).validate()
    assert custom.data.column_map() == cols
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"data": {"columns": {"c0": "TCC"}}}).validate()


def test_model_configs_follow_sections():
    cfg = RunConfig().with_overrides(["qrf.mtry=0", "qrf.n_trees=7", "svr.convention=\"c\""])
    q = cfg.qrf.model_config(seed=5)
    assert (q.n_trees, q.mtry, q.seed) == (7, None, 5)
    assert cfg.svr.model_config().convention == "c"
