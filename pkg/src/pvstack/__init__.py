"""Day-ahead PV power forecasting: kNN, quantile regression forest, nu-SVR and a
small Bayesian-regularized network, blended by least-squares stacking."""

from .dataset import Dataset
from .ensemble import EnsembleWeights, ensemble_predict, fit_weights
from .errors import ConfigError, DataError, NumericalError, PvStackError
from .knn import KnnModel, knn_fit, knn_predict
from .metrics import ErrorReport, daily_weekly_report, nmae
from .nn import NnModel, NnTrainConfig, nn_fit, nn_predict, nn_refit_weekly
from .qrf import QrfConfig, QrfModel, qrf_fit, qrf_predict
from .svr import SvrConfig, SvrModel, svr_fit, svr_predict

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DataError", "Dataset", "EnsembleWeights", "ErrorReport", "KnnModel", "NnModel",
    "NnTrainConfig", "NumericalError", "PvStackError", "QrfConfig", "QrfModel", "SvrConfig", "SvrModel",
    "daily_weekly_report", "ensemble_predict", "fit_weights", "knn_fit", "knn_predict", "nmae", "nn_fit",
    "nn_predict", "nn_refit_weekly", "qrf_fit", "qrf_predict", "svr_fit", "svr_predict",
]
