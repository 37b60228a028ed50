"""Nonlinear regressors and their feature machinery.

Every estimator follows the fit/predict/get_params convention, so anything
accepting that duck type (the hybrid combiner, the grid search) composes
with stubs and with the wider estimator ecosystem alike.
"""
from .features import FeatureMatrix, make_lag_features, make_sequences
from .gbt import GbtRegressor
from .lstm import LstmRegressor
from .svr import SvrRegressor

__all__ = [
    "FeatureMatrix",
    "make_lag_features",
    "make_sequences",
    "SvrRegressor",
    "GbtRegressor",
    "LstmRegressor",
]
