"""Hybrid econometric / machine-learning return forecasting and backtesting."""

__version__ = "0.1.0"
