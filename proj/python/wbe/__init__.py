"""Wastewater viral load pipeline."""

import json

from ._core import (
    AdfResult,
    ArFit,
    ConfigError,
    DataError,
    NumericError,
    adf_test,
    ar_fit,
    boxcox,
    boxcox_mle,
    inverse_boxcox,
    loess,
    msim,
    pearson_r,
    r_squared,
    rmse,
    ses_forecast,
    significance_threshold,
    sma_loocv,
)
from ._core import run as _run
from ._core import synthesize as _synthesize


def _strings(overrides):
    return {k: str(v) for k, v in (overrides or {}).items()}


def synthesize(config="", overrides=None, seed=None):
    """Synthetic campaign as input CSV text."""
    return _synthesize(config, _strings(overrides), seed)


def run(csv, config="", overrides=None, seed=None, stage="forecast", allow_raw=False):
    """Run the pipeline on CSV text; the report comes back parsed."""
    out = _run(csv, config, _strings(overrides), seed, stage, allow_raw)
    out["report"] = json.loads(out["report"])
    return out


__all__ = [
    "AdfResult", "ArFit", "ConfigError", "DataError", "NumericError", "adf_test", "ar_fit", "boxcox",
    "boxcox_mle", "inverse_boxcox", "loess", "msim", "pearson_r", "r_squared", "rmse", "run",
    "ses_forecast", "significance_threshold", "sma_loocv", "synthesize",
]
