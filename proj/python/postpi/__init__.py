"""Inference on regression coefficients when outcomes are model predictions."""

from ._postpi import (
    RankDeficientError,
    critical_value,
    estimate,
    fit_relationship,
    methods,
    replicate_data,
    simulate,
)

__all__ = [
    "RankDeficientError",
    "critical_value",
    "estimate",
    "fit_relationship",
    "methods",
    "replicate_data",
    "simulate",
]
