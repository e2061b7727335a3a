"""Sticky HDP-HMM with joint projected and skew normal emissions."""

from ._core import (
    DomainError,
    NumericalError,
    ValidationError,
    ape,
    circular_mean,
    fisher_corr,
    fit,
    ingest,
    linear_moments,
    mardia_r2,
    mse,
    sample_jpsn,
    simulate,
    summarize,
    verify,
)

__all__ = [
    "DomainError",
    "NumericalError",
    "ValidationError",
    "ape",
    "circular_mean",
    "fisher_corr",
    "fit",
    "ingest",
    "linear_moments",
    "mardia_r2",
    "mse",
    "sample_jpsn",
    "simulate",
    "summarize",
    "verify",
]
