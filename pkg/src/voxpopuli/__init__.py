"""Forecast combination and two-piece / asymmetric Student-t fitting for crowd estimates."""

__version__ = "0.1.0"

from .combination import combine, combine_mean, combine_median, combine_trimmed, outcome_rank
from .dataset import EntrySet, histogram, ingest, percentile, percentile_table, to_pounds
from .distributions import AstParams, ModelKind, NormalParams, TwoPieceNormalParams
from .estimation import FitOptions, FitResult, fit_mle, model_select, moment_summary

__all__ = [
    "AstParams",
    "EntrySet",
    "FitOptions",
    "FitResult",
    "ModelKind",
    "NormalParams",
    "TwoPieceNormalParams",
    "combine",
    "combine_mean",
    "combine_median",
    "combine_trimmed",
    "fit_mle",
    "histogram",
    "ingest",
    "model_select",
    "moment_summary",
    "outcome_rank",
    "percentile",
    "percentile_table",
    "to_pounds",
]
