"""Generalized stochastic preference (GSP) choice models.

A GSP model is a probability distribution over consumer types ``(l, i)``:
offered an assortment, a type picks the ``i``-th alternative of its
sequence ``l`` that is on offer. Types with ``i > 1`` can produce regularity
violations such as decoy effects.
"""

from gsp.assortment import RevenueFunction, optimal_assortment, ratio_report, revenue_ordered
from gsp.core import (
    NO_CHOICE,
    CapExceededError,
    ChoiceTable,
    ConsumerType,
    GSPError,
    GSPModel,
    ValidationError,
    choice_prob,
    choice_table,
    choose,
    enumerate_types,
    is_rational,
    ranked_list_to_gsp,
)
from gsp.estimation import ChoiceDataset, FitConfig, FitResult, fit

__all__ = [
    "NO_CHOICE", "CapExceededError", "ChoiceDataset", "ChoiceTable", "ConsumerType",
    "FitConfig", "FitResult", "GSPError", "GSPModel", "RevenueFunction", "ValidationError",
    "choice_prob", "choice_table", "choose", "enumerate_types", "fit", "is_rational",
    "optimal_assortment", "ranked_list_to_gsp", "ratio_report", "revenue_ordered",
]
__version__ = "0.1.0"
