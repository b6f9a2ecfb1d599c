"""Assortment optimization under a GSP model.

Exact search enumerates every non-empty offer set. The revenue-ordered
heuristic only tries the nested sets "everything priced at least r" for each
distinct revenue level. Under a GSP it is guaranteed ``r_min / r_max`` of the
optimum, and no better.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping

from gsp.core import Assortment, CapExceededError, GSPModel, ValidationError, make_assortment

EXACT = "exact"
REVENUE_ORDERED = "revenue-ordered"
EXACT_CAP = 20
TIE_TOL = 1e-12


@dataclass(frozen=True)
class RevenueFunction:
    """Strictly positive revenue for each alternative ``1..N``."""

    values: Mapping[int, float]

    def __post_init__(self):
        vals = {int(k): float(v) for k, v in dict(self.values).items()}
        if not vals:
            raise ValidationError("revenue function is empty")
        for k, v in vals.items():
            if k < 1:
                raise ValidationError(f"revenue given for invalid alternative {k}")
            if not math.isfinite(v) or v <= 0:
                raise ValidationError(f"revenue for alternative {k} must be > 0, got {v}")
        missing = sorted(set(range(1, max(vals) + 1)) - set(vals))
        if missing:
            raise ValidationError(f"no revenue for alternative(s) {missing}")
        object.__setattr__(self, "values", dict(sorted(vals.items())))

    @classmethod
    def from_list(cls, revenues: Iterable[float]) -> RevenueFunction:
        return cls({i + 1: r for i, r in enumerate(revenues)})

    def __getitem__(self, i: int) -> float:
        return self.values[i]

    @property
    def universe_size(self) -> int:
        return len(self.values)

    @property
    def levels(self) -> list[float]:
        """Distinct revenue values, increasing."""
        return sorted(set(self.values.values()))

    def check_covers(self, universe_size: int) -> None:
        if self.universe_size != universe_size:
            raise ValidationError(
                f"revenues cover alternatives 1..{self.universe_size}, model has N={universe_size}")


@dataclass(frozen=True)
class AssortmentSolution:
    assortment: Assortment
    expected_revenue: float
    method: str
    candidates_evaluated: int


def expected_revenue(model: GSPModel, assortment: Iterable[int], revenue: RevenueFunction) -> float:
    S = make_assortment(assortment, model.universe_size)
    if not S:
        raise ValidationError("assortment must be non-empty")
    dist = model.distribution(S)
    return math.fsum(dist[i] * revenue[i] for i in S)


def _best(model, revenue, candidates, method) -> AssortmentSolution:
    best_S, best_rev, count = None, -math.inf, 0
    for S in candidates:
        count += 1
        rev = expected_revenue(model, S, revenue)
        if rev > best_rev + TIE_TOL:
            best_S, best_rev = S, rev
    return AssortmentSolution(best_S, best_rev, method, count)


def optimal_assortment(model: GSPModel, revenue: RevenueFunction, cap: int = EXACT_CAP) -> AssortmentSolution:
    """Brute force over all ``2^N - 1`` offer sets.

    Ties (within 1e-12) go to the smaller set, then the lexicographically
    first one.
    """
    N = model.universe_size
    revenue.check_covers(N)
    if N > cap:
        raise CapExceededError(f"exact assortment search needs 2^{N} - 1 evaluations (cap N <= {cap})")
    ids = range(1, N + 1)
    candidates = (S for k in range(1, N + 1) for S in combinations(ids, k))
    return _best(model, revenue, candidates, EXACT)


def revenue_ordered_sets(revenue: RevenueFunction) -> list[Assortment]:
    """``S_i`` = products with revenue at least the ``i``-th smallest level."""
    return [tuple(k for k, v in revenue.values.items() if v >= r) for r in revenue.levels]


def revenue_ordered(model: GSPModel, revenue: RevenueFunction) -> AssortmentSolution:
    """Best of the nested revenue-ordered sets; ties favour the larger set."""
    revenue.check_covers(model.universe_size)
    return _best(model, revenue, revenue_ordered_sets(revenue), REVENUE_ORDERED)


@dataclass(frozen=True)
class RatioReport:
    heuristic: AssortmentSolution
    optimal: AssortmentSolution
    ratio: float
    bound: float

    @property
    def heuristic_revenue(self) -> float:
        return self.heuristic.expected_revenue

    @property
    def optimal_revenue(self) -> float:
        return self.optimal.expected_revenue

    def to_dict(self) -> dict:
        return {
            "heuristic": solution_to_dict(self.heuristic),
            "optimal": solution_to_dict(self.optimal),
            "ratio": self.ratio,
            "bound": self.bound,
        }

    def to_text(self) -> str:
        rows = [("method", "assortment", "revenue"),
                ("exact", _fmt_set(self.optimal.assortment), f"{self.optimal_revenue:.6g}"),
                ("revenue-ordered", _fmt_set(self.heuristic.assortment), f"{self.heuristic_revenue:.6g}")]
        widths = [max(len(r[c]) for r in rows) for c in range(3)]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
        lines.append(f"ratio {self.ratio:.6g}  (guaranteed >= r1/rk = {self.bound:.6g})")
        return "\n".join(lines)


def _fmt_set(S) -> str:
    return "{" + ",".join(map(str, S)) + "}"


def solution_to_dict(sol: AssortmentSolution) -> dict:
    return {"assortment": list(sol.assortment), "expected_revenue": sol.expected_revenue,
            "method": sol.method, "candidates_evaluated": sol.candidates_evaluated}


def ratio_report(model: GSPModel, revenue: RevenueFunction, cap: int = EXACT_CAP) -> RatioReport:
    """Heuristic vs. exact revenue, with the ``r_min / r_max`` guarantee.

    When the optimum is zero, so is the heuristic and the ratio is reported as 1.
    """
    opt = optimal_assortment(model, revenue, cap)
    heur = revenue_ordered(model, revenue)
    levels = revenue.levels
    ratio = 1.0 if opt.expected_revenue <= 0 else heur.expected_revenue / opt.expected_revenue
    return RatioReport(heur, opt, ratio, levels[0] / levels[-1])

