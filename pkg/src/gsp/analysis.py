"""Structural diagnostics on choice tables.

Regularity, monotone total demand, the precedence relation behind random
attention models, and exact GSP membership decided by an LP with a Farkas
certificate on failure.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from gsp.core import (
    NO_CHOICE,
    Assortment,
    ChoiceTable,
    ConsumerType,
    GSPModel,
    ValidationError,
    all_subsets,
    choice_table,
    choose,
    count_types,
    enumerate_types,
)
from gsp.solver import LinearFeasibilityProblem, certificate_is_valid, solve_feasibility

STRICT_TOL = 1e-9
WITNESS_TOL = 1e-7
MEMBERSHIP_CAP = 5

IN_GSP = "in_gsp"
NOT_IN_GSP = "not_in_gsp"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class RegularityViolation:
    alternative: int
    smaller_set: Assortment
    larger_set: Assortment
    p_small: float
    p_large: float

    def __str__(self) -> str:
        return (f"P({self.alternative}, {set(self.smaller_set)}) = {self.p_small:.4g} < "
                f"P({self.alternative}, {set(self.larger_set)}) = {self.p_large:.4g}")


def _proper_subset_pairs(table: ChoiceTable):
    rows = table.assortments
    sets = {S: frozenset(S) for S in rows}
    for small in rows:
        for large in rows:
            if len(small) < len(large) and sets[small] < sets[large]:
                yield small, large


def check_regularity(table: ChoiceTable, tol: float = STRICT_TOL) -> list[RegularityViolation]:
    """Triples ``(x, S, S')`` with ``S`` a proper subset of ``S'`` and ``P(x, S') > P(x, S) + tol``.

    Only alternatives ``x in S`` are checked; the no-choice outcome is the
    business of :func:`check_demand_monotonicity`.
    """
    out = []
    for small, large in _proper_subset_pairs(table):
        for x in small:
            p_s, p_l = table.prob(x, small), table.prob(x, large)
            if p_l > p_s + tol:
                out.append(RegularityViolation(x, small, large, p_s, p_l))
    return out


def check_demand_monotonicity(table: ChoiceTable, tol: float = STRICT_TOL) -> list[tuple[Assortment, Assortment]]:
    """Pairs ``S`` subset of ``S'`` where total purchase probability drops."""
    return [
        (small, large)
        for small, large in _proper_subset_pairs(table)
        if table.purchase_prob(small) > table.purchase_prob(large) + tol
    ]


@dataclass
class PrecedenceRelation:
    """``(x, y)`` is an edge when dropping ``y`` from some ``S`` strictly lowers ``P(x, S)``.

    ``witness[(x, y)]`` is the first such ``S`` found (canonical row order);
    ``missing`` lists ``(S, S - {y})`` pairs skipped because a row was absent.
    """

    edges: set[tuple[int, int]] = field(default_factory=set)
    witness: dict[tuple[int, int], Assortment] = field(default_factory=dict)
    missing: list[tuple[Assortment, Assortment]] = field(default_factory=list)

    def successors(self, x: int) -> list[int]:
        return sorted(b for a, b in self.edges if a == x)


def ram_relation(table: ChoiceTable, tol: float = STRICT_TOL) -> PrecedenceRelation:
    rel = PrecedenceRelation()
    for S in sorted(table.assortments, key=lambda s: (len(s), s)):
        if len(S) < 2:
            continue
        for y in S:
            smaller = tuple(a for a in S if a != y)
            if smaller not in table:
                rel.missing.append((S, smaller))
                continue
            for x in smaller:
                if table.prob(x, smaller) < table.prob(x, S) - tol and (x, y) not in rel.edges:
                    rel.edges.add((x, y))
                    rel.witness[(x, y)] = S
    return rel


def find_cycle(edges: Iterable[tuple[int, int]]) -> list[int] | None:
    """Shortest directed cycle, as a node list starting at its smallest node.

    Among shortest cycles the one found from the smallest start node (BFS
    with sorted neighbours) is returned.
    """
    adj: dict[int, list[int]] = {}
    for a, b in edges:
        adj.setdefault(a, []).append(b)
    for nbrs in adj.values():
        nbrs.sort()
    best = None
    for start in sorted(adj):
        parent = {start: None}
        queue = deque([start])
        found = None
        while queue and found is None:
            node = queue.popleft()
            for nxt in adj.get(node, ()):
                if nxt == start:
                    found = node
                    break
                if nxt not in parent and nxt > start:
                    parent[nxt] = node
                    queue.append(nxt)
        if found is not None:
            path = []
            node = found
            while node is not None:
                path.append(node)
                node = parent[node]
            cycle = path[::-1]
            if best is None or len(cycle) < len(best):
                best = cycle
    return best


@dataclass(frozen=True)
class RamVerdict:
    """``is_ram`` is None when the table is too partial to decide."""

    is_ram: bool | None
    cycle: list[int] | None
    relation: PrecedenceRelation

    @property
    def determined(self) -> bool:
        return self.is_ram is not None


def ram_membership(table: ChoiceTable, tol: float = STRICT_TOL) -> RamVerdict:
    """Random-attention representability via acyclicity of the precedence relation.

    A cycle among observed rows rules RAM out even for a partial table, since
    observed edges are edges of the full relation. Absence of a cycle only
    decides membership when every non-empty subset has a row.
    """
    rel = ram_relation(table, tol)
    cycle = find_cycle(rel.edges)
    if cycle is not None:
        return RamVerdict(False, cycle, rel)
    if not table.is_complete():
        return RamVerdict(None, None, rel)
    return RamVerdict(True, None, rel)


@dataclass(frozen=True)
class MembershipVerdict:
    status: str
    model: GSPModel | None = None
    certificate: np.ndarray | None = None
    derivation: str = ""
    reason: str = ""
    problem: LinearFeasibilityProblem | None = None
    row_labels: list[str] | None = None

    @property
    def in_gsp(self) -> bool:
        return self.status == IN_GSP


def behavior_classes(types: list[ConsumerType], assortments: list[Assortment]) -> list[list[int]]:
    """Group type indices by identical choices on ``assortments``.

    Classes are ordered by their first member; members keep input order.
    """
    groups: dict[tuple[int, ...], list[int]] = {}
    for k, t in enumerate(types):
        key = tuple(choose(t, S) for S in assortments)
        groups.setdefault(key, []).append(k)
    return list(groups.values())


def _membership_rows(N: int) -> list[tuple[int, Assortment]]:
    return [(x, S) for S in all_subsets(N) for x in (NO_CHOICE, *S)]


def membership_system(table: ChoiceTable, types: list[ConsumerType] | None = None):
    """Exact-fit system: one row per ``(x, S)`` with ``x in S + {0}``, plus sum-to-one.

    Returns ``(problem, classes, types, labels)`` where column ``c`` of the
    problem stands for the behaviour class ``classes[c]`` of ``types``.
    """
    N = table.universe_size
    if types is None:
        types = enumerate_types(N)
    subsets = all_subsets(N)
    classes = behavior_classes(types, subsets)
    rows = _membership_rows(N)
    row_pos = {r: k for k, r in enumerate(rows)}
    A = np.zeros((len(rows) + 1, len(classes)))
    for c, members in enumerate(classes):
        t = types[members[0]]
        for S in subsets:
            A[row_pos[(choose(t, S), S)], c] = 1.0
    A[-1] = 1.0
    b = np.array([table.prob(x, S) for x, S in rows] + [1.0])
    labels = [f"P({x}|{{{','.join(map(str, S))}}})" for x, S in rows] + ["sum of weights"]
    return LinearFeasibilityProblem(A, b), classes, types, labels


def gsp_membership(table: ChoiceTable, universe_size: int | None = None,
                   cap: int = MEMBERSHIP_CAP) -> MembershipVerdict:
    """Decide whether some distribution over consumer types reproduces ``table`` exactly."""
    N = table.universe_size if universe_size is None else universe_size
    if N != table.universe_size:
        raise ValidationError(f"table is over N={table.universe_size}, not {N}")
    if N > cap:
        return MembershipVerdict(UNKNOWN, reason="universe too large for exact membership "
                                 f"(N={N} > cap {cap}; {count_types(N)} consumer types)")
    if not table.is_complete():
        return MembershipVerdict(UNKNOWN, reason="undetermined: table does not cover every "
                                 "non-empty subset")
    problem, classes, types, labels = membership_system(table)
    result = solve_feasibility(problem)
    if result.feasible:
        weights = result.solution
        atoms = tuple((types[classes[c][0]], float(weights[c]))
                      for c in np.flatnonzero(weights > 1e-12))
        model = GSPModel(atoms, N)
        gap = table.max_abs_diff(choice_table(model, table.assortments))
        if gap > WITNESS_TOL:
            return MembershipVerdict(UNKNOWN, reason=f"witness model misses the table by {gap:.3g}")
        return MembershipVerdict(IN_GSP, model=model, problem=problem, row_labels=labels)
    y = result.certificate
    if not certificate_is_valid(problem.matrix, problem.rhs, y):
        return MembershipVerdict(UNKNOWN, reason="solver certificate failed validation")
    return MembershipVerdict(NOT_IN_GSP, certificate=y, problem=problem, row_labels=labels,
                             derivation=_derivation(problem, y, labels))


def _derivation(problem: LinearFeasibilityProblem, y: np.ndarray, labels: list[str]) -> str:
    terms = [f"{y[k]:+.6g} * [{labels[k]}]" for k in np.flatnonzero(np.abs(y) > 1e-12)]
    slack = problem.matrix.T @ y
    lines = [
        "Weighting the exact-fit equations by y:",
        "  " + "\n  ".join(terms),
        f"every consumer-type column scores y.A >= {slack.min():.3g} (non-negative),",
        f"while the right-hand side scores y.b = {problem.rhs @ y:.6g} < 0.",
        "A non-negative combination of the columns cannot reach the table, so no",
        "distribution over consumer types reproduces it (Farkas).",
    ]
    return "\n".join(lines)


# Reduced system used in the hand proof that the 3-alternative deterministic
# table below admits no GSP representation.
COUNTEREXAMPLE_TYPES = [
    ConsumerType((1, 2, 3), 1), ConsumerType((1, 3, 2), 1), ConsumerType((3, 1, 2), 1),
    ConsumerType((2, 3, 1), 1), ConsumerType((2, 1, 3), 1), ConsumerType((3, 2, 1), 1),
    ConsumerType((2, 1, 3), 2), ConsumerType((2, 3, 1), 2), ConsumerType((3, 2, 1), 2),
    ConsumerType((3, 1, 2), 2), ConsumerType((1, 3, 2), 2), ConsumerType((1, 2, 3), 2),
]
COUNTEREXAMPLE_CERTIFICATE = np.array([-1.0, -1.0, -1.0, 2.0])


def counterexample_system() -> LinearFeasibilityProblem:
    """Rows: P(1|{1,2})=1, P(2|{2,3})=1, P(3|{1,3})=1, total weight = 1.

    Columns are the twelve full-length types with position 1 or 2 in
    ``COUNTEREXAMPLE_TYPES`` order.
    """
    targets = [(1, (1, 2)), (2, (2, 3)), (3, (1, 3))]
    A = np.array([[1.0 if choose(t, S) == x else 0.0 for t in COUNTEREXAMPLE_TYPES]
                  for x, S in targets] + [[1.0] * len(COUNTEREXAMPLE_TYPES)])
    return LinearFeasibilityProblem(A, np.ones(4))

