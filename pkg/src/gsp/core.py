"""Consumer types, GSP models and exact choice-probability evaluation.

Alternatives are the integers ``1..N``; ``0`` is the no-choice outcome and
never appears inside a sequence or an assortment. Assortments are canonical
ascending tuples of ids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, permutations
from typing import Iterable, Mapping, Sequence

Assortment = tuple[int, ...]

NO_CHOICE = 0
WEIGHT_TOL = 1e-9
RENORMALIZE_TOL = 1e-6
TABLE_TOL = 1e-9


class GSPError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(GSPError, ValueError):
    """Input violates a documented invariant."""


class CapExceededError(GSPError):
    """A problem is larger than the configured enumeration/solver cap."""


def make_assortment(members: Iterable[int], universe_size: int | None = None) -> Assortment:
    """Return the canonical (sorted, duplicate-free) form of an offer set."""
    items = [int(m) for m in members]
    if len(set(items)) != len(items):
        raise ValidationError(f"assortment {items} has duplicate members")
    for m in items:
        if m < 1:
            raise ValidationError(f"assortment {items} contains invalid id {m}")
        if universe_size is not None and m > universe_size:
            raise ValidationError(f"assortment {items} has id {m} outside 1..{universe_size}")
    return tuple(sorted(items))


def all_subsets(universe_size: int) -> list[Assortment]:
    """Every non-empty subset of ``1..N``, by cardinality then lexicographically."""
    ids = range(1, universe_size + 1)
    return [s for k in range(1, universe_size + 1) for s in combinations(ids, k)]


def restrict(sequence: Sequence[int], assortment: Iterable[int]) -> tuple[int, ...]:
    """Subsequence of ``sequence`` made of the entries offered in ``assortment``."""
    offered = set(assortment)
    return tuple(x for x in sequence if x in offered)


@dataclass(frozen=True, order=True)
class ConsumerType:
    """A preference sequence plus the position the consumer picks from it.

    Position 0 means the consumer never buys; position ``i >= 1`` picks the
    ``i``-th offered element of ``sequence`` (1-indexed), or nothing when
    fewer than ``i`` elements are offered.
    """

    sequence: tuple[int, ...]
    position: int

    def __post_init__(self) -> None:
        seq = tuple(int(x) for x in self.sequence)
        object.__setattr__(self, "sequence", seq)
        if not seq:
            raise ValidationError("consumer type sequence must be non-empty")
        if len(set(seq)) != len(seq):
            raise ValidationError(f"sequence {seq} repeats an alternative")
        if min(seq) < 1:
            raise ValidationError(f"sequence {seq} contains an id < 1")
        if not 0 <= self.position <= len(seq):
            raise ValidationError(
                f"position {self.position} outside 0..{len(seq)} for sequence {seq}"
            )

    def choose(self, assortment: Iterable[int]) -> int:
        return choose(self, assortment)

    @property
    def rational(self) -> bool:
        return self.position <= 1

    def __str__(self) -> str:
        return f"(({','.join(map(str, self.sequence))}),{self.position})"


def choose(t: ConsumerType, assortment: Iterable[int]) -> int:
    """Alternative picked by type ``t`` when offered ``assortment`` (0 = none)."""
    i = t.position
    if i == 0:
        return NO_CHOICE
    offered = assortment if isinstance(assortment, (set, frozenset)) else set(assortment)
    seen = 0
    for x in t.sequence:
        if x in offered:
            seen += 1
            if seen == i:
                return x
    return NO_CHOICE


def is_rational(t: ConsumerType) -> bool:
    """Rational types always take their top offered alternative, or never buy."""
    return t.position in (0, 1)


def enumerate_types(universe_size: int, max_seq_len: int | None = None) -> list[ConsumerType]:
    """All consumer types over ``1..N`` with sequences of length ``<= max_seq_len``.

    Order: sequence length, then sequence content lexicographically, then
    position ascending.
    """
    if universe_size < 1:
        raise ValidationError(f"universe size must be >= 1, got {universe_size}")
    cap = universe_size if max_seq_len is None else max_seq_len
    if not 1 <= cap <= universe_size:
        raise ValidationError(f"max_seq_len must be in 1..{universe_size}, got {cap}")
    out = []
    ids = range(1, universe_size + 1)
    for k in range(1, cap + 1):
        for seq in permutations(ids, k):
            out.extend(ConsumerType(seq, i) for i in range(k + 1))
    return out


def count_types(universe_size: int, max_seq_len: int | None = None) -> int:
    """Size of the type space: sum over k of N!/(N-k)! * (k+1)."""
    cap = universe_size if max_seq_len is None else max_seq_len
    return sum(math.perm(universe_size, k) * (k + 1) for k in range(1, cap + 1))


@dataclass(frozen=True)
class GSPModel:
    """Finitely supported distribution over consumer types.

    Construction merges duplicate types, drops zero weights and renormalizes
    weights whose total is within 1e-6 of one. Anything further off is
    rejected.
    """

    atoms: tuple[tuple[ConsumerType, float], ...]
    universe_size: int

    def __post_init__(self) -> None:
        n = int(self.universe_size)
        if n < 1:
            raise ValidationError(f"universe size must be >= 1, got {n}")
        merged: dict[ConsumerType, float] = {}
        for k, (t, w) in enumerate(self.atoms):
            if not isinstance(t, ConsumerType):
                t = ConsumerType(*t)
            w = float(w)
            if not math.isfinite(w) or w < 0:
                raise ValidationError(f"atom[{k}] {t}: weight {w} must be finite and >= 0")
            if max(t.sequence) > n:
                raise ValidationError(f"atom[{k}] {t}: id outside 1..{n}")
            merged[t] = merged.get(t, 0.0) + w
        atoms = [(t, w) for t, w in merged.items() if w > 0]
        total = math.fsum(w for _, w in atoms)
        if not atoms or abs(total - 1.0) > RENORMALIZE_TOL:
            raise ValidationError(f"weights sum to {total}, expected 1")
        if abs(total - 1.0) > WEIGHT_TOL:
            atoms = [(t, w / total) for t, w in atoms]
        object.__setattr__(self, "atoms", tuple(atoms))
        object.__setattr__(self, "universe_size", n)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[Sequence[int], int, float]], universe_size: int) -> GSPModel:
        """Build from ``(sequence, position, weight)`` triples."""
        return cls(tuple((ConsumerType(tuple(s), i), w) for s, i, w in pairs), universe_size)

    @property
    def types(self) -> list[ConsumerType]:
        return [t for t, _ in self.atoms]

    @property
    def weights(self) -> list[float]:
        return [w for _, w in self.atoms]

    @property
    def irrational_mass(self) -> float:
        return math.fsum(w for t, w in self.atoms if not is_rational(t))

    def __len__(self) -> int:
        return len(self.atoms)

    def distribution(self, assortment: Iterable[int]) -> dict[int, float]:
        """Choice probabilities over ``assortment`` and 0, in one pass over the atoms."""
        S = make_assortment(assortment, self.universe_size)
        offered = set(S)
        acc: dict[int, list[float]] = {x: [] for x in (NO_CHOICE, *S)}
        for t, w in self.atoms:
            acc[choose(t, offered)].append(w)
        return {x: min(math.fsum(ws), 1.0) for x, ws in acc.items()}


def choice_prob(model: GSPModel, x: int, assortment: Iterable[int]) -> float:
    """Probability that a consumer drawn from ``model`` picks ``x`` from ``assortment``."""
    S = make_assortment(assortment, model.universe_size)
    if x != NO_CHOICE and x not in S:
        raise ValidationError(f"alternative {x} is not offered in {S}")
    offered = set(S)
    return math.fsum(w for t, w in model.atoms if choose(t, offered) == x)


class ChoiceTable:
    """Choice probabilities ``P(x, S)`` for a family of assortments.

    ``rows`` maps each canonical assortment to a dict over its members and 0.
    A missing 0 entry is filled in as ``1 - sum``; a present one must agree
    with it to within 1e-9.
    """

    def __init__(self, universe_size: int, rows: Mapping[Iterable[int], Mapping[int, float]],
                 tol: float = TABLE_TOL):
        self.universe_size = int(universe_size)
        if self.universe_size < 1:
            raise ValidationError(f"universe size must be >= 1, got {universe_size}")
        self._rows: dict[Assortment, dict[int, float]] = {}
        for key, shares in rows.items():
            S = make_assortment(key, self.universe_size)
            if not S:
                raise ValidationError("empty assortment in table")
            if S in self._rows:
                raise ValidationError(f"assortment {list(S)} appears twice")
            self._rows[S] = _validated_row(S, shares, tol)

    @property
    def rows(self) -> dict[Assortment, dict[int, float]]:
        return self._rows

    @property
    def assortments(self) -> list[Assortment]:
        return list(self._rows)

    def __contains__(self, assortment) -> bool:
        return tuple(sorted(assortment)) in self._rows

    def __len__(self) -> int:
        return len(self._rows)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ChoiceTable):
            return NotImplemented
        return self.universe_size == other.universe_size and self._rows == other._rows

    def __repr__(self) -> str:
        return f"ChoiceTable(N={self.universe_size}, rows={len(self._rows)})"

    def prob(self, x: int, assortment: Iterable[int]) -> float:
        S = tuple(sorted(assortment))
        row = self._rows[S]
        if x not in row:
            if x in range(1, self.universe_size + 1):
                return 0.0
            raise ValidationError(f"alternative {x} outside 0..{self.universe_size}")
        return row[x]

    def purchase_prob(self, assortment: Iterable[int]) -> float:
        """Probability of buying anything from ``assortment``."""
        row = self._rows[tuple(sorted(assortment))]
        return math.fsum(p for x, p in row.items() if x != NO_CHOICE)

    def is_complete(self) -> bool:
        return set(self._rows) == set(all_subsets(self.universe_size))

    def max_abs_diff(self, other: ChoiceTable) -> float:
        """Largest entrywise gap over the rows of ``self`` (must exist in ``other``)."""
        gap = 0.0
        for S, row in self._rows.items():
            for x, p in row.items():
                gap = max(gap, abs(p - other.prob(x, S)))
        return gap


def _validated_row(S: Assortment, shares: Mapping, tol: float) -> dict[int, float]:
    row: dict[int, float] = {}
    for key, value in shares.items():
        x = int(key)
        p = float(value)
        if x != NO_CHOICE and x not in S:
            raise ValidationError(f"row {list(S)}: alternative {x} is not offered")
        if not math.isfinite(p) or p < -tol or p > 1 + tol:
            raise ValidationError(f"row {list(S)}: probability {p} for {x} outside [0, 1]")
        row[x] = min(max(p, 0.0), 1.0)
    bought = math.fsum(row.get(x, 0.0) for x in S)
    if bought > 1 + tol:
        raise ValidationError(f"row {list(S)}: purchase probabilities sum to {bought} > 1")
    none = max(0.0, 1.0 - bought)
    if NO_CHOICE in row and abs(row[NO_CHOICE] - none) > tol:
        raise ValidationError(
            f"row {list(S)}: no-choice probability {row[NO_CHOICE]} != 1 - {bought}"
        )
    out = {NO_CHOICE: row.get(NO_CHOICE, none)}
    out.update({x: row.get(x, 0.0) for x in S})
    return out


def choice_table(model: GSPModel, assortments: Iterable[Iterable[int]]) -> ChoiceTable:
    """Evaluate ``model`` on every assortment in ``assortments``."""
    keys = [make_assortment(S, model.universe_size) for S in assortments]
    if not keys:
        raise ValidationError("need at least one assortment")
    return ChoiceTable(model.universe_size, {S: model.distribution(S) for S in keys})


def ranked_list_to_gsp(rankings: Iterable[tuple[Sequence[int], float]],
                       universe_size: int | None = None) -> GSPModel:
    """Convert a distribution over rankings of ``1..N`` and 0 into rational types.

    A consumer with a ranking buys the first offered alternative ranked above
    0 and nothing otherwise. The prefix before 0 becomes a position-1 type;
    a ranking that starts with 0 becomes the position-0 type on the full
    remaining order.
    """
    atoms = []
    n = universe_size
    for k, (ranking, w) in enumerate(rankings):
        ranking = tuple(int(x) for x in ranking)
        size = len(ranking) - 1
        if n is None:
            n = size
        if size != n or sorted(ranking) != list(range(n + 1)):
            raise ValidationError(f"ranking[{k}] {ranking} is not a permutation of 0..{n}")
        cut = ranking.index(NO_CHOICE)
        if cut == 0:
            atoms.append((ConsumerType(ranking[1:], 0), w))
        else:
            atoms.append((ConsumerType(ranking[:cut], 1), w))
    if n is None:
        raise ValidationError("no rankings given")
    return GSPModel(tuple(atoms), n)


def first_available(ranking: Sequence[int], assortment: Iterable[int]) -> int:
    """First-available choice under a ranking over alternatives and 0."""
    offered = set(assortment) | {NO_CHOICE}
    for x in ranking:
        if x in offered:
            return x
    return NO_CHOICE
