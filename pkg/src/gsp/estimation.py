"""Sparse GSP estimation from aggregate choice shares.

The model is fit by minimizing the Euclidean distance between observed
shares and model probabilities over the probability simplex on a universe
of consumer types. Sparsity comes from an atom budget; irrational types are
discouraged by lowering their selection score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from gsp.core import (
    NO_CHOICE,
    Assortment,
    CapExceededError,
    ChoiceTable,
    ConsumerType,
    GSPModel,
    ValidationError,
    choose,
    count_types,
    enumerate_types,
    is_rational,
    make_assortment,
)
from gsp.solver import nnls_simplex, refit_support

SHARE_TOL = 1e-6
DEFAULT_UNIVERSE_CAP = 6
MAX_TYPES = 250_000


class ChoiceDataset:
    """Observed share vectors ``f[i, S]`` for a family of distinct assortments.

    ``observations`` is a sequence of ``(assortment, shares)`` pairs. Shares
    may omit the no-choice entry, which is then taken as ``1 - sum``.
    """

    def __init__(self, universe_size: int,
                 observations: Iterable[tuple[Iterable[int], Mapping[int, float]]],
                 sample_sizes: Sequence[int | None] | None = None):
        self.universe_size = int(universe_size)
        if self.universe_size < 1:
            raise ValidationError(f"universe size must be >= 1, got {universe_size}")
        self.observations: list[tuple[Assortment, dict[int, float]]] = []
        seen = set()
        for k, (members, shares) in enumerate(observations):
            S = make_assortment(members, self.universe_size)
            if not S:
                raise ValidationError(f"observation {k}: empty assortment")
            if S in seen:
                raise ValidationError(f"observation {k}: assortment {list(S)} repeated")
            seen.add(S)
            self.observations.append((S, _validated_shares(S, shares)))
        if not self.observations:
            raise ValidationError("dataset has no observations")
        if sample_sizes is not None and len(sample_sizes) != len(self.observations):
            raise ValidationError("sample_sizes must have one entry per observation")
        self.sample_sizes = None if sample_sizes is None else list(sample_sizes)

    @classmethod
    def from_table(cls, table: ChoiceTable) -> ChoiceDataset:
        return cls(table.universe_size, list(table.rows.items()))

    def to_table(self) -> ChoiceTable:
        return ChoiceTable(self.universe_size, dict(self.observations), tol=SHARE_TOL)

    @property
    def assortments(self) -> list[Assortment]:
        return [S for S, _ in self.observations]

    def rows(self) -> list[tuple[int, Assortment]]:
        """``(i, S)`` index of the target vector: observation order, ascending ``i``."""
        return [(i, S) for S, _ in self.observations for i in S]

    def target(self) -> np.ndarray:
        return np.array([shares[i] for S, shares in self.observations for i in S])

    def __eq__(self, other) -> bool:
        if not isinstance(other, ChoiceDataset):
            return NotImplemented
        return (self.universe_size == other.universe_size
                and self.observations == other.observations
                and self.sample_sizes == other.sample_sizes)

    def __repr__(self) -> str:
        return f"ChoiceDataset(N={self.universe_size}, observations={len(self.observations)})"


def _validated_shares(S: Assortment, shares: Mapping) -> dict[int, float]:
    row = {}
    for key, value in shares.items():
        x = int(key)
        f = float(value)
        if x != NO_CHOICE and x not in S:
            raise ValidationError(f"assortment {list(S)}: share given for unoffered alternative {x}")
        if not math.isfinite(f) or f < -1e-12 or f > 1 + 1e-12:
            raise ValidationError(f"assortment {list(S)}: share {f} for {x} outside [0, 1]")
        row[x] = min(max(f, 0.0), 1.0)
    bought = math.fsum(row.get(i, 0.0) for i in S)
    none = row.get(NO_CHOICE, max(0.0, 1.0 - bought))
    if abs(bought + none - 1.0) > SHARE_TOL:
        raise ValidationError(f"assortment {list(S)}: shares sum to {bought + none:.6g}, expected 1")
    out = {NO_CHOICE: none}
    out.update({i: row.get(i, 0.0) for i in S})
    return out


@dataclass
class DesignMatrix:
    """0-1 matrix with ``A[(i, S), c] = 1`` iff column ``c``'s types pick ``i`` from ``S``.

    Columns with identical behaviour on the dataset are merged; ``members``
    keeps every merged type and ``types`` its representative (the first
    rational member if any, else the first member).
    """

    matrix: np.ndarray
    rows: list[tuple[int, Assortment]]
    types: list[ConsumerType]
    members: list[list[ConsumerType]]
    rational: np.ndarray

    @property
    def multiplicity(self) -> list[int]:
        return [len(m) for m in self.members]


def build_design_matrix(types: Sequence[ConsumerType], dataset: ChoiceDataset,
                        dedup: bool = True) -> DesignMatrix:
    if not types:
        raise ValidationError("need at least one consumer type")
    N = dataset.universe_size
    for t in types:
        if max(t.sequence) > N:
            raise ValidationError(f"type {t} references an id above N={N}")
    rows = dataset.rows()
    offsets = {}
    pos = 0
    for S in dataset.assortments:
        offsets[S] = pos
        pos += len(S)
    index = [{x: k for k, x in enumerate(S)} for S in dataset.assortments]
    offered = [set(S) for S in dataset.assortments]

    groups: dict[tuple, int] = {}
    columns: list[np.ndarray] = []
    members: list[list[ConsumerType]] = []
    for t in types:
        col = np.zeros(len(rows))
        for S, pos_in, off in zip(dataset.assortments, index, offered):
            x = choose(t, off)
            if x != NO_CHOICE:
                col[offsets[S] + pos_in[x]] = 1.0
        key = col.tobytes()
        if dedup and key in groups:
            members[groups[key]].append(t)
            continue
        groups[key] = len(columns)
        columns.append(col)
        members.append([t])
    reps = [next((t for t in m if is_rational(t)), m[0]) for m in members]
    rational = np.array([is_rational(t) for t in reps])
    return DesignMatrix(np.column_stack(columns), rows, reps, members, rational)


@dataclass(frozen=True)
class FitConfig:
    """Estimation settings.

    ``max_atoms`` is the sparsity budget. ``irrational_penalty`` is subtracted
    from an irrational column's selection score and also weights the count of
    irrational atoms in :func:`loss`. The type universe is ``types`` if
    given, else all types with sequences up to ``max_seq_len`` (full when
    None, which requires ``N <= universe_cap``).
    """

    max_atoms: int = 30
    irrational_penalty: float = 0.0
    tol: float = 1e-9
    norm: str = "l2"
    max_seq_len: int | None = None
    types: tuple[ConsumerType, ...] | None = None
    universe_cap: int = DEFAULT_UNIVERSE_CAP
    max_iter: int = 10_000
    prune_below: float = 1e-6

    def __post_init__(self):
        if self.max_atoms < 1:
            raise ValidationError(f"max_atoms must be >= 1, got {self.max_atoms}")
        if not self.irrational_penalty >= 0:
            raise ValidationError(f"irrational_penalty must be >= 0, got {self.irrational_penalty}")
        if self.norm != "l2":
            raise ValidationError(f"unsupported norm {self.norm!r}; only 'l2' is implemented")

    def type_universe(self, universe_size: int) -> list[ConsumerType]:
        if self.types is not None:
            return list(self.types)
        if self.max_seq_len is None and universe_size > self.universe_cap:
            raise CapExceededError(
                f"full type universe for N={universe_size} has {count_types(universe_size)} "
                f"types (cap N <= {self.universe_cap}); pass max_seq_len or explicit types")
        size = count_types(universe_size, self.max_seq_len)
        if size > MAX_TYPES:
            raise CapExceededError(f"{size} consumer types exceeds the limit of {MAX_TYPES}")
        return enumerate_types(universe_size, self.max_seq_len)


@dataclass
class FitResult:
    model: GSPModel
    residual_norm: float
    row_residuals: np.ndarray
    rows: list[tuple[int, Assortment]]
    irrational_mass: float
    iterations: int
    stop_reason: str = ""
    history: list[float] = field(default_factory=list)

    @property
    def support_size(self) -> int:
        return len(self.model)


def predicted_shares(model: GSPModel, dataset: ChoiceDataset) -> np.ndarray:
    """Model probabilities in the order of :meth:`ChoiceDataset.rows`."""
    out = []
    for S in dataset.assortments:
        dist = model.distribution(S)
        out.extend(dist[i] for i in S)
    return np.array(out)


def fit(dataset: ChoiceDataset, config: FitConfig | None = None) -> FitResult:
    config = config or FitConfig()
    N = dataset.universe_size
    dm = build_design_matrix(config.type_universe(N), dataset)
    y = dataset.target()
    penalty = np.where(dm.rational, 0.0, config.irrational_penalty)
    sol = nnls_simplex(dm.matrix, y, config.max_atoms, config.tol, penalty=penalty,
                       max_iter=config.max_iter)
    w = sol.weights
    support = np.flatnonzero(w > 0)
    small = w[support] < config.prune_below
    if small.any() and not small.all():
        keep = support[~small]
        idx, vals = refit_support(dm.matrix, y, keep, w[keep] / w[keep].sum())
        pruned = np.zeros_like(w)
        pruned[idx] = vals
        if np.linalg.norm(dm.matrix @ pruned - y) <= sol.residual_norm + 1e-12:
            w = pruned
    atoms = tuple((dm.types[c], float(w[c])) for c in np.flatnonzero(w > 0))
    model = GSPModel(atoms, N)
    resid = predicted_shares(model, dataset) - y
    return FitResult(model=model, residual_norm=float(np.linalg.norm(resid)),
                     row_residuals=resid, rows=dataset.rows(),
                     irrational_mass=model.irrational_mass, iterations=sol.iterations,
                     stop_reason=sol.stop_reason, history=sol.history)


def loss(model: GSPModel, dataset: ChoiceDataset, config: FitConfig | None = None,
         complexity_penalty: float = 0.0) -> float:
    """``||f - x_P||_2 + c * support + c2 * irrational support``.

    ``c`` is ``complexity_penalty``; ``c2`` is ``config.irrational_penalty``.
    """
    config = config or FitConfig()
    if model.universe_size != dataset.universe_size:
        raise ValidationError("model and dataset have different universe sizes")
    dist = float(np.linalg.norm(dataset.target() - predicted_shares(model, dataset)))
    n_irr = sum(1 for t in model.types if not is_rational(t))
    return dist + complexity_penalty * len(model) + config.irrational_penalty * n_irr
