"""Small dense LP feasibility and simplex-constrained least squares.

``solve_feasibility`` decides whether ``A x = b, x >= 0`` has a solution with
a phase-1 simplex (Bland's rule). When it does not, the phase-1 duals give a
Farkas certificate ``y`` with ``A^T y >= 0`` and ``b^T y < 0``.

``nnls_simplex`` minimizes ``||y - A w||_2`` over the probability simplex with
Frank-Wolfe (away steps, exact line search). Selecting the best column is a
column-generation step, so iterates stay sparse.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from gsp.core import CapExceededError, ValidationError

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"

RESIDUAL_TOL = 1e-7
NONNEG_TOL = 1e-9

MAX_ROWS = 200
DENSE_MAX_COLS = 5_000
MAX_COLS = 500_000


@dataclass(frozen=True)
class LinearFeasibilityProblem:
    """Equality system ``matrix @ x = rhs`` with ``x >= 0``."""

    matrix: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        b = np.asarray(self.rhs, dtype=float).reshape(-1)
        if A.shape[0] != b.shape[0]:
            raise ValidationError(f"matrix has {A.shape[0]} rows but rhs has {b.shape[0]}")
        if A.size == 0:
            raise ValidationError("empty constraint matrix")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValidationError("non-finite entry in feasibility problem")
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "rhs", b)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


def certificate_is_valid(matrix, rhs, y, *, nonneg_tol: float = NONNEG_TOL,
                         strict_tol: float = RESIDUAL_TOL) -> bool:
    """True iff ``A^T y >= -nonneg_tol`` and ``b^T y < -strict_tol``."""
    A = np.asarray(matrix, dtype=float)
    y = np.asarray(y, dtype=float)
    return bool(np.all(A.T @ y >= -nonneg_tol) and float(np.asarray(rhs, dtype=float) @ y) < -strict_tol)


@dataclass(frozen=True)
class FeasibilityResult:
    status: str
    solution: np.ndarray | None = None
    certificate: np.ndarray | None = None
    pivots: int = 0

    @property
    def feasible(self) -> bool:
        return self.status == FEASIBLE

    def validate(self, problem: LinearFeasibilityProblem) -> bool:
        """Re-check the returned solution or certificate against ``problem``."""
        A, b = problem.matrix, problem.rhs
        if self.feasible:
            x = self.solution
            return bool(np.max(np.abs(A @ x - b)) <= RESIDUAL_TOL and np.all(x >= -NONNEG_TOL))
        return certificate_is_valid(A, b, self.certificate)


@dataclass
class _PhaseOne:
    value: float
    x: np.ndarray
    duals: np.ndarray
    pivots: int


def _phase_one(A: np.ndarray, b: np.ndarray, eps: float = 1e-10, max_pivots: int = 100_000) -> _PhaseOne:
    """Minimize the sum of artificials for ``A x + a = b`` (rows sign-fixed so b >= 0).

    Returns the optimum, the structural part of the basic solution and the
    simplex multipliers of the sign-fixed system.
    """
    m, n = A.shape
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n] = -A.sum(axis=0)
    T[m, -1] = -b.sum()
    basis = np.arange(n, n + m)

    pivots = 0
    while True:
        entering = np.flatnonzero(T[m, :-1] < -eps)
        if entering.size == 0:
            break
        j = entering[0]
        col = T[:m, j]
        rows = np.flatnonzero(col > eps)
        # phase 1 is bounded below by zero, so some row always qualifies
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
        i = ties[np.argmin(basis[ties])]
        T[i] /= T[i, j]
        others = np.arange(m + 1) != i
        T[others] -= np.outer(T[others, j], T[i])
        basis[i] = j
        pivots += 1
        if pivots > max_pivots:
            raise RuntimeError("phase-1 simplex exceeded its pivot limit")

    full = np.hstack([A, np.eye(m)])
    B = full[:, basis]
    xb = np.linalg.solve(B, b)
    cb = (basis >= n).astype(float)
    duals = np.linalg.solve(B.T, cb)
    x = np.zeros(n)
    structural = basis < n
    x[basis[structural]] = xb[structural]
    value = float(np.sum(xb[~structural]))
    return _PhaseOne(value, np.maximum(x, 0.0), duals, pivots)


def solve_feasibility(problem: LinearFeasibilityProblem, *, max_rows: int = MAX_ROWS,
                      dense_max_cols: int = DENSE_MAX_COLS, max_cols: int = MAX_COLS,
                      batch: int = 500) -> FeasibilityResult:
    """Decide feasibility of ``A x = b, x >= 0``.

    Systems wider than ``dense_max_cols`` are solved by column generation:
    a restricted phase-1 problem is re-solved while columns with negative
    reduced cost exist. When none is left the restricted duals certify the
    full system.
    """
    m, n = problem.shape
    if m > max_rows or n > max_cols:
        raise CapExceededError(f"problem is {m}x{n}; cap is {max_rows}x{max_cols}")
    sign = np.where(problem.rhs < 0, -1.0, 1.0)
    A = problem.matrix * sign[:, None]
    b = problem.rhs * sign
    scale = max(1.0, float(np.max(np.abs(b))))

    if n <= dense_max_cols:
        active = np.arange(n)
    else:
        active = np.arange(min(batch, n))
    pivots = 0
    while True:
        res = _phase_one(A[:, active], b)
        pivots += res.pivots
        if res.value <= 1e-9 * scale:
            x = np.zeros(n)
            x[active] = res.x
            return FeasibilityResult(FEASIBLE, solution=x, pivots=pivots)
        if active.size == n:
            break
        reduced = -(A.T @ res.duals)
        reduced[active] = 0.0
        candidates = np.flatnonzero(reduced < -1e-10)
        if candidates.size == 0:
            break
        order = candidates[np.argsort(reduced[candidates], kind="stable")][:batch]
        active = np.union1d(active, order)

    y = -sign * res.duals
    y = y / res.value
    return FeasibilityResult(INFEASIBLE, certificate=y, pivots=pivots)


@dataclass
class SimplexFit:
    """Result of ``nnls_simplex``; unpacks as ``(weights, residual_norm)``."""

    weights: np.ndarray
    residual_norm: float
    iterations: int
    history: list[float] = field(default_factory=list)
    stop_reason: str = ""

    def __iter__(self):
        return iter((self.weights, self.residual_norm))

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0)


def refit_support(A: np.ndarray, y: np.ndarray, idx, w) -> tuple[np.ndarray, np.ndarray]:
    """Minimize ``||y - A[:, idx] w||`` over the simplex on ``idx``, starting at ``w``.

    Repeatedly jumps to the affine-hull minimizer of the current support,
    stopping short at the first weight that would turn negative and dropping
    it. The objective never increases. Returns the surviving indices and
    their weights.
    """
    idx = np.asarray(idx)
    w = np.asarray(w, dtype=float)
    while True:
        if idx.size == 1:
            return idx, np.ones(1)
        cols = A[:, idx]
        base = cols[:, 0]
        u = np.linalg.lstsq(cols[:, 1:] - base[:, None], y - base, rcond=None)[0]
        z = np.concatenate([[1.0 - u.sum()], u])
        if np.all(z > 0):
            return idx, z / z.sum()
        neg = z <= 0
        steps = w[neg] / (w[neg] - z[neg])
        theta = steps.min()
        w = w + theta * (z - w)
        w[np.flatnonzero(neg)[np.argmin(steps)]] = 0.0
        keep = w > 1e-15
        idx, w = idx[keep], w[keep]
        w = w / w.sum()


def nnls_simplex(A, y, max_atoms: int, tol: float = 1e-9, *, penalty=None,
                 corrective: bool = True, max_iter: int = 10_000) -> SimplexFit:
    """Frank-Wolfe with away steps for ``min ||y - A w||_2``, ``w >= 0``, ``sum(w) = 1``.

    ``penalty`` (one value per column) is subtracted from a column's
    selection score, so penalized columns enter only when their gradient
    advantage exceeds it. With ``corrective`` the weights are re-optimized
    over the current support after every step (fully corrective variant),
    which makes exact fits converge in finitely many steps.

    Stops when the residual drops to ``tol``, when the next step would add
    an atom beyond ``max_atoms``, when no selectable direction decreases the
    objective, or after ``max_iter`` steps. Ties go to the lowest column
    index.
    """
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if A.ndim != 2 or A.size == 0:
        raise ValidationError("design matrix must be a non-empty 2-D array")
    if A.shape[0] != y.shape[0]:
        raise ValidationError(f"matrix has {A.shape[0]} rows but target has {y.shape[0]}")
    if max_atoms < 1:
        raise ValidationError("max_atoms must be >= 1")
    n = A.shape[1]
    pen = np.zeros(n) if penalty is None else np.asarray(penalty, dtype=float)
    if pen.shape != (n,):
        raise ValidationError("penalty must have one entry per column")

    dist = 0.5 * np.sum((A - y[:, None]) ** 2, axis=0)
    j0 = int(np.argmin(dist + pen))
    w = np.zeros(n)
    w[j0] = 1.0
    fitted = A[:, j0].copy()
    r = fitted - y
    history = [float(np.linalg.norm(r))]
    reason = "max_iter"
    it = 0
    while it < max_iter:
        if history[-1] <= tol:
            reason = "tol"
            break
        g = A.T @ r
        support = np.flatnonzero(w > 0)
        gw = float(g @ w)
        s = int(np.argmax(-g - pen))
        v = int(support[np.argmax(g[support])])
        gap_fw = gw - g[s]
        gap_away = g[v] - gw
        stall = 1e-15 * max(1.0, float(np.abs(g).max()))
        if max(gap_fw, gap_away) <= stall:
            reason = "stalled"
            break
        prev_w, prev_fitted = w.copy(), fitted
        if gap_fw >= gap_away:
            if w[s] == 0 and support.size >= max_atoms:
                reason = "max_atoms"
                break
            d_fit = A[:, s] - fitted
            gamma_max = 1.0
            toward = True
        else:
            d_fit = fitted - A[:, v]
            gamma_max = w[v] / (1.0 - w[v]) if w[v] < 1 else np.inf
            toward = False
        denom = float(d_fit @ d_fit)
        if denom <= 0:
            reason = "stalled"
            break
        gamma = min(max(-float(r @ d_fit) / denom, 0.0), gamma_max)
        if gamma <= 0:
            reason = "stalled"
            break
        if toward:
            w *= 1.0 - gamma
            w[s] += gamma
        else:
            w *= 1.0 + gamma
            w[v] -= gamma
            if gamma == gamma_max:
                w[v] = 0.0
        w[w < 0] = 0.0
        if corrective:
            support = np.flatnonzero(w > 0)
            idx, vals = refit_support(A, y, support, w[support] / w[support].sum())
            w = np.zeros(n)
            w[idx] = vals
        fitted = A @ w
        r = fitted - y
        res = float(np.linalg.norm(r))
        it += 1
        if res > history[-1]:
            # rounding noise only; keep the better previous iterate
            w, fitted = prev_w, prev_fitted
            reason = "stalled"
            break
        history.append(res)
        if history[-2] - res <= 1e-15:
            reason = "stalled"
            break
    w = w / w.sum()
    return SimplexFit(w, float(np.linalg.norm(A @ w - y)), it, history, reason)
