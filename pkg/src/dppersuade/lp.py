"""Linear programs: a small problem container and a dense two-phase simplex.

Problems are always maximisations over nonnegative variables. ``solve_lp``
returns a basic (vertex) optimum together with row duals ``y`` such that the
reduced cost of any column ``a`` with objective ``c`` is ``c - a @ y``:
``y >= 0`` on ``<=`` rows, ``y <= 0`` on ``>=`` rows, free on ``=`` rows.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from dppersuade.model import SolverError, ValidationError

LE, EQ, GE = "<=", "=", ">="

FEAS_TOL = 1e-9
OPT_TOL = 1e-9

# dense tableaux beyond this many cells go to HiGHS under backend="auto"
AUTO_DENSE_LIMIT = 400_000


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpProblem:
    objective: np.ndarray
    A: np.ndarray
    senses: tuple[str, ...]
    rhs: np.ndarray
    var_names: tuple[str, ...] = ()
    row_names: tuple[str, ...] = ()

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float)
        if c.size == 0:
            raise ValidationError("LP needs at least one variable")
        A = np.asarray(self.A, dtype=float).reshape(-1, c.size)
        b = np.asarray(self.rhs, dtype=float)
        if A.shape[0] != b.size or len(self.senses) != b.size:
            raise ValidationError("constraint rows, senses and rhs disagree in length")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValidationError("LP coefficients must be finite")
        bad = [s for s in self.senses if s not in (LE, EQ, GE)]
        if bad:
            raise ValidationError(f"unknown constraint relation {bad[0]!r}")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "rhs", b)
        object.__setattr__(self, "senses", tuple(self.senses))
        if not self.var_names:
            object.__setattr__(self, "var_names", tuple(f"x{j}" for j in range(c.size)))
        if not self.row_names:
            object.__setattr__(self, "row_names", tuple(f"r{i}" for i in range(b.size)))

    @property
    def num_vars(self) -> int:
        return self.objective.size

    @property
    def num_rows(self) -> int:
        return self.rhs.size

    def count_rows(self, prefix: str) -> int:
        return sum(1 for r in self.row_names if r.startswith(prefix))

    def count_vars(self, prefix: str) -> int:
        return sum(1 for v in self.var_names if v.startswith(prefix))

    def residuals(self, x) -> np.ndarray:
        """Constraint violation per row (positive means violated)."""
        ax = self.A @ np.asarray(x, dtype=float)
        out = np.empty_like(ax)
        for i, s in enumerate(self.senses):
            if s == LE:
                out[i] = ax[i] - self.rhs[i]
            elif s == GE:
                out[i] = self.rhs[i] - ax[i]
            else:
                out[i] = abs(ax[i] - self.rhs[i])
        return out


class LpBuilder:
    """Accumulates named variables and sparse rows, then emits an LpProblem."""

    def __init__(self):
        self._names: list[str] = []
        self._obj: list[float] = []
        self._rows: list[dict[int, float]] = []
        self._senses: list[str] = []
        self._rhs: list[float] = []
        self._row_names: list[str] = []

    def add_var(self, name: str, objective: float = 0.0) -> int:
        self._names.append(name)
        self._obj.append(float(objective))
        return len(self._names) - 1

    def add_row(self, coeffs: dict[int, float], sense: str, rhs: float, name: str) -> int:
        self._rows.append(dict(coeffs))
        self._senses.append(sense)
        self._rhs.append(float(rhs))
        self._row_names.append(name)
        return len(self._rows) - 1

    def build(self) -> LpProblem:
        A = np.zeros((len(self._rows), len(self._names)))
        for i, row in enumerate(self._rows):
            for j, v in row.items():
                A[i, j] += v
        return LpProblem(
            np.array(self._obj), A, tuple(self._senses), np.array(self._rhs),
            tuple(self._names), tuple(self._row_names),
        )


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    objective_value: float = float("nan")
    is_vertex: bool = False
    duals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iterations: int = 0
    backend: str = ""


def solve_lp(problem: LpProblem, backend: str = "auto") -> LpSolution:
    """Solve ``max c x`` subject to the problem rows and ``x >= 0``.

    ``backend`` is ``"simplex"`` (the dense tableau below), ``"highs"``
    (scipy's HiGHS dual simplex) or ``"auto"``, which picks the dense
    simplex unless the tableau would be large.
    """
    if backend == "auto":
        m = problem.num_rows
        cells = m * (problem.num_vars + 2 * m)
        backend = "simplex" if cells <= AUTO_DENSE_LIMIT else "highs"
    if backend == "simplex":
        return _DenseSimplex(problem).solve()
    if backend == "highs":
        return _solve_highs(problem)
    raise ValueError(f"unknown LP backend {backend!r}")


class _DenseSimplex:
    """Two-phase tableau simplex with Dantzig pricing.

    The ratio test is Harris's two-pass rule (prefer large pivots among rows
    that keep feasibility within tolerance) with lexicographic tie-breaking on
    the initial-basis inverse, which prevents cycling on degenerate vertices.
    The tableau is rebuilt from the original data every ``REFACTOR_EVERY``
    pivots and at the end, so reported values and duals come from a fresh
    factorisation of the final basis.
    """

    REFACTOR_EVERY = 100
    PIVOT_TOL = 1e-9

    def __init__(self, problem: LpProblem):
        self.problem = problem
        A, b = problem.A.copy(), problem.rhs.copy()
        senses = list(problem.senses)
        m, n = A.shape
        # equilibrate rows so tolerances mean the same thing on every row
        self.row_scale = np.abs(A).max(axis=1, initial=0.0)
        self.row_scale[self.row_scale == 0] = 1.0
        A /= self.row_scale[:, None]
        b /= self.row_scale
        self.row_sign = np.ones(m)
        for i in range(m):
            if b[i] < 0:
                A[i] *= -1
                b[i] *= -1
                self.row_sign[i] = -1
                senses[i] = {LE: GE, GE: LE, EQ: EQ}[senses[i]]

        # column layout: x | slack/surplus (one per inequality) | artificial
        slack_col, art_col = {}, {}
        ncols = n
        for i, s in enumerate(senses):
            if s != EQ:
                slack_col[i] = ncols
                ncols += 1
        for i, s in enumerate(senses):
            if s != LE:
                art_col[i] = ncols
                ncols += 1

        T = np.zeros((m, ncols + 1))
        T[:, :n] = A
        T[:, -1] = b
        basis = np.empty(m, dtype=int)
        for i, s in enumerate(senses):
            if s == LE:
                T[i, slack_col[i]] = 1.0
                basis[i] = slack_col[i]
            else:
                if s == GE:
                    T[i, slack_col[i]] = -1.0
                T[i, art_col[i]] = 1.0
                basis[i] = art_col[i]

        self.n, self.m, self.ncols = n, m, ncols
        self.senses = senses
        self.slack_col, self.art_col = slack_col, art_col
        self.is_art = np.zeros(ncols, dtype=bool)
        self.is_art[list(art_col.values())] = True
        self.T0 = T.copy()
        self.T, self.basis = T, basis
        self.initial_basis = basis.copy()
        self.iterations = 0
        self.max_iter = 50 * (m + ncols) + 1000

    def _reduced_row(self, cost: np.ndarray) -> np.ndarray:
        # d_j = c_j - c_B B^-1 A_j; the last entry is minus the objective value
        full = np.append(cost, 0.0)
        return full - cost[self.basis] @ self.T

    def _refactor(self):
        B = self.T0[:, self.basis]
        try:
            self.T = np.linalg.solve(B, self.T0)
        except np.linalg.LinAlgError as exc:
            raise SolverError("basis became singular") from exc
        rhs = self.T[:, -1]
        if rhs.min(initial=0.0) < -1e-7:
            raise SolverError(f"basis lost primal feasibility ({rhs.min():.3g})")
        np.maximum(rhs, 0.0, out=rhs)

    def _pivot(self, r: int, e: int):
        T = self.T
        T[r] /= T[r, e]
        col = T[:, e].copy()
        col[r] = 0.0
        nz = np.flatnonzero(col)
        if nz.size:
            T[nz] -= np.outer(col[nz], T[r])
        # Harris steps may leave tiny negative right-hand sides
        np.maximum(T[:, -1], 0.0, out=T[:, -1])
        self.basis[r] = e
        self.iterations += 1

    def _leaving_row(self, e: int) -> int | None:
        T = self.T
        col = T[:, e]
        rows = np.flatnonzero(col > self.PIVOT_TOL)
        if rows.size == 0:
            return None
        b = T[rows, -1]
        a = col[rows]
        # pass 1: the largest step that keeps every row feasible within tolerance
        limit = ((b + FEAS_TOL) / a).min()
        ok = b / a <= limit
        rows, a = rows[ok], a[ok]
        # pass 2: among those, well-sized pivots only
        keep = a >= 0.1 * a.max()
        rows, a = rows[keep], a[keep]
        key = T[rows, -1] / a
        ties = rows[key <= key.min() + 1e-12]
        k = 0
        while ties.size > 1 and k < self.m:
            key = T[ties, self.initial_basis[k]] / T[ties, e]
            ties = ties[key <= key.min() + 1e-12]
            k += 1
        return int(ties[np.argmin(self.basis[ties])])

    def _run(self, cost: np.ndarray, allowed: np.ndarray) -> LpStatus:
        d = self._reduced_row(cost)
        since_refactor = 0
        while True:
            if self.iterations > self.max_iter:
                raise SolverError("simplex iteration limit reached")
            cand = np.flatnonzero(allowed & (d[:-1] > OPT_TOL))
            if cand.size == 0:
                # confirm optimality on a fresh factorisation
                if since_refactor == 0:
                    return LpStatus.OPTIMAL
                self._refactor()
                d = self._reduced_row(cost)
                since_refactor = 0
                continue
            e = int(cand[np.argmax(d[cand])])
            r = self._leaving_row(e)
            if r is None:
                return LpStatus.UNBOUNDED
            self._pivot(r, e)
            since_refactor += 1
            if since_refactor >= self.REFACTOR_EVERY:
                self._refactor()
                since_refactor = 0
            d = self._reduced_row(cost)

    def solve(self) -> LpSolution:
        n, ncols = self.n, self.ncols
        cost2 = np.zeros(ncols)
        cost2[:n] = self.problem.objective

        if self.art_col:
            cost1 = np.where(self.is_art, -1.0, 0.0)
            self._run(cost1, np.ones(ncols, dtype=bool))
            infeas = float(self.T[self.is_art[self.basis], -1].sum())
            scale = max(1.0, float(self.T0[:, -1].max(initial=0.0)))
            if infeas > FEAS_TOL * scale:
                return LpSolution(LpStatus.INFEASIBLE, iterations=self.iterations, backend="simplex")
            self._drive_out_artificials()

        status = self._run(cost2, ~self.is_art)
        if status is LpStatus.UNBOUNDED:
            return LpSolution(LpStatus.UNBOUNDED, iterations=self.iterations, backend="simplex")

        x = np.zeros(ncols)
        x[self.basis] = self.T[:, -1]
        values = x[:n].copy()
        values[np.abs(values) < 1e-15] = 0.0

        # duals solve B^T y = c_B on the sign-normalised rows
        B = self.T0[:, self.basis]
        y = np.linalg.solve(B.T, cost2[self.basis]) * self.row_sign / self.row_scale
        obj = float(self.problem.objective @ values)
        return LpSolution(
            LpStatus.OPTIMAL, values, obj, True, y, self.iterations, backend="simplex"
        )

    def _drive_out_artificials(self):
        T = self.T
        for r in range(self.m):
            if not self.is_art[self.basis[r]]:
                continue
            row = np.where(self.is_art, 0.0, np.abs(T[r, :-1]))
            j = int(np.argmax(row))
            if row[j] > self.PIVOT_TOL:
                # degenerate pivot: the artificial sits at zero
                self._pivot(r, j)
            # otherwise the row is redundant; its artificial stays basic at zero
            # and no later pivot can touch it


def _solve_highs(problem: LpProblem) -> LpSolution:
    from scipy.optimize import linprog

    le = [i for i, s in enumerate(problem.senses) if s == LE]
    ge = [i for i, s in enumerate(problem.senses) if s == GE]
    eq = [i for i, s in enumerate(problem.senses) if s == EQ]
    ub_rows = le + ge
    A_ub = np.vstack([problem.A[le], -problem.A[ge]]) if ub_rows else None
    b_ub = np.concatenate([problem.rhs[le], -problem.rhs[ge]]) if ub_rows else None
    A_eq = problem.A[eq] if eq else None
    b_eq = problem.rhs[eq] if eq else None
    res = linprog(
        -problem.objective, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
        bounds=(0, None), method="highs-ds",
        options={"primal_feasibility_tolerance": FEAS_TOL, "dual_feasibility_tolerance": OPT_TOL},
    )
    if res.status == 2:
        return LpSolution(LpStatus.INFEASIBLE, backend="highs")
    if res.status == 3:
        return LpSolution(LpStatus.UNBOUNDED, backend="highs")
    if res.status != 0:
        raise SolverError(f"HiGHS failed: {res.message}")
    y = np.zeros(problem.num_rows)
    if ub_rows:
        marg = -np.asarray(res.ineqlin.marginals)
        y[le] = marg[: len(le)]
        y[ge] = -marg[len(le):]
    if eq:
        y[eq] = -np.asarray(res.eqlin.marginals)
    values = np.asarray(res.x, dtype=float)
    return LpSolution(
        LpStatus.OPTIMAL, values, float(problem.objective @ values), True, y,
        int(getattr(res, "nit", 0)), backend="highs",
    )
