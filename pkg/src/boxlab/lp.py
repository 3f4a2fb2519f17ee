"""Linear programming: feasibility and maximization with two backends.

The exact backend is a two-phase tableau simplex over arbitrary-precision
rationals with Bland's anti-cycling rule; every verdict is re-checked by
substitution before it is returned (a Feasible/Optimal point must satisfy
all constraints exactly, a Farkas row must prove infeasibility exactly).
The float backend delegates to scipy's HiGHS solver behind the same
interface and reports a feasibility margin instead of a certificate.

Conventions: inequality rows are ``row . x >= rhs``; variable lower bounds
default to 0, ``None`` marks a free variable; objectives are maximized.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

FEASIBLE = "Feasible"
INFEASIBLE = "Infeasible"
OPTIMAL = "Optimal"
UNBOUNDED = "Unbounded"
UNDECIDED = "Undecided"

DEFAULT_ITERATION_CAP = 200_000
FLOAT_VERDICT_TOL = 1e-9


class LPError(ValueError):
    pass


class CertificateError(AssertionError):
    """An exact-mode self-verification failed; indicates a solver bug."""


@dataclass
class LinearProgram:
    """maximize objective . x  subject to
    eq_rows . x = eq_rhs,  ineq_rows . x >= ineq_rhs,  x >= lower_bounds."""

    n_vars: int
    objective: list | None = None
    eq_rows: list = field(default_factory=list)
    eq_rhs: list = field(default_factory=list)
    ineq_rows: list = field(default_factory=list)
    ineq_rhs: list = field(default_factory=list)
    lower_bounds: list | None = None

    def add_eq(self, row: Sequence, rhs):
        if len(row) != self.n_vars:
            raise LPError("row length does not match variable count")
        self.eq_rows.append(list(row))
        self.eq_rhs.append(rhs)

    def add_ineq(self, row: Sequence, rhs):
        if len(row) != self.n_vars:
            raise LPError("row length does not match variable count")
        self.ineq_rows.append(list(row))
        self.ineq_rhs.append(rhs)

    def bounds(self) -> list:
        if self.lower_bounds is None:
            return [Fraction(0)] * self.n_vars
        return list(self.lower_bounds)


@dataclass
class LPResult:
    status: str
    x: list | None = None
    value: object = None
    farkas: list | None = None  # multipliers for eq rows then ineq rows
    margin: float | None = None
    iterations: int = 0
    detail: str = ""


def _to_fraction_lp(lp: LinearProgram):
    A_eq = [[Fraction(v) for v in row] for row in lp.eq_rows]
    b_eq = [Fraction(v) for v in lp.eq_rhs]
    A_ub = [[Fraction(v) for v in row] for row in lp.ineq_rows]
    b_ub = [Fraction(v) for v in lp.ineq_rhs]
    lb = [None if v is None else Fraction(v) for v in lp.bounds()]
    c = None if lp.objective is None else [Fraction(v) for v in lp.objective]
    return A_eq, b_eq, A_ub, b_ub, lb, c


class _Standardized:
    """Equality standard form  A y = b,  y >= 0  of a LinearProgram.

    Column map: each original variable becomes y_j (shifted by its lower
    bound) or a y+ / y- pair if free; one surplus column per inequality row.
    Row order: equality rows then inequality rows, each possibly negated so
    that b >= 0.
    """

    def __init__(self, lp: LinearProgram):
        A_eq, b_eq, A_ub, b_ub, lb, c = _to_fraction_lp(lp)
        self.n_orig = lp.n_vars
        self.lb = lb
        cols = []  # (var index, sign)
        for j in range(lp.n_vars):
            cols.append((j, 1))
            if lb[j] is None:
                cols.append((j, -1))
        self.var_cols = list(cols)
        n_slack = len(A_ub)
        self.n_cols = len(cols) + n_slack
        rows = []
        rhs = []
        self.row_signs = []
        all_rows = [(row, b, False) for row, b in zip(A_eq, b_eq)] + [
            (row, b, True) for row, b in zip(A_ub, b_ub)
        ]
        for k, (row, b, is_ineq) in enumerate(all_rows):
            r = [Fraction(0)] * self.n_cols
            for ci, (j, sign) in enumerate(cols):
                r[ci] = sign * row[j]
            if is_ineq:
                r[len(cols) + (k - len(A_eq))] = Fraction(-1)  # surplus
            shift = sum(row[j] * lb[j] for j in range(lp.n_vars) if lb[j] is not None)
            b2 = b - shift
            if b2 < 0:
                r = [-v for v in r]
                b2 = -b2
                self.row_signs.append(-1)
            else:
                self.row_signs.append(1)
            rows.append(r)
            rhs.append(b2)
        self.A = rows
        self.b = rhs
        self.n_eq = len(A_eq)
        self.c_std = None
        if c is not None:
            cc = [Fraction(0)] * self.n_cols
            for ci, (j, sign) in enumerate(cols):
                cc[ci] = sign * c[j]
            self.c_std = cc
            self.obj_shift = sum(
                c[j] * lb[j] for j in range(lp.n_vars) if lb[j] is not None
            )
        self.c_orig = c

    def recover(self, y: list) -> list:
        """Map a standard-form point back to original variables."""
        x = [Fraction(0)] * self.n_orig
        for ci, (j, sign) in enumerate(self.var_cols):
            x[j] += sign * y[ci]
        for j in range(self.n_orig):
            if self.lb[j] is not None:
                x[j] += self.lb[j]
        return x


def _pivot(T: list, basis: list, row: int, col: int):
    piv = T[row][col]
    T[row] = [v / piv for v in T[row]]
    prow = T[row]
    for i, r in enumerate(T):
        if i != row and r[col] != 0:
            f = r[col]
            T[i] = [a - f * b for a, b in zip(r, prow)]
    basis[row] = col


def _simplex_min(T: list, basis: list, n_struct: int, cap: int) -> tuple[str, int]:
    """Minimize with Bland's rule on a tableau whose last row is the
    objective (reduced costs; entry [-1] is -value) and last column the rhs."""
    iters = 0
    while True:
        obj = T[-1]
        enter = -1
        for j in range(n_struct):
            if obj[j] < 0:
                enter = j
                break
        if enter < 0:
            return OPTIMAL, iters
        leave = -1
        best = None
        for i in range(len(basis)):
            a = T[i][enter]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best or (
                    ratio == best and basis[i] < basis[leave]
                ):
                    best = ratio
                    leave = i
        if leave < 0:
            return UNBOUNDED, iters
        _pivot(T, basis, leave, enter)
        iters += 1
        if iters > cap:
            return UNDECIDED, iters


def _phase1(std: _Standardized, cap: int):
    m = len(std.A)
    n = std.n_cols
    T = []
    basis = []
    for i in range(m):
        T.append(list(std.A[i]) + [Fraction(1) if k == i else Fraction(0) for k in range(m)] + [std.b[i]])
        basis.append(n + i)
    # phase-1 objective: sum of artificials, expressed in reduced form
    obj = [Fraction(0)] * (n + m + 1)
    for i in range(m):
        for j in range(n + m + 1):
            obj[j] -= T[i][j]
    for i in range(m):
        obj[n + i] = Fraction(0)
    T.append(obj)
    status, iters = _simplex_min(T, basis, n + m, cap)
    return T, basis, status, iters


def _drive_out_artificials(T: list, basis: list, n: int):
    m = len(basis)
    drop = []
    for i in range(m):
        if basis[i] >= n:
            piv_col = next((j for j in range(n) if T[i][j] != 0), None)
            if piv_col is None:
                drop.append(i)
            else:
                _pivot(T, basis, i, piv_col)
    for i in sorted(drop, reverse=True):
        del T[i]
        del basis[i]


def _solve_exact(lp: LinearProgram, want_opt: bool, cap: int) -> LPResult:
    std = _Standardized(lp)
    if std.n_cols == 0 and not std.A:
        return LPResult(FEASIBLE if not want_opt else OPTIMAL, x=[], value=Fraction(0))
    T, basis, status, it1 = _phase1(std, cap)
    if status == UNDECIDED:
        return LPResult(UNDECIDED, iterations=it1, detail="phase-1 iteration cap")
    m = len(std.A)
    n = std.n_cols
    phase1_value = -T[-1][-1]
    if phase1_value > 0:
        # infeasible; Farkas multipliers from the artificial reduced costs
        y_std = [Fraction(1) - T[-1][n + i] for i in range(m)]
        _verify_farkas(std, y_std)
        y = [s * v for s, v in zip(std.row_signs, y_std)]
        return LPResult(INFEASIBLE, farkas=y, iterations=it1)
    _drive_out_artificials(T, basis, n)
    # trim artificial columns, keep rhs
    T = [row[:n] + [row[-1]] for row in T[:-1]]
    if not want_opt:
        x = _basic_point(T, basis, n)
        xo = std.recover(x)
        _verify_point(lp, xo)
        return LPResult(FEASIBLE, x=xo, iterations=it1)
    # phase 2: minimize -c_std
    obj = [-v for v in std.c_std] + [Fraction(0)]
    # express objective in terms of nonbasic variables
    for i, bi in enumerate(basis):
        if obj[bi] != 0:
            f = obj[bi]
            obj = [a - f * b for a, b in zip(obj, T[i])]
    T.append(obj)
    status, it2 = _simplex_min(T, basis, n, cap)
    if status == UNDECIDED:
        return LPResult(UNDECIDED, iterations=it1 + it2, detail="phase-2 iteration cap")
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED, iterations=it1 + it2)
    x = _basic_point(T[:-1], basis, n)
    xo = std.recover(x)
    _verify_point(lp, xo)
    value = sum(c * v for c, v in zip(std.c_orig, xo))
    return LPResult(OPTIMAL, x=xo, value=value, iterations=it1 + it2)


def _basic_point(T: list, basis: list, n: int) -> list:
    x = [Fraction(0)] * n
    for i, bi in enumerate(basis):
        if bi < n:
            x[bi] = T[i][-1]
    return x


def _verify_point(lp: LinearProgram, x: list):
    A_eq, b_eq, A_ub, b_ub, lb, _ = _to_fraction_lp(lp)
    for row, b in zip(A_eq, b_eq):
        if sum(r * v for r, v in zip(row, x)) != b:
            raise CertificateError("returned point violates an equality row")
    for row, b in zip(A_ub, b_ub):
        if sum(r * v for r, v in zip(row, x)) < b:
            raise CertificateError("returned point violates an inequality row")
    for j, bound in enumerate(lb):
        if bound is not None and x[j] < bound:
            raise CertificateError("returned point violates a lower bound")


def _verify_farkas(std: _Standardized, y: list):
    """y . A <= 0 columnwise and y . b > 0 proves A z = b, z >= 0 infeasible."""
    for j in range(std.n_cols):
        if sum(y[i] * std.A[i][j] for i in range(len(std.A))) > 0:
            raise CertificateError("Farkas row fails a column inequality")
    if sum(y[i] * std.b[i] for i in range(len(std.b))) <= 0:
        raise CertificateError("Farkas row fails the rhs inequality")


def _solve_float(lp: LinearProgram, want_opt: bool, tol: float) -> LPResult:
    lb = lp.bounds()
    bounds = [(None if b is None else float(b), None) for b in lb]
    A_eq = np.array([[float(v) for v in r] for r in lp.eq_rows]) if lp.eq_rows else None
    b_eq = np.array([float(v) for v in lp.eq_rhs]) if lp.eq_rows else None
    A_ub = (
        -np.array([[float(v) for v in r] for r in lp.ineq_rows]) if lp.ineq_rows else None
    )
    b_ub = -np.array([float(v) for v in lp.ineq_rhs]) if lp.ineq_rows else None
    if want_opt:
        c = -np.array([float(v) for v in lp.objective])
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
        if res.status == 0:
            return LPResult(OPTIMAL, x=list(res.x), value=-res.fun, margin=0.0)
        if res.status == 3:
            return LPResult(UNBOUNDED)
        if res.status == 2:
            return LPResult(INFEASIBLE, detail=res.message)
        return LPResult(UNDECIDED, detail=res.message)
    # feasibility as margin minimization: min t, |A_eq x - b| <= t, slack >= -t
    n = lp.n_vars
    c = np.zeros(n + 1)
    c[-1] = 1.0
    rows_ub = []
    rhs_ub = []
    if A_eq is not None:
        rows_ub.append(np.hstack([A_eq, -np.ones((len(A_eq), 1))]))
        rhs_ub.append(b_eq)
        rows_ub.append(np.hstack([-A_eq, -np.ones((len(A_eq), 1))]))
        rhs_ub.append(-b_eq)
    if A_ub is not None:
        rows_ub.append(np.hstack([A_ub, -np.ones((len(A_ub), 1))]))
        rhs_ub.append(b_ub)
    A = np.vstack(rows_ub) if rows_ub else None
    b = np.hstack(rhs_ub) if rhs_ub else None
    res = linprog(
        c, A_ub=A, b_ub=b, bounds=bounds + [(0.0, None)], method="highs"
    )
    if res.status != 0:
        return LPResult(UNDECIDED, detail=res.message)
    margin = float(res.x[-1])
    status = FEASIBLE if margin <= tol else INFEASIBLE
    return LPResult(status, x=list(res.x[:-1]), margin=margin)


def _normalize_mode(mode: str) -> str:
    if mode in ("exact", "rational"):
        return "exact"
    if mode == "float":
        return "float"
    raise LPError(f"unknown solver mode {mode!r}")


def solve_feasibility(
    lp: LinearProgram,
    mode: str = "exact",
    tolerance: float = FLOAT_VERDICT_TOL,
    iteration_cap: int = DEFAULT_ITERATION_CAP,
) -> LPResult:
    if _normalize_mode(mode) == "exact":
        return _solve_exact(lp, want_opt=False, cap=iteration_cap)
    return _solve_float(lp, want_opt=False, tol=tolerance)


def maximize(
    lp: LinearProgram,
    mode: str = "exact",
    tolerance: float = FLOAT_VERDICT_TOL,
    iteration_cap: int = DEFAULT_ITERATION_CAP,
) -> LPResult:
    if lp.objective is None:
        raise LPError("maximize needs an objective")
    if _normalize_mode(mode) == "exact":
        return _solve_exact(lp, want_opt=True, cap=iteration_cap)
    return _solve_float(lp, want_opt=True, tol=tolerance)
