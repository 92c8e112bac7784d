"""Linear programs with named rows/columns and a dual-verified solve.

Programs are always stated as maximizations::

    maximize    c @ x
    subject to  lower_r <= a_r @ x <= upper_r      for every named row r
                lb_j    <= x_j     <= ub_j         for every named column j

Duals follow the sensitivity convention ``dual_r = d(objective) / d(rhs_r)``:
a positive dual means relaxing the upper side of the row raises the optimum,
a negative dual means the lower side binds. Equality rows carry one signed
value. Reduced costs are ``c_j - a_j @ duals``.

The numerical work is delegated to HiGHS (through :func:`scipy.optimize.linprog`);
every optimum it returns is re-checked here for primal feasibility, duality gap
and complementary slackness before it is reported as ``optimal``.
"""

from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass, field
from typing import Hashable, TextIO

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

logger = logging.getLogger(__name__)

INF = math.inf

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL_FAILURE = "numerical_failure"

# HiGHS variants tried in order when a result fails verification.
_METHODS = ("highs-ds", "highs-ipm", "highs")


@dataclass
class Variable:
    name: str
    lower: float = 0.0
    upper: float = INF


@dataclass
class Constraint:
    name: str
    coeffs: dict[str, float]
    lower: float = -INF
    upper: float = INF

    @property
    def is_equality(self) -> bool:
        return self.lower == self.upper


@dataclass
class LinearProgram:
    """Mutable builder for a named maximization LP.

    ``tags`` maps domain keys such as ``("balance", bus_id)`` to the row or
    column name that represents them, so callers never rebuild names by hand.
    """

    variables: dict[str, Variable] = field(default_factory=dict)
    objective: dict[str, float] = field(default_factory=dict)
    constraints: dict[str, Constraint] = field(default_factory=dict)
    tags: dict[Hashable, str] = field(default_factory=dict)

    def add_variable(self, name: str, lower: float = 0.0, upper: float = INF, cost: float = 0.0) -> str:
        if name in self.variables:
            raise ValueError(f"duplicate variable {name!r}")
        self.variables[name] = Variable(name, float(lower), float(upper))
        if cost:
            self.objective[name] = self.objective.get(name, 0.0) + float(cost)
        return name

    def add_constraint(self, name: str, coeffs: dict[str, float], lower: float = -INF, upper: float = INF) -> str:
        if name in self.constraints:
            raise ValueError(f"duplicate constraint {name!r}")
        self.constraints[name] = Constraint(name, dict(coeffs), float(lower), float(upper))
        return name

    def add_equality(self, name: str, coeffs: dict[str, float], rhs: float = 0.0) -> str:
        return self.add_constraint(name, coeffs, rhs, rhs)

    def problems(self) -> list[str]:
        """List violations of the well-formedness rules (empty when usable)."""
        found = []
        for v in self.variables.values():
            if math.isnan(v.lower) or math.isnan(v.upper) or v.lower > v.upper:
                found.append(f"variable {v.name!r} has bounds [{v.lower}, {v.upper}]")
        for name in self.objective:
            if name not in self.variables:
                found.append(f"objective references undeclared variable {name!r}")
        for row in self.constraints.values():
            if math.isnan(row.lower) or math.isnan(row.upper) or row.lower > row.upper:
                found.append(f"constraint {row.name!r} has bounds [{row.lower}, {row.upper}]")
            for name, coef in row.coeffs.items():
                if name not in self.variables:
                    found.append(f"constraint {row.name!r} references undeclared variable {name!r}")
                elif not math.isfinite(coef):
                    found.append(f"constraint {row.name!r} has non-finite coefficient on {name!r}")
        return found

    def copy(self) -> LinearProgram:
        return LinearProgram(
            {k: Variable(v.name, v.lower, v.upper) for k, v in self.variables.items()},
            dict(self.objective),
            {k: Constraint(c.name, dict(c.coeffs), c.lower, c.upper) for k, c in self.constraints.items()},
            dict(self.tags),
        )

    def scaled(self, factor: float) -> LinearProgram:
        """Copy with the objective multiplied by ``factor``."""
        out = self.copy()
        out.objective = {k: v * factor for k, v in out.objective.items()}
        return out


@dataclass(frozen=True)
class Tolerances:
    feas: float = 1e-7
    gap: float = 1e-6
    cs: float = 1e-6


@dataclass
class LPSolution:
    status: str
    objective_value: float = math.nan
    primal: dict[str, float] = field(default_factory=dict)
    duals: dict[str, float] = field(default_factory=dict)
    reduced_costs: dict[str, float] = field(default_factory=dict)
    primal_residual: float = math.nan
    dual_residual: float = math.nan
    duality_gap: float = math.nan
    cs_residual: float = math.nan
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


@dataclass
class _Matrices:
    names: list[str]
    rows: list[str]
    c: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    A: sp.csr_matrix
    rlo: np.ndarray
    rhi: np.ndarray


def _assemble(lp: LinearProgram) -> _Matrices:
    names = list(lp.variables)
    col = {name: j for j, name in enumerate(names)}
    c = np.zeros(len(names))
    for name, coef in lp.objective.items():
        c[col[name]] += coef
    lb = np.array([lp.variables[n].lower for n in names], dtype=float)
    ub = np.array([lp.variables[n].upper for n in names], dtype=float)

    rows = list(lp.constraints)
    ri, ci, vals = [], [], []
    for i, rname in enumerate(rows):
        for vname, coef in lp.constraints[rname].coeffs.items():
            if coef:
                ri.append(i)
                ci.append(col[vname])
                vals.append(coef)
    A = sp.csr_matrix((vals, (ri, ci)), shape=(len(rows), len(names)))
    A.sum_duplicates()
    rlo = np.array([lp.constraints[r].lower for r in rows], dtype=float)
    rhi = np.array([lp.constraints[r].upper for r in rows], dtype=float)
    return _Matrices(names, rows, c, lb, ub, A, rlo, rhi)


def _run_highs(m: _Matrices, method: str, tol: Tolerances):
    eq = (m.rlo == m.rhi)
    up = ~eq & np.isfinite(m.rhi)
    lo = ~eq & np.isfinite(m.rlo)
    A_ub = sp.vstack([m.A[up], -m.A[lo]], format="csr")
    b_ub = np.concatenate([m.rhi[up], -m.rlo[lo]])
    bounds = np.column_stack([
        np.where(np.isfinite(m.lb), m.lb, -np.inf),
        np.where(np.isfinite(m.ub), m.ub, np.inf),
    ])
    options = {
        "primal_feasibility_tolerance": min(1e-9, tol.feas),
        "dual_feasibility_tolerance": min(1e-9, tol.feas),
    }
    res = linprog(
        -m.c,
        A_ub=A_ub if A_ub.shape[0] else None,
        b_ub=b_ub if A_ub.shape[0] else None,
        A_eq=m.A[eq] if eq.any() else None,
        b_eq=m.rlo[eq] if eq.any() else None,
        bounds=bounds,
        method=method,
        options=options,
    )
    y = np.zeros(len(m.rows))
    if res.status == 0:
        if eq.any():
            y[eq] = -res.eqlin.marginals
        n_up = int(up.sum())
        if A_ub.shape[0]:
            marg = res.ineqlin.marginals
            y[up] += -marg[:n_up]
            y[lo] += marg[n_up:]
    return res, y


def _verify(m: _Matrices, x: np.ndarray, y: np.ndarray, tol: Tolerances):
    """Return (objective, reduced costs, primal_res, dual_res, gap, cs)."""
    obj = float(m.c @ x)
    ax = m.A @ x
    row_scale = np.ones(len(m.rows))
    if m.A.nnz:
        row_scale = np.maximum(1.0, abs(m.A).max(axis=1).toarray().ravel())
    with np.errstate(invalid="ignore"):
        row_viol = np.maximum(np.maximum(m.rlo - ax, ax - m.rhi), 0.0) / row_scale
        col_viol = np.maximum(np.maximum(m.lb - x, x - m.ub), 0.0)
    primal_res = float(max(row_viol.max(initial=0.0), col_viol.max(initial=0.0)))

    d = m.c - m.A.T @ y
    col_scale = np.ones(len(m.names))
    if m.A.nnz:
        col_scale = np.maximum(1.0, abs(m.A).max(axis=0).toarray().ravel())

    # Price each multiplier against the side its sign selects; an infinite
    # side means the multiplier must vanish (dual infeasibility otherwise).
    row_bound = np.where(y > 0, m.rhi, m.rlo)
    row_bound = np.where(y == 0, ax, row_bound)
    row_inf = ~np.isfinite(row_bound)
    col_bound = np.where(d > 0, m.ub, m.lb)
    col_bound = np.where(d == 0, x, col_bound)
    col_inf = ~np.isfinite(col_bound)
    dual_res = 0.0
    if row_inf.any():
        dual_res = max(dual_res, float(np.abs(y[row_inf]).max()))
    if col_inf.any():
        dual_res = max(dual_res, float((np.abs(d[col_inf]) / col_scale[col_inf]).max()))
    row_bound = np.where(row_inf, ax, row_bound)
    col_bound = np.where(col_inf, x, col_bound)

    dual_obj = float(y @ row_bound + d @ col_bound)
    scale = 1.0 + abs(obj)
    gap = abs(obj - dual_obj) / scale
    cs_terms = np.concatenate([np.abs(y * (row_bound - ax)), np.abs(d * (col_bound - x))])
    cs = float(cs_terms.max(initial=0.0)) / scale
    return obj, d, primal_res, dual_res, gap, cs


def solve(lp: LinearProgram, tolerances: Tolerances | None = None) -> LPSolution:
    """Solve ``lp`` and return a verified :class:`LPSolution`.

    Raises ``ValueError`` when the program is malformed. Infeasible and
    unbounded programs are reported through ``status``, as is a solve whose
    optimum cannot be verified against ``tolerances`` with any HiGHS variant.
    """
    tol = tolerances or Tolerances()
    problems = lp.problems()
    if problems:
        raise ValueError("malformed linear program: " + "; ".join(problems[:5]))

    m = _assemble(lp)
    if not m.names:
        return LPSolution(OPTIMAL, 0.0, {}, {r: 0.0 for r in m.rows}, {}, 0.0, 0.0, 0.0, 0.0)

    last = ""
    for method in _METHODS:
        res, y = _run_highs(m, method, tol)
        if res.status == 2:
            return LPSolution(INFEASIBLE, message=res.message)
        if res.status == 3:
            return LPSolution(UNBOUNDED, message=res.message)
        if res.status != 0:
            last = f"{method}: {res.message}"
            logger.debug("LP attempt failed (%s)", last)
            continue
        x = np.asarray(res.x, dtype=float)
        obj, d, pres, dres, gap, cs = _verify(m, x, y, tol)
        if pres <= tol.feas and dres <= tol.feas and gap <= tol.gap and cs <= tol.cs:
            return LPSolution(
                OPTIMAL,
                obj,
                dict(zip(m.names, x.tolist())),
                dict(zip(m.rows, y.tolist())),
                dict(zip(m.names, d.tolist())),
                pres,
                dres,
                gap,
                cs,
                res.message,
            )
        last = (f"{method}: verification failed (primal {pres:.2e}, dual {dres:.2e}, "
                f"gap {gap:.2e}, cs {cs:.2e})")
        logger.debug("LP attempt rejected (%s)", last)
    return LPSolution(NUMERICAL_FAILURE, message=last)


def _fmt(value: float) -> str:
    if value == INF:
        return "inf"
    if value == -INF:
        return "-inf"
    return repr(float(value))


def dump_lp(lp: LinearProgram, fp: TextIO) -> None:
    """Write ``lp`` in the plain-text row/column format.

    Layout (tab separated, one record per line)::

        MAXIMIZE
        <column>  <objective coefficient>
        COLUMNS
        <column>  <lower>  <upper>
        ROWS
        <row>  <lower>  <upper>
        \t<column>  <coefficient>          (one line per nonzero of that row)
        END

    Infinite bounds are written ``inf`` / ``-inf``.
    """
    fp.write("MAXIMIZE\n")
    for name, coef in lp.objective.items():
        if coef:
            fp.write(f"{name}\t{_fmt(coef)}\n")
    fp.write("COLUMNS\n")
    for v in lp.variables.values():
        fp.write(f"{v.name}\t{_fmt(v.lower)}\t{_fmt(v.upper)}\n")
    fp.write("ROWS\n")
    for row in lp.constraints.values():
        fp.write(f"{row.name}\t{_fmt(row.lower)}\t{_fmt(row.upper)}\n")
        for name, coef in row.coeffs.items():
            fp.write(f"\t{name}\t{_fmt(coef)}\n")
    fp.write("END\n")


def load_lp(fp: TextIO) -> LinearProgram:
    """Inverse of :func:`dump_lp` (tags are not stored)."""
    lp = LinearProgram()
    section = None
    objective: dict[str, float] = {}
    row: Constraint | None = None
    for lineno, raw in enumerate(fp, 1):
        line = raw.rstrip("\n")
        if not line:
            continue
        if line in ("MAXIMIZE", "COLUMNS", "ROWS", "END"):
            section = line
            continue
        parts = line.split("\t")
        try:
            if section == "MAXIMIZE":
                objective[parts[0]] = float(parts[1])
            elif section == "COLUMNS":
                lp.add_variable(parts[0], float(parts[1]), float(parts[2]))
            elif section == "ROWS" and parts[0] == "":
                row.coeffs[parts[1]] = float(parts[2])
            elif section == "ROWS":
                lp.add_constraint(parts[0], {}, float(parts[1]), float(parts[2]))
                row = lp.constraints[parts[0]]
            else:
                raise ValueError("record outside a section")
        except (IndexError, ValueError, AttributeError) as exc:
            raise ValueError(f"line {lineno}: cannot parse {line!r} ({exc})") from None
    lp.objective = objective
    return lp


def dumps_lp(lp: LinearProgram) -> str:
    buf = io.StringIO()
    dump_lp(lp, buf)
    return buf.getvalue()
