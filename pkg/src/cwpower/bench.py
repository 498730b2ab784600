"""Table sweeps on the built-in problems.

The grid tables run on the unit square, whose discrete and continuum
principal eigenvalues are known in closed form.
"""

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .diagnostics import estimate_order, machine_floor, mesh_order, reference_eigenpair
from .grid import unit_square
from .iteration import (
    Criterion,
    SolverConfig,
    StoppingRule,
    Update,
    grid_epsilon,
    rayleigh_quotient_iteration,
    variable_lambda_power,
)
from .operators import InverseLaplacian, hilbert_matrix, random_tridiagonal

TRIDIAGONAL_SEED = 20240607
MESH_SIZES = (Fraction(1, 4), Fraction(1, 6), Fraction(1, 10), Fraction(1, 16), Fraction(1, 25), Fraction(1, 50))
ORDER_MESH_SIZES = (Fraction(1, 6), Fraction(1, 16), Fraction(1, 50))
RAYLEIGH_MESH_SIZES = (Fraction(1, 16), Fraction(1, 50))
TABLE_EPSILON = 1e-14
RAYLEIGH_TARGET = 1e-12


class TableId(enum.Enum):
    MATRIX = "matrix"
    MESH_ERROR = "mesh-error"
    STEP_COUNTS = "step-counts"
    GRID_ORDER = "grid-order"
    RAYLEIGH_COMPARE = "rayleigh-compare"


def continuum_unit_square():
    """Largest eigenvalue ``1/(2 pi^2)`` of the inverse Dirichlet Laplacian on (0,1)^2."""
    return 1.0 / (2.0 * math.pi**2)


def discrete_unit_square(h):
    """Largest eigenvalue of ``T_h`` on the unit square: ``1 / ((8/h^2) sin^2(pi h/2))``."""
    h = float(h)
    return 1.0 / ((8.0 / h**2) * math.sin(math.pi * h / 2.0) ** 2)


@dataclass
class Table:
    title: str
    headers: list
    rows: list
    notes: list = field(default_factory=list)

    def render(self, fmt="md"):
        if fmt == "json":
            return json.dumps({"title": self.title, "headers": self.headers, "rows": self.rows,
                               "notes": self.notes}, indent=2) + "\n"
        cells = [[_cell(x) for x in row] for row in self.rows]
        if fmt == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(self.headers)
            w.writerows(cells)
            return buf.getvalue()
        if fmt == "md":
            out = [f"## {self.title}", ""]
            out.append("| " + " | ".join(self.headers) + " |")
            out.append("|" + "|".join("---" for _ in self.headers) + "|")
            out += ["| " + " | ".join(c if c != "" else "--" for c in row) + " |" for row in cells]
            out += [""] + [f"_{n}_" for n in self.notes] if self.notes else []
            return "\n".join(out) + "\n"
        raise ValueError(f"unknown table format {fmt!r}")


def _cell(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def _h_label(h):
    return f"1/{Fraction(h).denominator}" if Fraction(h).numerator == 1 else str(h)


def _orders(errors, floor):
    try:
        return list(estimate_order(errors, floor).values)
    except ValueError:
        return [None] * len(errors)


def _grid(h):
    op = InverseLaplacian(unit_square(float(h)))
    return op, op.apply(np.ones(op.dimension))


def matrix_table(n=1000, seed=TRIDIAGONAL_SEED, rayleigh_n=50):
    rule = StoppingRule(Criterion.LAMBDA_DIFF, TABLE_EPSILON)
    columns = []
    for op in (random_tridiagonal(n, seed), hilbert_matrix(n)):
        ref, _ = reference_eigenpair(op)
        rep = variable_lambda_power(op, np.ones(n), SolverConfig(rule, Update.SUP)).with_reference(ref, True)
        errs = rep.errors
        columns.append((errs, _orders(errs, machine_floor()), [r.gap for r in rep.records]))
    H = hilbert_matrix(rayleigh_n)
    ref, _ = reference_eigenpair(H)
    ray = rayleigh_quotient_iteration(H, np.ones(rayleigh_n), rule).with_reference(ref, True)
    columns.append((ray.errors, _orders(ray.errors, machine_floor())))
    depth = max(len(c[0]) for c in columns)
    rows = []
    for k in range(depth):
        row = [k + 1]
        for col in columns:
            row += [c[k] if k < len(c) else None for c in col]
        rows.append(row)
    headers = ["n", "tridiagonal rel. error", "order", "SC1",
               "Hilbert rel. error", "order", "SC1", "Hilbert Rayleigh rel. error", "order"]
    notes = [f"Tridiagonal: n={n}, seed={seed}; Hilbert: n={n}; Rayleigh: Hilbert n={rayleigh_n}. "
             f"v0 = ones, stop |lambda_(n+1) - lambda_n| < {TABLE_EPSILON:g}; errors relative to power-iteration references."]
    return Table("Matrix case: error, order and SC1 per step", headers, rows, notes)


def mesh_error_table(sizes=MESH_SIZES):
    lam_star = continuum_unit_square()
    pairs = []
    rows = []
    for h in sizes:
        op, _ = _grid(h)
        lam_h, _ = reference_eigenpair(op)
        pairs.append((float(h), lam_h))
        rows.append([_h_label(h), lam_h, discrete_unit_square(h), abs(lam_star - lam_h)])
    orders = [None] + mesh_order(lam_star, pairs)
    for row, o in zip(rows, orders):
        row.append(o)
    notes = [f"Unit square, lambda* = 1/(2 pi^2) = {lam_star:.9g}."]
    return Table("Mesh error |lambda* - lambda_h| and its order",
                 ["h", "lambda_h", "analytic lambda_h", "error", "order"], rows, notes)


def step_counts_table(sizes=MESH_SIZES):
    rows = {k: [] for k in ("it14", "err14", "itq", "errq")}
    for h in sizes:
        op, v0 = _grid(h)
        lam_h, _ = reference_eigenpair(op)
        for tag, eps in (("14", TABLE_EPSILON), ("q", grid_epsilon(float(h)))):
            rep = variable_lambda_power(op, v0, SolverConfig(StoppingRule(Criterion.SC2, eps)))
            rows["it" + tag].append(rep.iterations)
            rows["err" + tag].append(abs(rep.lam - lam_h))
    headers = ["criterion", "quantity"] + [_h_label(h) for h in sizes]
    body = [
        ["sc2, eps=1e-14", "iterations"] + rows["it14"],
        ["sc2, eps=1e-14", "error"] + rows["err14"],
        ["sc2, eps=h^2/10", "iterations"] + rows["itq"],
        ["sc2, eps=h^2/10", "error"] + rows["errq"],
    ]
    notes = ["Unit square, v0 = T1, error |lambda_h - lambda_h^(n)|."]
    return Table("Iterations and errors of the variable-shift iteration", headers, body, notes)


def grid_order_table(sizes=ORDER_MESH_SIZES):
    cols = []
    for h in sizes:
        op, v0 = _grid(h)
        lam_h, _ = reference_eigenpair(op)
        rep = variable_lambda_power(op, v0, SolverConfig(StoppingRule(Criterion.SC2, TABLE_EPSILON)))
        rep = rep.with_reference(lam_h)
        errs = rep.errors
        cols.append((errs, _orders(errs, machine_floor(lam_h))))
    depth = max(len(c[0]) for c in cols)
    rows = []
    for k in range(depth):
        row = [k + 1]
        for errs, orders in cols:
            row += [errs[k], orders[k]] if k < len(errs) else [None, None]
        rows.append(row)
    headers = ["n"]
    for h in sizes:
        headers += [f"error h={_h_label(h)}", "order"]
    notes = ["Unit square, v0 = T1, sc2 with eps=1e-14; orders using errors below 1e-13 are masked."]
    return Table("Order of convergence per step", headers, rows, notes)


def _first_below(report, lam_ref, tol):
    for r in report.records:
        if abs(r.lam - lam_ref) < tol:
            return r.n, abs(r.lam - lam_ref)
    return None, None


def rayleigh_compare_tables(sizes=RAYLEIGH_MESH_SIZES):
    rule = StoppingRule(Criterion.LAMBDA_DIFF, TABLE_EPSILON, 50)
    runs = {}
    order_errs = None
    for start in ("ones", "T1"):
        for h in sizes:
            op, t1 = _grid(h)
            v0 = np.ones(op.dimension) if start == "ones" else t1
            lam_h, _ = reference_eigenpair(op)
            ray = rayleigh_quotient_iteration(op, v0, rule)
            cw = variable_lambda_power(op, v0, SolverConfig(rule))
            runs[(start, h)] = (_first_below(ray, lam_h, RAYLEIGH_TARGET), _first_below(cw, lam_h, RAYLEIGH_TARGET))
            if start == "ones" and h == sizes[-1]:
                order_errs = [abs(r.lam - lam_h) for r in ray.records]
    keys = [(s, h) for s in ("ones", "T1") for h in sizes]
    headers = ["method", "quantity"] + [f"v0={s}, h={_h_label(h)}" for s, h in keys]
    rows = [
        ["Rayleigh quotient", "iterations"] + [runs[k][0][0] for k in keys],
        ["Rayleigh quotient", "error"] + [runs[k][0][1] for k in keys],
        ["variable shift", "iterations"] + [runs[k][1][0] for k in keys],
        ["variable shift", "error"] + [runs[k][1][1] for k in keys],
    ]
    notes = [f"Unit square; a run counts as converged at the first step with |lambda_h^(n) - lambda_h| < {RAYLEIGH_TARGET:g}."]
    compare = Table("Rayleigh quotient iteration vs the variable-shift iteration", headers, rows, notes)
    n_show = len(order_errs)
    for k, e in enumerate(order_errs):
        if e < RAYLEIGH_TARGET:
            n_show = k + 1
            break
    order_errs = order_errs[:n_show]
    orders = _orders(order_errs, machine_floor())
    order_rows = [[k + 1, e, o] for k, (e, o) in enumerate(zip(order_errs, orders))]
    order = Table(f"Rayleigh quotient iteration order, h={_h_label(sizes[-1])}, v0=ones",
                  ["n", "error", "order"], order_rows)
    return [compare, order]


def bench_table(table_id, fmt="md"):
    """Run one sweep and render it as text."""
    table_id = TableId(table_id)
    if table_id is TableId.MATRIX:
        tables = [matrix_table()]
    elif table_id is TableId.MESH_ERROR:
        tables = [mesh_error_table()]
    elif table_id is TableId.STEP_COUNTS:
        tables = [step_counts_table()]
    elif table_id is TableId.GRID_ORDER:
        tables = [grid_order_table()]
    else:
        tables = rayleigh_compare_tables()
    if fmt == "json":
        return json.dumps([json.loads(t.render("json")) for t in tables], indent=2) + "\n"
    return "\n".join(t.render(fmt) for t in tables)
