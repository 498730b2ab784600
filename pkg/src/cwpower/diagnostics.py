"""Convergence-order estimates, reference eigenvalues and report output."""

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import DomainError, InsufficientDataError, NoConvergenceError
from .operators import TridiagonalMatrix
from .iteration import Criterion, StoppingRule, collatz_wielandt, plain_power
from .report import ConvergenceReport, StepRecord, StopReason

REFERENCE_EPSILON = 1e-14
REFERENCE_MAX_ITERS = 10**6


def machine_floor(lambda_ref=1.0):
    """Errors below this are treated as round-off: ``1e-13 * max(1, |lambda_ref|)``."""
    return 1e-13 * max(1.0, abs(lambda_ref))


@dataclass(frozen=True)
class OrderEstimate:
    """``values[k]`` is the order estimated at step ``k`` from errors ``k-2, k-1, k``.

    The first two entries are always ``None``; ``masked[k]`` marks orders that
    would use an error below the machine floor.
    """

    values: tuple
    masked: tuple

    def defined(self):
        return [v for v in self.values if v is not None]


def estimate_order(errors, floor=0.0):
    """Order estimates ``log(e[k]/e[k-1]) / log(e[k-1]/e[k-2])``.

    Errors below ``floor`` mark every order that depends on them as masked.
    Exact zeros are accepted only when ``floor > 0`` (they are then masked).
    """
    e = np.asarray(errors, dtype=float)
    if e.ndim != 1:
        raise DomainError("errors must be a flat sequence")
    if np.any(~np.isfinite(e)) or np.any(e < 0) or (floor <= 0 and np.any(e == 0)):
        raise DomainError("errors must be positive and finite")
    usable = e >= floor if floor > 0 else np.ones(e.shape, dtype=bool)
    if e.size < 3 or usable.sum() < 3:
        raise InsufficientDataError("need at least three usable error values")
    values = [None, None]
    masked = [False, False]
    with np.errstate(divide="ignore"):
        logs = np.log(e)
    for k in range(2, e.size):
        if not usable[k - 2:k + 1].all():
            values.append(None)
            masked.append(True)
            continue
        den = logs[k - 1] - logs[k - 2]
        values.append(float((logs[k] - logs[k - 1]) / den) if den != 0 else None)
        masked.append(False)
    return OrderEstimate(tuple(values), tuple(masked))


def mesh_order(lambda_ref, pairs):
    """Mesh-refinement orders ``log(err1/err2) / log(h1/h2)`` for consecutive pairs."""
    pairs = [(float(h), float(lam)) for h, lam in pairs]
    if len(pairs) < 2:
        raise InsufficientDataError("need at least two (h, lambda_h) pairs")
    out = []
    for (h1, l1), (h2, l2) in zip(pairs, pairs[1:]):
        if h1 == h2 or h1 <= 0 or h2 <= 0:
            raise DomainError(f"mesh sizes must be positive and distinct, got {h1} and {h2}")
        e1, e2 = abs(lambda_ref - l1), abs(lambda_ref - l2)
        if e1 == 0 or e2 == 0:
            raise DomainError("lambda_h coincides with the reference value")
        out.append((math.log(e1) - math.log(e2)) / (math.log(h1) - math.log(h2)))
    return out


def reference_eigenpair(op, v0=None, epsilon=REFERENCE_EPSILON, max_iters=REFERENCE_MAX_ITERS):
    """Principal eigenpair by plain power iteration run until the Collatz-Wielandt
    spread drops below ``epsilon``.

    Returns ``(lam, v)`` with ``lam`` the upper bound at the final iterate, so
    ``lam`` is within ``epsilon`` of the principal eigenvalue.

    Random tridiagonal matrices have Perron vectors whose tail components
    underflow, so the spread never closes there; for
    :class:`~cwpower.operators.TridiagonalMatrix` the largest eigenpair comes
    from LAPACK's symmetric tridiagonal solver instead.
    """
    if isinstance(op, TridiagonalMatrix):
        return _tridiagonal_reference(op)
    if v0 is None:
        v0 = np.ones(op.dimension)
    rep = plain_power(op, v0, StoppingRule(Criterion.SC1, epsilon, max_iters), record_trace=False)
    if rep.stop_reason is StopReason.MAX_ITERS:
        raise NoConvergenceError(f"power iteration did not reach a spread below {epsilon} in {max_iters} steps")
    return rep.lam, rep.vector


def _tridiagonal_reference(op):
    n = op.dimension
    w, V = eigh_tridiagonal(op.diagonal, op.off_diagonal, select="i", select_range=(n - 1, n - 1))
    v = V[:, 0]
    v = v if v.sum() >= 0 else -v
    return float(w[0]), v / np.linalg.norm(v)


def quadratic_ratios(errors, window=(1e-10, 1e-2)):
    """Ratios ``e[n+1] / e[n]**2`` over steps where both errors lie in ``window``."""
    lo, hi = window
    out = []
    for a, b in zip(errors, errors[1:]):
        if a is None or b is None:
            continue
        if lo <= a <= hi and lo <= b <= hi:
            out.append(b / a**2)
    return out


def cw_sandwich(op, y):
    b = collatz_wielandt(op, y)
    return b.lower, b.upper


# -- report rendering -------------------------------------------------------------

CSV_COLUMNS = ("n", "lambda", "error", "order", "criterion", "residual")


def _orders_for(report, order):
    if order is not None:
        return list(order.values)
    errs = report.errors
    if errs and all(e is not None for e in errs):
        ref = report.reference if report.reference is not None else 1.0
        floor = 1e-13 if report.relative_error else machine_floor(ref)
        try:
            return list(estimate_order(errs, floor).values)
        except (InsufficientDataError, DomainError):
            pass
    return [None] * len(report.records)


def _g6(x):
    return "" if x is None else f"{x:.6g}"


def emit_report(report, order=None, fmt="csv"):
    """Render a report as ``csv``, ``md`` (markdown) or ``json`` text."""
    fmt = {"markdown": "md"}.get(fmt, fmt)
    if fmt == "json":
        return report_to_json(report, order)
    orders = _orders_for(report, order)
    rows = [
        (str(r.n), _g6(r.lam), _g6(r.error), _g6(o), _g6(r.criterion), _g6(r.residual))
        for r, o in zip(report.records, orders)
    ]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        w.writerows(rows)
        return buf.getvalue()
    if fmt == "md":
        err = "relative error" if report.relative_error else "error"
        header = ("n", "lambda", err, "order", report.criterion, "residual")
        lines = [
            f"{report.algorithm}: stop={report.stop_reason.value}, iterations={report.iterations}, "
            f"lambda={report.lam:.17g}",
            "",
            "| " + " | ".join(header) + " |",
            "|" + "|".join("---" for _ in header) + "|",
        ]
        lines += ["| " + " | ".join(c if c else "--" for c in row) + " |" for row in rows]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


def report_to_json(report, order=None):
    orders = _orders_for(report, order)
    doc = {
        "algorithm": report.algorithm,
        "criterion": report.criterion,
        "epsilon": report.epsilon,
        "initial_lambda": report.initial_lambda,
        "stop_reason": report.stop_reason.value,
        "iterations": report.iterations,
        "lambda": report.lam,
        "reference": report.reference,
        "relative_error": report.relative_error,
        "records": [
            {
                "n": r.n,
                "lambda": r.lam,
                "criterion": r.criterion,
                "residual": r.residual,
                "gap": r.gap,
                "error": r.error,
                "order": o,
            }
            for r, o in zip(report.records, orders)
        ],
        "vector": [float(x) for x in report.vector],
    }
    # repr() of a float is the shortest string that round-trips exactly
    return json.dumps(doc, indent=2) + "\n"


def report_from_json(text):
    doc = json.loads(text)
    records = tuple(
        StepRecord(r["n"], r["lambda"], r["criterion"], r["residual"], r["gap"], r["error"])
        for r in doc["records"]
    )
    return ConvergenceReport(
        algorithm=doc["algorithm"],
        criterion=doc["criterion"],
        epsilon=doc["epsilon"],
        initial_lambda=doc["initial_lambda"],
        records=records,
        stop_reason=StopReason(doc["stop_reason"]),
        lam=doc["lambda"],
        vector=np.array(doc["vector"], dtype=float),
        reference=doc["reference"],
        relative_error=doc["relative_error"],
    )
