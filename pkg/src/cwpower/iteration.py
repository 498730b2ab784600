"""Power-type iterations for the principal eigenpair of a positive operator.

The main algorithm is the variable-shift iteration driven by the
Collatz-Wielandt upper bound::

    lam_0 = max_i (op v0)_i / (v0)_i
    (lam_n - op) w_{n+1} = v_n,   v_{n+1} = w_{n+1} / ||w_{n+1}||_2
    lam_{n+1} = max_i (op v_{n+1})_i / (v_{n+1})_i                 (sup update)
             or lam_n - min_i (v_n)_i / (w_{n+1})_i                (mu update)

Starting from any positive vector, the shifts decrease strictly towards the
principal eigenvalue and the convergence is quadratic. Fixed-shift inverse
power iteration, plain power iteration and Rayleigh quotient iteration are
provided as baselines.

Step numbering: step ``n`` produces ``(lam_n, v_n)``. The ``sc1`` and ``sc2``
values of step ``n`` are the ratio spreads at ``v_n`` (``sc2`` uses
``v_{n-1} / w_n``; both coincide up to round-off). The ``dlambda`` value of step
``n`` is ``|lam_{n+1} - lam_n|``, so it needs one confirming step; when it
fires, ``(lam_n, v_n)`` is returned and the confirming step is discarded.
"""

import enum
import time
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import (
    PositivityError,
    ShapeError,
    ShiftCollisionError,
    ShiftTooSmallError,
    StateError,
    UnsupportedCriterionError,
)
from .operators import OperatorKind
from .report import ConvergenceReport, StepRecord, StopReason

DEGENERATE_GAP = 1e-13
DEFAULT_MAX_ITERS = 200
MATRIX_EPSILON = 1e-14


class Criterion(enum.Enum):
    SC1 = "sc1"
    SC2 = "sc2"
    LAMBDA_DIFF = "dlambda"
    RESIDUAL = "residual"


class Update(enum.Enum):
    SUP = "sup"
    MU = "mu"


@dataclass(frozen=True)
class StoppingRule:
    kind: Criterion = Criterion.LAMBDA_DIFF
    epsilon: float = MATRIX_EPSILON
    max_iters: int = DEFAULT_MAX_ITERS

    def __post_init__(self):
        object.__setattr__(self, "kind", Criterion(self.kind))
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError(f"max_iters must be a positive integer, got {self.max_iters}")


@dataclass(frozen=True)
class SolverConfig:
    stopping: StoppingRule = StoppingRule()
    update: Optional[Update] = None
    record_trace: bool = True

    def __post_init__(self):
        if self.update is not None:
            object.__setattr__(self, "update", Update(self.update))


def grid_epsilon(h):
    """Quick-mode tolerance ``h**2 / 10`` for grid problems."""
    return h * h / 10.0


def default_update(op):
    # mu saves one application of T per step, which is a solve for grid operators
    return Update.MU if op.kind is OperatorKind.INVERSE_LAPLACIAN else Update.SUP


@dataclass(frozen=True)
class CWBounds:
    lower: float
    upper: float
    argmin_index: int
    argmax_index: int

    @property
    def gap(self):
        return self.upper - self.lower


@dataclass(frozen=True, eq=False)
class IterationState:
    """Iterate ``n``: shift ``lam``, unit vector ``v``.

    ``w`` is the raw solve output with ``(lam_{n-1} - op) w = v_prev`` and
    ``image`` caches ``op @ v`` when it has been computed.
    """

    n: int
    lam: float
    v: np.ndarray
    w: Optional[np.ndarray] = None
    v_prev: Optional[np.ndarray] = None
    image: Optional[np.ndarray] = None


def _bounds(image, y):
    r = image / y
    i, j = int(np.argmin(r)), int(np.argmax(r))
    return CWBounds(float(r[i]), float(r[j]), i, j)


def _require_positive(y, what="vector"):
    if not np.all(y > 0):
        k = int(np.flatnonzero(~(y > 0))[0])
        raise PositivityError(f"{what} must be entrywise positive; entry {k} is {y[k]!r}")


def collatz_wielandt(op, y, image=None):
    """Collatz-Wielandt bounds ``min_i (op y)_i / y_i`` and ``max_i (op y)_i / y_i``.

    For a primitive nonnegative operator the spectral radius lies between
    them. Ties are broken towards the smallest index.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (op.dimension,):
        raise ShapeError(f"vector has shape {y.shape}, operator dimension is {op.dimension}")
    _require_positive(y)
    if image is None:
        image = op.apply(y)
    return _bounds(image, y)


def residual(op, state):
    """``||op v - lam v||_2`` for the state's unit vector ``v``."""
    image = state.image if state.image is not None else op.apply(state.v)
    return float(np.linalg.norm(image - state.lam * state.v))


def evaluate_stop(rule, op, state, prev_lambda=None):
    """Return ``(fired, value)`` for the stopping rule at ``state``."""
    kind = rule.kind
    if kind is Criterion.SC1:
        value = collatz_wielandt(op, state.v, image=state.image).gap
    elif kind is Criterion.SC2:
        if state.w is None or state.v_prev is None:
            raise StateError("sc2 needs the solve output w and the previous iterate")
        _require_positive(state.w, "solve output")
        q = state.v_prev / state.w
        value = float(q.max() - q.min())
    elif kind is Criterion.LAMBDA_DIFF:
        if prev_lambda is None:
            raise StateError("dlambda needs the previous shift")
        value = abs(state.lam - prev_lambda)
    else:
        value = residual(op, state)
    return bool(value < rule.epsilon), float(value)


def _start_vector(op, v0, positive=True):
    v0 = np.asarray(v0, dtype=float)
    if v0.shape != (op.dimension,):
        raise ShapeError(f"start vector has shape {v0.shape}, operator dimension is {op.dimension}")
    if positive:
        _require_positive(v0, "start vector")
    nrm = np.linalg.norm(v0)
    if not nrm > 0:
        raise ValueError("start vector must be nonzero")
    return v0 / nrm


def _record(op, state, criterion, full, positive):
    gap = res = None
    if full or state.image is not None:
        image = state.image if state.image is not None else op.apply(state.v)
        res = float(np.linalg.norm(image - state.lam * state.v))
        if positive and np.all(state.v > 0):
            gap = _bounds(image, state.v).gap
    return StepRecord(state.n, float(state.lam), criterion, res, gap)


def _drive(op, start, rule, step, algorithm, record_trace, positive, t0):
    """Run ``step`` from ``start`` until ``rule`` fires.

    ``step(state)`` returns the next :class:`IterationState`; a
    :class:`ShiftCollisionError` from it halts the run at the current state.
    """
    records = []
    iterates = []
    state = start
    lookahead = rule.kind is Criterion.LAMBDA_DIFF
    stop = StopReason.MAX_ITERS
    n_max = rule.max_iters + (1 if lookahead else 0)
    for _ in range(n_max):
        try:
            new = step(state)
        except ShiftTooSmallError:
            raise
        except ShiftCollisionError:
            stop = StopReason.SHIFT_COLLISION
            break
        if lookahead:
            fired, value = evaluate_stop(rule, op, new, prev_lambda=state.lam)
            if records:
                records[-1] = replace(records[-1], criterion=value)
            if fired:
                stop = StopReason.CRITERION_MET
                break
            if new.n > rule.max_iters:
                break
            records.append(_record(op, new, None, record_trace, positive))
        else:
            fired, value = evaluate_stop(rule, op, new)
            records.append(_record(op, new, value, record_trace, positive))
        if record_trace:
            iterates.append(new.v)
        state = new
        if not lookahead and fired:
            stop = StopReason.CRITERION_MET
            break
    return ConvergenceReport(
        algorithm=algorithm,
        criterion=rule.kind.value,
        epsilon=rule.epsilon,
        initial_lambda=float(start.lam),
        records=tuple(records),
        stop_reason=stop,
        lam=float(state.lam),
        vector=state.v,
        wall_time=time.perf_counter() - t0,
        iterates=tuple(iterates),
    )


def _immediate(algorithm, rule, lam, v, t0):
    return ConvergenceReport(
        algorithm=algorithm,
        criterion=rule.kind.value,
        epsilon=rule.epsilon,
        initial_lambda=float(lam),
        records=(),
        stop_reason=StopReason.EIGENVECTOR_START,
        lam=float(lam),
        vector=v,
        wall_time=time.perf_counter() - t0,
    )


def variable_lambda_power(op, v0, config=None):
    """Variable-shift Collatz-Wielandt power iteration.

    Parameters
    ----------
    op : PositiveLinearOperator
        Primitive, positivity-preserving operator.
    v0 : (m,) array_like
        Entrywise-positive start vector.
    config : SolverConfig, optional
        Stopping rule and shift update; the update defaults to ``mu`` for
        grid operators and ``sup`` for matrices.

    Returns
    -------
    ConvergenceReport
        If ``v0`` already has (numerically) equal Collatz-Wielandt bounds it is
        returned as the eigenvector with stop reason ``EigenvectorStart``. A
        shift that makes ``lam - op`` numerically singular ends the run with
        stop reason ``ShiftCollision``; the shift is then within round-off of
        the eigenvalue. The same holds when the solution loses positivity while
        the Collatz-Wielandt gap of the current iterate is at round-off level.

    Raises
    ------
    PositivityError
        If a solution loses positivity while the gap is still resolved, which
        means ``op`` is not primitive.
    """
    t0 = time.perf_counter()
    config = config or SolverConfig()
    rule = config.stopping
    update = config.update or default_update(op)
    v = _start_vector(op, v0)
    image = op.apply(v)
    cw = _bounds(image, v)
    algorithm = f"cw-{update.value}"
    if cw.gap <= DEGENERATE_GAP * abs(cw.upper):
        return _immediate(algorithm, rule, cw.upper, v, t0)

    def step(state):
        try:
            w = op.shifted_solve(state.lam, state.v)
            _require_positive(w, "solve output")
        except PositivityError as exc:
            # a shift within round-off of the eigenvalue gives a solution of arbitrary sign
            image = state.image if state.image is not None else op.apply(state.v)
            if _bounds(image, state.v).gap <= DEGENERATE_GAP * abs(state.lam):
                raise ShiftCollisionError(state.lam, "shift equals the eigenvalue to working precision") from exc
            raise
        v_new = w / np.linalg.norm(w)
        if update is Update.SUP:
            image = op.apply(v_new)
            _require_positive(v_new, "iterate")
            lam = _bounds(image, v_new).upper
        else:
            image = None
            lam = state.lam - float(np.min(state.v / w))
        return IterationState(state.n + 1, lam, v_new, w=w, v_prev=state.v, image=image)

    start = IterationState(0, cw.upper, v, image=image)
    return _drive(op, start, rule, step, algorithm, config.record_trace, True, t0)


def _unit_angle(a, b):
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    # stable for tiny angles, unlike arccos
    return 2.0 * np.arcsin(min(1.0, np.linalg.norm(a - b) / 2.0))


def mu_matches_sup(op, v0, n_steps, rtol=1e-11, angle_tol=1e-9):
    """Check that the sup- and mu-updates produce the same iterates.

    Both updates are run from ``v0`` for up to ``n_steps`` steps; every step
    present in both runs must agree in the shift to ``rtol`` (relative) and
    in the direction of the iterate to ``angle_tol`` radians.
    """
    rule = StoppingRule(Criterion.LAMBDA_DIFF, np.finfo(float).tiny, max(1, n_steps))
    sup = variable_lambda_power(op, v0, SolverConfig(rule, Update.SUP, True))
    mu = variable_lambda_power(op, v0, SolverConfig(rule, Update.MU, True))
    if sup.stop_reason is StopReason.EIGENVECTOR_START or mu.stop_reason is StopReason.EIGENVECTOR_START:
        return sup.stop_reason is mu.stop_reason and sup.lam == mu.lam
    for a, b, va, vb in zip(sup.records, mu.records, sup.iterates, mu.iterates):
        if a.n > n_steps:
            break
        if abs(a.lam - b.lam) > rtol * abs(a.lam):
            return False
        if _unit_angle(va, vb) > angle_tol:
            return False
    return True


def fixed_shift_power(op, v0, lam, stopping=None, record_trace=True):
    """Inverse power iteration with a fixed shift ``lam`` above the principal eigenvalue.

    The eigenvalue estimate at each step is the Rayleigh quotient
    ``v^T op v``. Convergence is linear with rate ``(lam - lam_1)/(lam - lam_2)``.

    Raises
    ------
    ShiftTooSmallError
        When ``lam`` is not above the principal eigenvalue: either it is below
        the lower Collatz-Wielandt bound of ``v0``, or a shifted solve fails
        or loses positivity.
    """
    t0 = time.perf_counter()
    rule = stopping or StoppingRule()
    v = _start_vector(op, v0)
    image = op.apply(v)
    cw = _bounds(image, v)
    if lam <= cw.lower:
        raise ShiftTooSmallError(lam, f"shift {lam!r} does not exceed the lower bound {cw.lower!r}")

    def step(state):
        try:
            w = op.shifted_solve(lam, state.v)
            _require_positive(w, "solve output")
        except (ShiftCollisionError, PositivityError) as exc:
            raise ShiftTooSmallError(lam, f"shift {lam!r} is not above the principal eigenvalue: {exc}") from exc
        v_new = w / np.linalg.norm(w)
        image = op.apply(v_new)
        return IterationState(state.n + 1, float(v_new @ image), v_new, w=w, v_prev=state.v, image=image)

    start = IterationState(0, float(v @ image), v, image=image)
    return _drive(op, start, rule, step, "fixed-shift", record_trace, True, t0)


def plain_power(op, v0, stopping=None, record_trace=True):
    """Multiplicative power iteration ``v_{n+1} = op v_n / ||op v_n||``.

    The eigenvalue estimate is the upper Collatz-Wielandt bound at ``v_n``.
    """
    t0 = time.perf_counter()
    rule = stopping or StoppingRule(Criterion.SC1)
    if rule.kind is Criterion.SC2:
        raise UnsupportedCriterionError("sc2 needs shifted solves; use sc1 for plain power iteration")
    v = _start_vector(op, v0)
    image = op.apply(v)
    cw = _bounds(image, v)
    if cw.gap <= DEGENERATE_GAP * abs(cw.upper):
        return _immediate("power", rule, cw.upper, v, t0)

    def step(state):
        v_new = state.image / np.linalg.norm(state.image)
        _require_positive(v_new, "iterate")
        image = op.apply(v_new)
        return IterationState(state.n + 1, _bounds(image, v_new).upper, v_new, image=image)

    start = IterationState(0, cw.upper, v, image=image)
    return _drive(op, start, rule, step, "power", record_trace, True, t0)


def rayleigh_quotient_iteration(op, v0, stopping=None, record_trace=True):
    """Rayleigh quotient iteration (shift = ``v^T op v`` each step).

    Converges locally, possibly to a non-principal eigenpair; iterates need not
    stay positive, so only ``dlambda`` and ``residual`` stopping is allowed.
    A singular shifted system ends the run with stop reason ``ShiftCollision``.
    """
    t0 = time.perf_counter()
    rule = stopping or StoppingRule()
    if rule.kind in (Criterion.SC1, Criterion.SC2):
        raise UnsupportedCriterionError(
            f"{rule.kind.value} requires positive iterates, which Rayleigh quotient iteration does not keep"
        )
    v = _start_vector(op, v0, positive=False)
    image = op.apply(v)

    def step(state):
        w = op.shifted_solve(state.lam, state.v, check_positive=False, definite=False)
        v_new = w / np.linalg.norm(w)
        image = op.apply(v_new)
        return IterationState(state.n + 1, float(v_new @ image), v_new, w=w, v_prev=state.v, image=image)

    start = IterationState(0, float(v @ image), v, image=image)
    return _drive(op, start, rule, step, "rayleigh", record_trace, False, t0)
