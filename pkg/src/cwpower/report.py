"""Convergence report returned by every iteration."""

import enum
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np


class StopReason(enum.Enum):
    CRITERION_MET = "CriterionMet"
    SHIFT_COLLISION = "ShiftCollision"
    EIGENVECTOR_START = "EigenvectorStart"
    MAX_ITERS = "MaxIters"

    @property
    def converged(self):
        return self is not StopReason.MAX_ITERS


@dataclass(frozen=True)
class StepRecord:
    """One iteration step ``n``.

    ``criterion`` is the stopping-criterion value attributed to step ``n``
    (``None`` when it was never evaluated), ``gap`` the Collatz-Wielandt spread
    ``max(op v / v) - min(op v / v)`` at ``v^n`` when known.
    """

    n: int
    lam: float
    criterion: Optional[float] = None
    residual: Optional[float] = None
    gap: Optional[float] = None
    error: Optional[float] = None


@dataclass(frozen=True)
class ConvergenceReport:
    algorithm: str
    criterion: str
    epsilon: float
    initial_lambda: float
    records: tuple
    stop_reason: StopReason
    lam: float
    vector: np.ndarray = field(compare=False, repr=False)
    reference: Optional[float] = None
    relative_error: bool = False
    wall_time: float = field(default=0.0, compare=False)
    iterates: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        ns = [r.n for r in self.records]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError("records must have strictly increasing n")

    @property
    def iterations(self):
        return self.records[-1].n if self.records else 0

    @property
    def converged(self):
        return self.stop_reason.converged

    @property
    def lambdas(self):
        return np.array([r.lam for r in self.records])

    @property
    def errors(self):
        return [r.error for r in self.records]

    def with_reference(self, reference, relative=False):
        """Copy of the report with per-step errors ``|lam_n - reference|``.

        With ``relative=True`` the errors are divided by ``|reference|``.
        """
        scale = abs(reference) if relative else 1.0
        records = tuple(replace(r, error=abs(r.lam - reference) / scale) for r in self.records)
        return replace(self, records=records, reference=float(reference), relative_error=relative)

    @property
    def final_error(self):
        if self.reference is None:
            return None
        scale = abs(self.reference) if self.relative_error else 1.0
        return abs(self.lam - self.reference) / scale
