"""Direct solvers behind ``apply`` and ``shifted_solve``.

Three factorization flavours are used:

* dense LU with partial pivoting (LAPACK ``getrf`` via :func:`scipy.linalg.lu_factor`),
* tridiagonal LU with partial pivoting (LAPACK ``gttrf``),
* banded Cholesky for the 5-point stencil (LAPACK ``pbtrf``), with a sparse LU
  fallback for indefinite stencil shifts such as those met by Rayleigh quotient
  iteration.

A :class:`Factorization` is immutable and remembers the ``target`` it was
built for (usually ``(operator token, shift)``); :func:`solve` refuses to use
it for any other target.
"""

import warnings
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import lapack

from .errors import (
    FactorizationMismatchError,
    IllConditionedWarning,
    ShapeError,
    ShiftCollisionError,
    SingularMatrixError,
)

COND_WARN_THRESHOLD = 1e15

_EPS = np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class Factorization:
    kind: str
    dimension: int
    data: Any = field(repr=False)
    target: Optional[tuple] = None
    pivot_growth: float = 1.0
    rcond: Optional[float] = None
    ill_conditioned: bool = False
    # stencil solves return matrix @ z when ``post`` is set
    post: Any = field(default=None, repr=False)

    @property
    def condition_estimate(self):
        if self.rcond is None:
            return None
        return np.inf if self.rcond == 0 else 1.0 / self.rcond


def _as_square(M):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {M.shape}")
    return M


def factor_dense(M, target=None, warn=True):
    """LU-factor a dense square matrix.

    Parameters
    ----------
    M : (n, n) array_like
    target : hashable, optional
        Identity of the system being factored; checked by :func:`solve`.
    warn : bool
        Emit :class:`IllConditionedWarning` when the 1-norm condition
        estimate exceeds ``1e15``. The flag ``ill_conditioned`` is set either way.

    Raises
    ------
    SingularMatrixError
        If a pivot of ``U`` is exactly zero.
    """
    M = _as_square(M)
    anorm = np.abs(M).sum(axis=0).max() if M.size else 0.0
    with warnings.catch_warnings():
        # exact singularity is reported below as an exception instead
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(M, check_finite=True)
    diag = np.diag(lu)
    if np.any(diag == 0.0):
        k = int(np.flatnonzero(diag == 0.0)[0])
        raise SingularMatrixError(f"matrix is exactly singular (zero pivot at {k})")
    rcond, info = lapack.dgecon(lu, anorm, norm="1")
    growth = float(np.abs(np.triu(lu)).max() / np.abs(M).max()) if anorm > 0 else 1.0
    ill = bool(rcond == 0 or 1.0 / rcond > COND_WARN_THRESHOLD)
    if ill and warn:
        warnings.warn(
            f"matrix is ill-conditioned (condition estimate {1.0 / rcond if rcond else np.inf:.3e})",
            IllConditionedWarning,
            stacklevel=2,
        )
    return Factorization("dense-lu", M.shape[0], (lu, piv), target, growth, float(rcond), ill)


def factor_tridiagonal(lower, diag, upper, target=None):
    """LU-factor a tridiagonal matrix given by its three diagonals."""
    diag = np.asarray(diag, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    n = diag.shape[0]
    if lower.shape != (n - 1,) or upper.shape != (n - 1,):
        raise ShapeError("off-diagonals must have length n - 1")
    if n < 3:
        # the LAPACK wrapper mishandles the empty second superdiagonal at n = 2
        dense = np.diag(diag) + np.diag(lower, -1) + np.diag(upper, 1)
        return factor_dense(dense, target=target, warn=False)
    dl, d, du, du2, ipiv, info = lapack.dgttrf(lower, diag, upper)
    if info > 0:
        raise SingularMatrixError(f"matrix is exactly singular (zero pivot at {info - 1})")
    return Factorization("tridiagonal-lu", n, (dl, d, du, du2, ipiv), target)


def _upper_banded(A, bandwidth):
    A = sp.coo_matrix(A)
    n = A.shape[0]
    ab = np.zeros((bandwidth + 1, n))
    keep = A.col >= A.row
    ab[bandwidth + A.row[keep] - A.col[keep], A.col[keep]] = A.data[keep]
    return ab


def factor_stencil(S, scale, diagonal_shift, target=None, definite=True, apply_stencil=False):
    """Factor ``scale*S + diagonal_shift*I`` for a stencil matrix ``S``.

    With ``definite=True`` a banded Cholesky factorization is used and any loss
    of positive definiteness (including a numerically zero pivot) is reported
    as :class:`ShiftCollisionError`. With ``definite=False`` a sparse LU
    factorization handles indefinite shifts.

    If ``apply_stencil`` is set, :func:`solve` returns ``S @ z`` where ``z``
    solves the factored system; this realizes ``(lam - T)^{-1} = S (lam*S - I)^{-1}``
    for ``T = S^{-1}``.
    """
    M = scale * S.matrix + diagonal_shift * sp.identity(S.dimension, format="csr")
    post = S.matrix if apply_stencil else None
    if definite:
        ab = _upper_banded(M, S.bandwidth)
        try:
            cb = sla.cholesky_banded(ab, lower=False, check_finite=True)
        except np.linalg.LinAlgError as exc:
            raise ShiftCollisionError(scale, f"stencil system not positive definite: {exc}") from exc
        pivots = cb[-1] ** 2
        if pivots.min() <= S.dimension * _EPS * np.abs(ab[-1]).max():
            raise ShiftCollisionError(scale, "stencil system is numerically singular")
        return Factorization("banded-cholesky", S.dimension, cb, target, post=post)
    try:
        lu = spla.splu(M.tocsc())
    except RuntimeError as exc:
        raise ShiftCollisionError(scale, f"stencil system is singular: {exc}") from exc
    return Factorization("sparse-lu", S.dimension, lu, target, post=post)


def solve(f, b, target=None):
    """Solve the factored system for right-hand side ``b``.

    ``target``, when given, must equal the target recorded at factorization
    time.
    """
    if target is not None and target != f.target:
        raise FactorizationMismatchError(
            f"factorization built for {f.target!r} used for {target!r}"
        )
    b = np.asarray(b, dtype=float)
    if b.shape != (f.dimension,):
        raise ShapeError(f"right-hand side has shape {b.shape}, expected ({f.dimension},)")
    if f.kind == "dense-lu":
        x = sla.lu_solve(f.data, b, check_finite=False)
    elif f.kind == "tridiagonal-lu":
        dl, d, du, du2, ipiv = f.data
        x, info = lapack.dgttrs(dl, d, du, du2, ipiv, b)
    elif f.kind == "banded-cholesky":
        x = sla.cho_solve_banded((f.data, False), b, check_finite=False)
    elif f.kind == "sparse-lu":
        x = f.data.solve(b)
    else:  # pragma: no cover
        raise ValueError(f"unknown factorization kind {f.kind!r}")
    if f.post is not None:
        x = f.post @ x
    return np.asarray(x, dtype=float)
