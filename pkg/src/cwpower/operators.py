"""Positive linear operators: dense nonnegative matrices, symmetric tridiagonal
matrices, and the inverse discrete Dirichlet Laplacian ``T_h = (-Delta_h)^{-1}``.

Every operator offers the same three things the iterations need:

* ``apply(v)``         -- ``op @ v``
* ``shifted_solve(lam, v)`` -- ``w`` with ``(lam*I - op) w = v``
* ``dimension``

The iterations assume the operator is *primitive* (some power is entrywise
positive). That is not checked; on an imprimitive matrix such as a
permutation the behaviour of the algorithms is undefined.
"""

import enum

import numpy as np

from . import linsolve
from .errors import (
    DomainError,
    InvalidDimensionError,
    ParseError,
    PositivityError,
    ShapeError,
    ShiftCollisionError,
    SingularMatrixError,
)
from .grid import assemble

POSITIVITY_TOL = 1e-12

# numpy.random.Generator(PCG64); documented so that seeded runs are reproducible
DEFAULT_BIT_GENERATOR = "PCG64"


class OperatorKind(enum.Enum):
    DENSE = "DenseMatrix"
    TRIDIAGONAL = "Tridiagonal"
    INVERSE_LAPLACIAN = "InverseLaplacian"


class PositiveLinearOperator:
    """Common interface. Subclasses are immutable after construction."""

    kind = None

    @property
    def dimension(self):
        raise NotImplementedError

    @property
    def is_matrix(self):
        return self.kind is not OperatorKind.INVERSE_LAPLACIAN

    def _check(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dimension,):
            raise ShapeError(f"vector has shape {v.shape}, operator dimension is {self.dimension}")
        return v

    def apply(self, v):
        raise NotImplementedError

    def factor_shift(self, lam, definite=True):
        """Factorization of ``lam*I - op``; raises :class:`ShiftCollisionError`."""
        raise NotImplementedError

    def shifted_solve(self, lam, v, check_positive=True, definite=True):
        """Solve ``(lam*I - op) w = v``.

        With ``check_positive`` the result must be entrywise positive up to a
        round-off allowance of ``-1e-12 * max|w|``; larger negative entries raise
        :class:`PositivityError`. ``definite=False`` allows shifts below the
        principal eigenvalue (needed by Rayleigh quotient iteration).
        """
        v = self._check(v)
        f = self.factor_shift(lam, definite=definite)
        w = linsolve.solve(f, v)
        if not np.all(np.isfinite(w)):
            raise ShiftCollisionError(lam, "shifted solve produced non-finite values")
        if check_positive:
            check_positive_vector(w)
        return w

    def __call__(self, v):
        return self.apply(v)

    def __matmul__(self, v):
        return self.apply(v)


def check_positive_vector(w, tol=POSITIVITY_TOL):
    scale = np.abs(w).max() if w.size else 0.0
    bad = w < -tol * scale
    if scale == 0 or np.any(bad):
        k = int(np.flatnonzero(bad)[0]) if np.any(bad) else 0
        raise PositivityError(f"solution lost positivity: w[{k}] = {w[k]!r} (max |w| = {scale!r})")


class DenseMatrix(PositiveLinearOperator):
    """Square matrix with nonnegative entries."""

    kind = OperatorKind.DENSE

    def __init__(self, entries):
        A = np.array(entries, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ShapeError(f"expected a square matrix, got shape {A.shape}")
        if A.shape[0] == 0:
            raise InvalidDimensionError("matrix dimension must be at least 1")
        if not np.all(np.isfinite(A)):
            raise DomainError("matrix entries must be finite")
        if np.any(A < 0):
            raise DomainError("matrix entries must be nonnegative")
        A.setflags(write=False)
        self._A = A

    @property
    def entries(self):
        return self._A

    @property
    def dimension(self):
        return self._A.shape[0]

    def toarray(self):
        return self._A.copy()

    def apply(self, v):
        return self._A @ self._check(v)

    def factor_shift(self, lam, definite=True):
        M = lam * np.eye(self.dimension) - self._A
        try:
            return linsolve.factor_dense(M, target=(id(self), lam), warn=False)
        except SingularMatrixError as exc:
            raise ShiftCollisionError(lam, str(exc)) from exc

    def __repr__(self):
        return f"DenseMatrix(dimension={self.dimension})"


class TridiagonalMatrix(PositiveLinearOperator):
    """Symmetric tridiagonal matrix with nonnegative entries."""

    kind = OperatorKind.TRIDIAGONAL

    def __init__(self, diagonal, off_diagonal, seed=None):
        a = np.array(diagonal, dtype=float)
        b = np.array(off_diagonal, dtype=float)
        if a.ndim != 1 or a.size < 1 or b.shape != (a.size - 1,):
            raise ShapeError("need n diagonal and n - 1 off-diagonal entries")
        if np.any(a < 0) or np.any(b < 0):
            raise DomainError("tridiagonal entries must be nonnegative")
        a.setflags(write=False)
        b.setflags(write=False)
        self.diagonal = a
        self.off_diagonal = b
        self.seed = seed

    @property
    def dimension(self):
        return self.diagonal.size

    def toarray(self):
        return np.diag(self.diagonal) + np.diag(self.off_diagonal, 1) + np.diag(self.off_diagonal, -1)

    def apply(self, v):
        v = self._check(v)
        y = self.diagonal * v
        y[:-1] += self.off_diagonal * v[1:]
        y[1:] += self.off_diagonal * v[:-1]
        return y

    def factor_shift(self, lam, definite=True):
        off = -self.off_diagonal
        try:
            return linsolve.factor_tridiagonal(off, lam - self.diagonal, off, target=(id(self), lam))
        except SingularMatrixError as exc:
            raise ShiftCollisionError(lam, str(exc)) from exc

    def __repr__(self):
        return f"TridiagonalMatrix(dimension={self.dimension}, seed={self.seed})"


class InverseLaplacian(PositiveLinearOperator):
    """``T_h = (-Delta_h)^{-1}`` on a grid domain with zero Dirichlet data.

    Applying ``T_h`` is a solve with the (cached, immutable) Cholesky factor of
    the stencil matrix. Shifted solves use
    ``(lam - T_h)^{-1} v = A_h (lam*A_h - I)^{-1} v`` with ``A_h = -Delta_h``.
    """

    kind = OperatorKind.INVERSE_LAPLACIAN

    def __init__(self, domain):
        self.domain = domain
        self.stencil = assemble(domain)
        try:
            self._base = linsolve.factor_stencil(self.stencil, 1.0, 0.0, target=(id(self), None))
        except ShiftCollisionError as exc:  # pragma: no cover - SPD by construction
            raise DomainError(f"stencil matrix is singular: {exc}") from exc

    @property
    def dimension(self):
        return self.stencil.dimension

    def apply(self, v):
        return linsolve.solve(self._base, self._check(v))

    def factor_shift(self, lam, definite=True):
        return linsolve.factor_stencil(
            self.stencil, lam, -1.0, target=(id(self), lam), definite=definite, apply_stencil=True
        )

    def __repr__(self):
        return f"InverseLaplacian(h={self.domain.h}, dimension={self.dimension})"


def apply(op, v):
    return op.apply(v)


def shifted_solve(op, lam, v, **kwargs):
    return op.shifted_solve(lam, v, **kwargs)


def hilbert_matrix(n):
    """Hilbert matrix ``H[i, j] = 1 / (i + j - 1)`` (1-based indices)."""
    if int(n) != n or n < 1:
        raise InvalidDimensionError(f"Hilbert matrix order must be >= 1, got {n}")
    i = np.arange(1, int(n) + 1, dtype=float)
    return DenseMatrix(1.0 / (i[:, None] + i[None, :] - 1.0))


def _open_uniform(rng, high, size):
    x = rng.uniform(0.0, high, size)
    # uniform() samples [0, high); redraw the (astronomically rare) zeros
    while np.any(x == 0.0):
        zero = x == 0.0
        x[zero] = rng.uniform(0.0, high, int(zero.sum()))
    return x


def random_tridiagonal(n, seed):
    """Random symmetric tridiagonal matrix, diagonal ~ U(0,2), off-diagonal ~ U(0,1).

    Uses ``numpy.random.Generator(PCG64(seed))``; the diagonal is drawn first,
    then the off-diagonal.
    """
    if int(n) != n or n < 2:
        raise InvalidDimensionError(f"tridiagonal order must be >= 2, got {n}")
    n = int(n)
    rng = np.random.Generator(np.random.PCG64(seed))
    a = _open_uniform(rng, 2.0, n)
    b = _open_uniform(rng, 1.0, n - 1)
    return TridiagonalMatrix(a, b, seed=seed)


def load_matrix(path):
    """Read a dense matrix: a line with ``n``, then ``n`` rows of ``n`` numbers."""
    with open(path) as fh:
        text = fh.read()
    return parse_matrix(text, path=path)


def parse_matrix(text, path=None):
    lines = [(k + 1, ln) for k, ln in enumerate(text.splitlines()) if ln.strip()]
    if not lines:
        raise ParseError("empty matrix file", line=1, path=path)
    lineno, first = lines[0]
    try:
        n = int(first.strip())
    except ValueError:
        raise ParseError(f"expected matrix order, got {first!r}", line=lineno, path=path) from None
    if n < 1:
        raise ParseError("matrix order must be >= 1", line=lineno, path=path)
    rows = lines[1:]
    if len(rows) != n:
        line = rows[-1][0] + 1 if rows else lineno + 1
        raise ParseError(f"expected {n} rows, found {len(rows)}", line=line, path=path)
    A = np.empty((n, n))
    for i, (lineno, ln) in enumerate(rows):
        parts = ln.split()
        if len(parts) != n:
            raise ParseError(f"expected {n} entries, found {len(parts)}", line=lineno, path=path)
        try:
            A[i] = [float(p) for p in parts]
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno, path=path) from None
    return DenseMatrix(A)


def format_matrix(matrix):
    A = matrix.entries if isinstance(matrix, DenseMatrix) else np.asarray(matrix, dtype=float)
    out = [str(A.shape[0])]
    out += [" ".join(f"{x:.17g}" for x in row) for row in A]
    return "\n".join(out) + "\n"


def save_matrix(matrix, path):
    with open(path, "w") as fh:
        fh.write(format_matrix(matrix))
