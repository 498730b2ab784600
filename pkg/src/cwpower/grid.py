"""Grid domains and the 5-point Dirichlet Laplacian.

Nodes are vertex-centred at integer multiples of the spacing ``h``. A
:class:`GridDomain` stores only the rectangle of nodes that carries the mask;
every node outside the mask (including everything outside the rectangle) is a
boundary node with value zero.

Mask files are ASCII::

    nx ny
    h
    <ny rows of nx characters, '1' interior / '0' exterior, top row first>
"""

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp
from scipy import ndimage

from .errors import ConnectivityError, DomainError, InvalidSpacingError, ParseError


@dataclass(frozen=True, eq=False)
class GridDomain:
    """Interior-node mask on a uniform grid.

    ``mask[iy, ix]`` is row ``iy`` counted from the bottom; the node sits at
    ``origin + ((ix, iy)) * h``. Interior nodes are numbered row by row from
    the bottom-left.
    """

    h: float
    mask: np.ndarray
    origin: tuple = (0.0, 0.0)
    interior_index: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mask = np.array(self.mask, dtype=bool)
        if mask.ndim != 2:
            raise DomainError("mask must be two-dimensional")
        if not (self.h > 0 and np.isfinite(self.h)):
            raise InvalidSpacingError(f"grid spacing must be positive, got {self.h}")
        if not mask.any():
            raise DomainError("domain has no interior nodes")
        _, ncomp = ndimage.label(mask)
        if ncomp != 1:
            raise ConnectivityError(f"interior nodes form {ncomp} disconnected components")
        mask.setflags(write=False)
        index = np.full(mask.shape, -1, dtype=np.int64)
        index[mask] = np.arange(int(mask.sum()))
        index.setflags(write=False)
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "interior_index", index)

    @property
    def nx(self):
        return self.mask.shape[1]

    @property
    def ny(self):
        return self.mask.shape[0]

    @property
    def size(self):
        """Number of interior nodes (unknowns)."""
        return int(self.mask.sum())

    def coordinates(self):
        """(m, 2) array of interior node coordinates in index order."""
        iy, ix = np.nonzero(self.mask)
        return np.column_stack([self.origin[0] + ix * self.h, self.origin[1] + iy * self.h])

    def to_grid(self, values, fill=0.0):
        """Scatter a vector of interior values onto the (ny, nx) mask array."""
        out = np.full(self.mask.shape, fill, dtype=float)
        out[self.mask] = values
        return out

    def __eq__(self, other):
        if not isinstance(other, GridDomain):
            return NotImplemented
        return self.h == other.h and np.array_equal(self.mask, other.mask)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class StencilMatrix:
    """Sparse symmetric positive-definite matrix of ``-Delta_h`` on a domain."""

    matrix: sp.csr_matrix
    h: float
    bandwidth: int

    @property
    def dimension(self):
        return self.matrix.shape[0]

    def toarray(self):
        return self.matrix.toarray()


def _steps_per_unit(h):
    if isinstance(h, str):
        h = Fraction(h)
    if h <= 0:
        raise InvalidSpacingError(f"grid spacing must be positive, got {h}")
    inv = 1.0 / float(h)
    n = int(round(inv))
    if n < 1 or abs(inv - n) > 1e-9 * n:
        raise InvalidSpacingError(f"1/h must be an integer, got h={h}")
    return n


def unit_square(h):
    """Interior nodes of (0,1)^2 at spacing ``h`` (``1/h`` an integer)."""
    n = _steps_per_unit(h)
    if n < 2:
        raise DomainError(f"h={h} leaves no interior node in the unit square")
    return GridDomain(1.0 / n, np.ones((n - 1, n - 1), dtype=bool), origin=(1.0 / n, 1.0 / n))


def l_shape(h):
    """Interior nodes of (0,2)^2 minus the closed quadrant [1,2]x[1,2]."""
    n = _steps_per_unit(h)
    k = 2 * n - 1
    mask = np.ones((k, k), dtype=bool)
    # node index i sits at (i + 1) * h; x >= 1 <=> i >= n - 1
    mask[n - 1:, n - 1:] = False
    if not mask.any():
        raise DomainError(f"h={h} leaves no interior node in the L-shape")
    return GridDomain(1.0 / n, mask, origin=(1.0 / n, 1.0 / n))


def load_mask(path):
    """Read a :class:`GridDomain` from a mask file."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    return parse_mask(lines, path=path)


def parse_mask(lines, path=None):
    if isinstance(lines, str):
        lines = lines.splitlines()
    if len(lines) < 2:
        raise ParseError("expected header lines 'nx ny' and 'h'", line=len(lines) + 1, path=path)
    head = lines[0].split()
    try:
        nx, ny = (int(t) for t in head)
    except ValueError:
        raise ParseError(f"bad size line {lines[0]!r}", line=1, path=path) from None
    if nx < 1 or ny < 1:
        raise ParseError("nx and ny must be positive", line=1, path=path)
    try:
        h = float(Fraction(lines[1].strip()))
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"bad spacing {lines[1]!r}", line=2, path=path) from None
    body = lines[2:]
    while body and not body[-1].strip():
        body.pop()
    if len(body) != ny:
        raise ParseError(f"expected {ny} mask rows, found {len(body)}", line=3 + len(body), path=path)
    rows = []
    for k, row in enumerate(body):
        row = row.strip()
        if len(row) != nx:
            raise ParseError(f"row has {len(row)} cells, expected {nx}", line=3 + k, path=path)
        if set(row) - {"0", "1"}:
            raise ParseError(f"mask rows may contain only '0' and '1': {row!r}", line=3 + k, path=path)
        rows.append([c == "1" for c in row])
    # file rows run top to bottom; internal row 0 is the bottom
    mask = np.array(rows[::-1], dtype=bool)
    return GridDomain(h, mask, origin=(h, h))


def format_mask(domain):
    lines = [f"{domain.nx} {domain.ny}", repr(domain.h)]
    for row in domain.mask[::-1]:
        lines.append("".join("1" if c else "0" for c in row))
    return "\n".join(lines) + "\n"


def save_mask(domain, path):
    with open(path, "w") as fh:
        fh.write(format_mask(domain))


def assemble(domain):
    """Assemble the 5-point matrix of ``-Delta_h`` with zero Dirichlet data."""
    idx = domain.interior_index
    m = domain.size
    inv_h2 = 1.0 / domain.h**2
    rows = [np.arange(m)]
    cols = [np.arange(m)]
    vals = [np.full(m, 4.0 * inv_h2)]
    # each interior pair of horizontal / vertical neighbours, both directions
    for a, b in ((idx[:, :-1], idx[:, 1:]), (idx[:-1, :], idx[1:, :])):
        both = (a >= 0) & (b >= 0)
        i, j = a[both], b[both]
        rows += [i, j]
        cols += [j, i]
        vals += [np.full(i.size, -inv_h2)] * 2
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    A = sp.csr_matrix((np.concatenate(vals), (rows, cols)), shape=(m, m))
    bandwidth = int(np.abs(rows - cols).max()) if m > 1 else 0
    return StencilMatrix(A, domain.h, bandwidth)
