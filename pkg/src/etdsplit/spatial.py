"""Fourth-order finite-difference discretization of the Laplacian on [a,b]^2.

The square domain is partitioned in each direction into m+2 uniformly spaced
points x_j = a + j*h, j = 0..m+1, with mesh width h = (b-a)/(m+1) and m >= 3
interior nodes.  A single 1-D banded matrix B approximates d^2/dx^2 over the
unknowns of one axis; the 2-D operator splits into Kronecker factors

    A1 = -d (B kron I),   A2 = -d (I kron B),   A = A1 + A2 ~ -d*Laplacian

per species with diffusion coefficient d > 0.  A1 and A2 commute exactly.

Field ordering convention (fixed throughout the package): a state over s
species is an ndarray of shape (s, p, p) with axes (species, y, x) -- species
major, then y major, x fastest in memory.  p = p1d is m for homogeneous
Dirichlet boundaries (boundary values are known zeros and eliminated) and
m+2 for homogeneous Neumann boundaries (all nodes are unknowns).

Under this ordering, (B kron I) applies B along y (stride p) and (I kron B)
applies B along x (contiguous runs).
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse

from .errors import ShapeError, ValidationError

DIRICHLET = "dirichlet"
NEUMANN = "neumann"
BOUNDARY_KINDS = (DIRICHLET, NEUMANN)

AXIS_X = "x"
AXIS_Y = "y"

# 1-D stencil rows, in units of 1/(12 h^2).
_INTERIOR = (-1.0, 16.0, -30.0, 16.0, -1.0)          # centered, offsets -2..2
_DIRICHLET_EDGE = (-20.0, 6.0, 4.0, -1.0)            # first unknown row, offsets 0..3
_NEUMANN_CORNER = (-30.0, 32.0, -2.0)                # boundary node row, offsets 0..2
_NEUMANN_EDGE = (16.0, -31.0, 16.0, -1.0)            # next-to-boundary row, offsets -1..2


@dataclass(frozen=True)
class Grid2D:
    """Uniform tensor-product grid on [a,b]^2 with m interior nodes per axis."""

    a: float
    b: float
    m: int
    bc: str

    def __post_init__(self):
        if self.bc not in BOUNDARY_KINDS:
            raise ValidationError(f"unknown boundary kind {self.bc!r}")
        if self.m < 3:
            raise ValidationError(f"need m >= 3 interior nodes per axis, got {self.m}")
        if not self.b > self.a:
            raise ValidationError(f"empty domain [{self.a}, {self.b}]")

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.m + 1)

    @property
    def p1d(self) -> int:
        """Unknowns per axis: m (Dirichlet) or m+2 (Neumann)."""
        return self.m if self.bc == DIRICHLET else self.m + 2

    def axis_nodes(self) -> np.ndarray:
        """Coordinates of the unknown nodes along one axis."""
        if self.bc == DIRICHLET:
            j = np.arange(1, self.m + 1)
        else:
            j = np.arange(0, self.m + 2)
        return self.a + j * self.h

    def meshgrid(self):
        """(X, Y) arrays of shape (p1d, p1d); X varies along the last axis."""
        x = self.axis_nodes()
        return np.meshgrid(x, x)


@dataclass(frozen=True)
class AxisOperator:
    """Banded 1-D matrix B ~ d^2/dx^2 over the unknowns of one axis.

    Stored as a scipy dia_matrix; lower/upper bandwidth <= 3.  For Neumann
    boundaries every row sums to zero exactly, so constants lie in the kernel.
    """

    mat: sparse.dia_matrix
    h: float
    bc: str

    @property
    def p1d(self) -> int:
        return self.mat.shape[0]

    def toarray(self) -> np.ndarray:
        return self.mat.toarray()


def build_axis_operator(m: int, h: float, bc: str) -> AxisOperator:
    """Assemble the 1-D fourth-order operator for one axis.

    Interior rows carry the centered stencil (-1, 16, -30, 16, -1)/(12 h^2).
    Near-boundary rows close the stencil according to the boundary kind:
    homogeneous Dirichlet eliminates the known boundary values and uses a
    one-sided fourth-degree interpolation row next to each wall; homogeneous
    Neumann folds the ghost values back with even symmetry, keeping every
    node (including the wall nodes) as an unknown.
    """
    if m < 3:
        raise ValidationError(f"need m >= 3, got {m}")
    if not h > 0:
        raise ValidationError(f"need h > 0, got {h}")
    if bc not in BOUNDARY_KINDS:
        raise ValidationError(f"unknown boundary kind {bc!r}")

    if bc == DIRICHLET:
        # Coefficients that fall on boundary columns multiply known zeros
        # and are dropped, which truncates the edge rows when m is small.
        p = m
        dense = np.zeros((p, p))
        for off, c in enumerate(_DIRICHLET_EDGE):
            if off < p:
                dense[0, off] = c
                dense[p - 1, p - 1 - off] = c
        for i in range(1, p - 1):
            for off, c in zip(range(-2, 3), _INTERIOR):
                j = i + off
                if 0 <= j < p:
                    dense[i, j] = c
    else:
        p = m + 2
        dense = np.zeros((p, p))
        dense[0, : len(_NEUMANN_CORNER)] = _NEUMANN_CORNER
        dense[p - 1, p - len(_NEUMANN_CORNER):] = _NEUMANN_CORNER[::-1]
        dense[1, 0:4] = _NEUMANN_EDGE
        dense[p - 2, p - 4: p] = _NEUMANN_EDGE[::-1]
        for i in range(2, p - 2):
            dense[i, i - 2: i + 3] = _INTERIOR

    dense /= 12.0 * h * h
    return AxisOperator(mat=sparse.dia_matrix(dense), h=h, bc=bc)


@dataclass(frozen=True)
class SplitOperators:
    """Per-species split operators A1 = -d(B kron I), A2 = -d(I kron B).

    Held implicitly through the shared 1-D operator B and the diffusion
    coefficients; the Kronecker products are never densified.
    """

    grid: Grid2D
    diffusion: tuple
    axis_op: AxisOperator

    @property
    def species(self) -> int:
        return len(self.diffusion)


def assemble_split(grid: Grid2D, diffusion) -> SplitOperators:
    """Build split operators for every species on the given grid."""
    diffusion = tuple(float(d) for d in np.atleast_1d(diffusion))
    if any(d <= 0 for d in diffusion):
        raise ValidationError(f"diffusion coefficients must be positive, got {diffusion}")
    b_op = build_axis_operator(grid.m, grid.h, grid.bc)
    return SplitOperators(grid=grid, diffusion=diffusion, axis_op=b_op)


def _check_field(ops: SplitOperators, u: np.ndarray) -> np.ndarray:
    p = ops.grid.p1d
    u = np.asarray(u)
    if u.shape != (ops.species, p, p):
        raise ShapeError(
            f"field shape {u.shape} does not match (species, p, p) = "
            f"({ops.species}, {p}, {p})"
        )
    return u


def apply_axis(ops: SplitOperators, u: np.ndarray, axis: str, species: int) -> np.ndarray:
    """Apply one split operator to a species block: returns -d * (B along axis).

    The x axis acts on contiguous x-runs, the y axis with stride p1d; the
    result is the (p, p) block for the requested species.
    """
    u = _check_field(ops, u)
    d = ops.diffusion[species]
    block = u[species]
    bmat = ops.axis_op.mat
    if axis == AXIS_Y:
        out = bmat @ block
    elif axis == AXIS_X:
        out = (bmat @ block.T).T
    else:
        raise ValidationError(f"axis must be {AXIS_X!r} or {AXIS_Y!r}, got {axis!r}")
    return -d * out


@dataclass(frozen=True)
class FullOperator:
    """Unsplit 2-D operator A = A1 + A2, block-diagonal over species."""

    grid: Grid2D
    diffusion: tuple
    blocks: tuple  # csr matrices, one per species, each p1d^2 x p1d^2

    @property
    def species(self) -> int:
        return len(self.diffusion)

    def matvec(self, u: np.ndarray) -> np.ndarray:
        p = self.grid.p1d
        out = np.empty_like(u)
        for i, block in enumerate(self.blocks):
            out[i] = (block @ u[i].ravel()).reshape(p, p)
        return out


def assemble_full(grid: Grid2D, diffusion) -> FullOperator:
    """Assemble sparse A = A1 + A2 per species for the unsplit schemes."""
    split = assemble_split(grid, diffusion)
    b = split.axis_op.mat.tocsr()
    eye = sparse.identity(grid.p1d, format="csr")
    lap = sparse.kron(b, eye, format="csr") + sparse.kron(eye, b, format="csr")
    blocks = tuple((-d) * lap for d in split.diffusion)
    return FullOperator(grid=grid, diffusion=split.diffusion, blocks=blocks)
