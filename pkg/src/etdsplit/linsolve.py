"""Shifted-operator factorizations and solves.

Two solve paths exist, matching the two scheme families:

* Axis-structured banded solves for the split scheme.  A 2-D system
  (k*A_axis - c*I) x = rhs with A_axis = -d (B kron I) or -d (I kron B)
  decouples into p1d independent 1-D systems sharing the single banded
  matrix M = -k*d*B - c*I, solved with one LU factorization (LAPACK
  gbtrf/gbtrs with partial pivoting) and a matrix of right-hand sides.

* Sparse LU of the full 2-D operator (k*A - shift*I), block-diagonal over
  species, for the unsplit schemes and the IMEX baseline.

Factorizations are computed once per (step size, pole) and reused for every
time step; both kinds are immutable and safe to share across workers.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as spla
from scipy.linalg import lapack

from .errors import ShapeError, SingularSystemError, ValidationError
from .spatial import AXIS_X, AXIS_Y, FullOperator, SplitOperators

_BANDWIDTH = 3  # lower/upper bandwidth of the 1-D axis operator

_DENSE_CAP = 64 * 64


@dataclass(frozen=True)
class ShiftedAxisMatrix:
    """Banded storage of M = -k*d*B - c*I for one (pole, species) pair.

    `bands` uses the LAPACK general-band layout with kl extra fill rows:
    bands[kl + ku + i - j, j] = M[i, j].
    """

    bands: np.ndarray
    pole: complex
    k: float
    species: int
    axis: str

    @property
    def n(self) -> int:
        return self.bands.shape[1]


def shifted_axis_matrix(ops: SplitOperators, k: float, pole: complex,
                        axis: str, species: int) -> ShiftedAxisMatrix:
    """Build the 1-D block of (k*A_axis - pole*I) in LAPACK band storage."""
    if not k > 0:
        raise ValidationError(f"need k > 0, got {k}")
    if axis not in (AXIS_X, AXIS_Y):
        raise ValidationError(f"unknown axis {axis!r}")
    d = ops.diffusion[species]
    b = ops.axis_op.mat.tocoo()
    n = b.shape[0]
    kl = ku = _BANDWIDTH
    bands = np.zeros((2 * kl + ku + 1, n), dtype=complex, order="F")
    bands[kl + ku, :] = -pole
    np.add.at(bands, (kl + ku + b.row - b.col, b.col), -k * d * b.data)
    return ShiftedAxisMatrix(bands=bands, pole=pole, k=k, species=species, axis=axis)


@dataclass(frozen=True)
class BandedFactorization:
    """Reusable LU factors (partial pivoting) of a ShiftedAxisMatrix."""

    lu: np.ndarray
    ipiv: np.ndarray
    kl: int
    ku: int
    pole: complex
    species: int

    @property
    def n(self) -> int:
        return self.lu.shape[1]

    def solve_columns(self, rhs: np.ndarray) -> np.ndarray:
        """Solve M X = RHS for a matrix of right-hand-side columns."""
        if rhs.shape[0] != self.n:
            raise ShapeError(f"rhs has {rhs.shape[0]} rows, expected {self.n}")
        x, info = lapack.zgbtrs(self.lu, self.kl, self.ku,
                                np.asarray(rhs, dtype=complex), self.ipiv)
        if info != 0:
            raise SingularSystemError(f"banded back-substitution failed (info={info})")
        return x


def factorize_axis(ops: SplitOperators, k: float, pole: complex,
                   axis: str, species: int) -> BandedFactorization:
    """LU-factorize -k*d*B - pole*I for one axis/species; reused every step."""
    m = shifted_axis_matrix(ops, k, pole, axis, species)
    kl = ku = _BANDWIDTH
    lu, ipiv, info = lapack.zgbtrf(m.bands, kl, ku)
    if info != 0:
        raise SingularSystemError(
            f"factorization of axis system is singular (pole={pole}, info={info})"
        )
    return BandedFactorization(lu=lu, ipiv=ipiv, kl=kl, ku=ku,
                               pole=pole, species=species)


def solve_axis_system(fact: BandedFactorization, rhs: np.ndarray, axis: str) -> np.ndarray:
    """Solve (k*A_axis - pole*I) x = rhs for one species block.

    rhs has shape (p, p) with axes (y, x).  The x axis solves each y-row,
    the y axis each x-column; both reduce to one banded solve with p
    right-hand sides and agree with the dense solve of the Kronecker system.
    """
    rhs = np.asarray(rhs)
    n = fact.n
    if rhs.shape != (n, n):
        raise ShapeError(f"rhs shape {rhs.shape}, expected ({n}, {n})")
    if axis == AXIS_X:
        return fact.solve_columns(rhs.T).T
    if axis == AXIS_Y:
        return fact.solve_columns(rhs)
    raise ValidationError(f"unknown axis {axis!r}")


@dataclass(frozen=True)
class SparseFactorization:
    """Per-species sparse LU of (k*A - shift*I) for the full 2-D operator."""

    factors: tuple   # splu objects, one per species
    shape: tuple     # (species, p, p)
    dtype: np.dtype

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs)
        if rhs.shape != self.shape:
            raise ShapeError(f"rhs shape {rhs.shape}, expected {self.shape}")
        out = np.empty(self.shape, dtype=np.result_type(self.dtype, rhs.dtype))
        for i, f in enumerate(self.factors):
            out[i] = f.solve(rhs[i].ravel().astype(self.dtype)).reshape(self.shape[1:])
        return out


def factorize_full(op: FullOperator, k: float, shift) -> SparseFactorization:
    """Sparse LU of (k*A - shift*I), one factor per species block."""
    if not k > 0:
        raise ValidationError(f"need k > 0, got {k}")
    dtype = np.dtype(complex) if np.iscomplexobj(np.asarray(shift)) else np.dtype(float)
    p = op.grid.p1d
    eye = sparse.identity(p * p, format="csr", dtype=dtype)
    factors = []
    for block in op.blocks:
        mat = (k * block.astype(dtype) - shift * eye).tocsc()
        try:
            # The stencil pattern is structurally symmetric, so the AT+A
            # ordering gives markedly less fill than the COLAMD default.
            factors.append(spla.splu(mat, permc_spec="MMD_AT_PLUS_A"))
        except RuntimeError as exc:  # SuperLU signals exact singularity this way
            raise SingularSystemError(str(exc)) from exc
    return SparseFactorization(factors=tuple(factors),
                               shape=(op.species, p, p), dtype=dtype)


def solve_full(fact: SparseFactorization, rhs: np.ndarray) -> np.ndarray:
    """Solve the factorized full system for a field-shaped right-hand side."""
    return fact.solve(rhs)


def dense_reference_solve(mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Direct dense solve used as a test oracle (size-capped)."""
    mat = np.asarray(mat)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ShapeError(f"matrix shape {mat.shape} is not square")
    if mat.shape[0] > _DENSE_CAP:
        raise ValidationError(f"dense reference solver capped at {_DENSE_CAP}")
    try:
        return np.linalg.solve(mat, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc
