"""Dense complex linear-algebra substrate.

Conventions fixed here and relied on everywhere else:

* Vectorization is column-stacking: ``vec(X) = X.flatten(order="F")``, so
  ``vec(L @ X @ R) = kron(R.T, L) @ vec(X)``.
* Unitary propagators of Hermitian generators are built from the
  eigendecomposition, exact to roundoff: ``U(t) = V exp(-i t diag(w)) V†``.
* Default tolerances: hermiticity 1e-12, unitarity 1e-10, density-matrix
  trace/positivity slack 1e-10. All overridable through :class:`Tolerances`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidDensityMatrix,
    NonFinite,
    NonHermitianInput,
)


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances shared across the library.

    ``cluster=None`` selects the spectral default
    ``1e-9 * max(1, spectral range)`` per decomposition.
    """

    hermiticity: float = 1e-12
    unitarity: float = 1e-10
    density: float = 1e-10
    cluster: float | None = None
    consistency: float = 1e-8
    prob_floor: float = 1e-14


DEFAULT_TOLERANCES = Tolerances()


def as_complex_matrix(A, name="matrix"):
    """Coerce to a 2-D complex ndarray and reject non-finite entries."""
    M = np.asarray(A, dtype=complex)
    if M.ndim != 2:
        raise DimensionMismatch(f"{name}: expected a 2-D matrix, got ndim={M.ndim}")
    if not np.all(np.isfinite(M.real)) or not np.all(np.isfinite(M.imag)):
        raise NonFinite(f"{name}: contains NaN or Inf entries")
    return M


def require_square(M, name="matrix"):
    if M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"{name}: expected square, got shape {M.shape}")
    return M


def hermiticity_defect(A):
    """max |A - A†| entrywise."""
    return float(np.max(np.abs(A - A.conj().T))) if A.size else 0.0


def require_hermitian(A, tol=DEFAULT_TOLERANCES.hermiticity, name="matrix"):
    M = require_square(as_complex_matrix(A, name), name)
    defect = hermiticity_defect(M)
    if defect > tol:
        raise NonHermitianInput(
            f"{name}: hermiticity defect {defect:.3e} exceeds tolerance {tol:.3e}"
        )
    return M


def require_density(rho, tol=DEFAULT_TOLERANCES.density, name="density matrix"):
    """Validate Hermiticity, unit trace, and positivity (within slack)."""
    M = require_hermitian(rho, max(tol, DEFAULT_TOLERANCES.hermiticity), name)
    tr = np.trace(M)
    if abs(tr - 1.0) > tol:
        raise InvalidDensityMatrix(f"{name}: trace {tr} differs from 1 beyond {tol:.1e}")
    w = np.linalg.eigvalsh(0.5 * (M + M.conj().T))
    if w[0] < -tol:
        raise InvalidDensityMatrix(
            f"{name}: minimum eigenvalue {w[0]:.3e} below positivity slack -{tol:.1e}"
        )
    return M


def hermitian_eig(A, tol=DEFAULT_TOLERANCES.hermiticity, name="matrix"):
    """Eigendecomposition A = V diag(w) V† of a Hermitian matrix.

    Returns ``(w, V)`` with ``w`` ascending and ``V`` unitary. The matrix is
    symmetrized before the solve so that inputs Hermitian only within ``tol``
    are treated evenhandedly.
    """
    M = require_hermitian(A, tol, name)
    w, V = np.linalg.eigh(0.5 * (M + M.conj().T))
    return w, V


def propagator(H, t, tol=DEFAULT_TOLERANCES.hermiticity):
    """Unitary exp(-i t H) for Hermitian H (hbar = 1)."""
    w, V = hermitian_eig(H, tol, "Hamiltonian")
    return (V * np.exp(-1j * t * w)) @ V.conj().T


def kron(A, B):
    """Kronecker product, dims multiply."""
    return np.kron(np.asarray(A, dtype=complex), np.asarray(B, dtype=complex))


def partial_trace(M, subsystem, dims):
    """Trace out one factor of a bipartite operator on C^{d1} ⊗ C^{d2}.

    ``subsystem`` names the factor that is traced OUT: "first" or "second".
    """
    d1, d2 = dims
    A = as_complex_matrix(M, "bipartite operator")
    require_square(A, "bipartite operator")
    if A.shape[0] != d1 * d2:
        raise DimensionMismatch(
            f"operator side {A.shape[0]} does not equal d1*d2 = {d1 * d2}"
        )
    R = A.reshape(d1, d2, d1, d2)
    if subsystem == "first":
        return np.einsum("isit->st", R)
    if subsystem == "second":
        return np.einsum("isjs->ij", R)
    raise ValueError(f"subsystem must be 'first' or 'second', got {subsystem!r}")


def vec(X):
    """Column-stacking vectorization."""
    return np.asarray(X, dtype=complex).flatten(order="F")


def unvec(v, dim):
    """Inverse of :func:`vec`."""
    return np.asarray(v, dtype=complex).reshape(dim, dim, order="F")


@dataclass(frozen=True)
class Superoperator:
    """A linear map on operators, stored as a d² × d² matrix acting on vec(X).

    Composition of maps is matrix multiplication of the stored matrices.
    """

    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        m = as_complex_matrix(self.matrix, "superoperator")
        require_square(m, "superoperator")
        if m.shape[0] != self.dim**2:
            raise DimensionMismatch(
                f"superoperator side {m.shape[0]} does not equal dim² = {self.dim**2}"
            )

    @classmethod
    def identity(cls, dim):
        return cls(dim, np.eye(dim**2, dtype=complex))

    def apply(self, X):
        return unvec(self.matrix @ vec(X), self.dim)

    def __matmul__(self, other):
        if isinstance(other, Superoperator):
            if other.dim != self.dim:
                raise DimensionMismatch("composing superoperators of different dims")
            return Superoperator(self.dim, self.matrix @ other.matrix)
        return NotImplemented

    def __add__(self, other):
        if isinstance(other, Superoperator):
            if other.dim != self.dim:
                raise DimensionMismatch("adding superoperators of different dims")
            return Superoperator(self.dim, self.matrix + other.matrix)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Superoperator):
            if other.dim != self.dim:
                raise DimensionMismatch("subtracting superoperators of different dims")
            return Superoperator(self.dim, self.matrix - other.matrix)
        return NotImplemented

    def __rmul__(self, scalar):
        return Superoperator(self.dim, complex(scalar) * self.matrix)


def sandwich_superop(L, R):
    """Superoperator X ↦ L X R, i.e. kron(R.T, L) in column-stacking."""
    Lm = require_square(as_complex_matrix(L, "left factor"), "left factor")
    Rm = require_square(as_complex_matrix(R, "right factor"), "right factor")
    if Lm.shape != Rm.shape:
        raise DimensionMismatch(
            f"sandwich factors must share a dimension, got {Lm.shape} and {Rm.shape}"
        )
    return Superoperator(Lm.shape[0], np.kron(Rm.T, Lm))


def commutator_superop(A):
    """Superoperator X ↦ [A, X]."""
    Am = require_square(as_complex_matrix(A, "commutator generator"), "commutator generator")
    d = Am.shape[0]
    eye = np.eye(d, dtype=complex)
    return Superoperator(d, np.kron(eye, Am) - np.kron(Am.T, eye))


def trace_distance(rho, sigma):
    """½‖ρ − σ‖₁ via the eigenvalues of the Hermitian difference."""
    A = as_complex_matrix(rho, "rho")
    B = as_complex_matrix(sigma, "sigma")
    if A.shape != B.shape:
        raise DimensionMismatch(f"trace_distance: shapes {A.shape} vs {B.shape}")
    diff = A - B
    w = np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))
    return 0.5 * float(np.sum(np.abs(w)))
