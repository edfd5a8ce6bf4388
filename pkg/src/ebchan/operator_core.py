"""Dense complex-matrix and operator-subspace primitives.

Matrices are plain ``numpy`` arrays of ``complex128`` viewed as vectors
under the trace (Hilbert-Schmidt) inner product ``<A, B> = tr(B* A)``.
Subspaces of n x n matrices are stored as orthonormal bases.  All rank
decisions use a relative singular-value gap so behaviour is invariant
under rescaling of the inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ValidationError, VerificationError


@dataclass(frozen=True)
class Tolerance:
    """Numerical policy shared by every operation.

    Parameters
    ----------
    abs : float
        Absolute residual bound used when validating equalities.
    rank_gap : float
        Relative singular-value threshold: a singular value is treated as
        zero when it is at most ``rank_gap`` times the largest one.
    """

    abs: float = 1e-9
    rank_gap: float = 1e-7

    def __post_init__(self):
        if not self.abs > 0:
            raise ValidationError(f"tolerance abs must be positive, got {self.abs}")
        if not 0 < self.rank_gap < 1:
            raise ValidationError(f"rank_gap must lie in (0, 1), got {self.rank_gap}")


DEFAULT_TOL = Tolerance()


def as_complex_matrix(A) -> np.ndarray:
    """Coerce to a 2-d complex128 array (column vectors become n x 1)."""
    M = np.asarray(A, dtype=np.complex128)
    if M.ndim == 1:
        M = M.reshape(-1, 1)
    if M.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got array of ndim {M.ndim}")
    return M


def dagger(A: np.ndarray) -> np.ndarray:
    return A.conj().T


def frob(A: np.ndarray) -> float:
    return float(np.linalg.norm(A))


def trace_inner_product(A, B) -> complex:
    """Trace inner product tr(B* A) of two equal-sized matrices.

    Linear in ``A``, conjugate-linear in ``B``; conjugate-symmetric.
    """
    A = as_complex_matrix(A)
    B = as_complex_matrix(B)
    if A.shape != B.shape:
        raise DimensionMismatch(f"shape mismatch {A.shape} vs {B.shape}")
    return complex(np.vdot(B, A))


def is_hermitian(A, tol: float = 1e-9) -> bool:
    A = as_complex_matrix(A)
    return frob(A - dagger(A)) <= tol * max(1.0, frob(A))


def is_projection_matrix(A, tol: float = 1e-9) -> bool:
    A = as_complex_matrix(A)
    return is_hermitian(A, tol) and frob(A @ A - A) <= tol * max(1.0, frob(A))


def vec(X: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization, so vec(AXB) = (B^T kron A) vec(X)."""
    return np.asarray(X).ravel(order="F")


def unvec(x: np.ndarray, rows: int, cols: int | None = None) -> np.ndarray:
    if cols is None:
        cols = rows
    return np.asarray(x).reshape((rows, cols), order="F")


def _freeze(A: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(A, dtype=np.complex128)
    out.setflags(write=False)
    return out


# ---------------------------------------------------------------------------
# standard operator families
# ---------------------------------------------------------------------------

PAULI_X = _freeze(np.array([[0, 1], [1, 0]]))
PAULI_Y = _freeze(np.array([[0, -1j], [1j, 0]]))
PAULI_Z = _freeze(np.array([[1, 0], [0, -1]]))


def matrix_units(n: int) -> list[np.ndarray]:
    """All n^2 matrix units E_ij in row-major (i, j) order."""
    out = []
    for i in range(n):
        for j in range(n):
            E = np.zeros((n, n), dtype=np.complex128)
            E[i, j] = 1.0
            out.append(E)
    return out


def hermitian_traceless_basis(n: int) -> list[np.ndarray]:
    """Orthonormal Hermitian basis of the trace-zero n x n matrices.

    Symmetric pairs first, then antisymmetric pairs, then the diagonal
    ladder, each normalized in the trace inner product (generalized
    Gell-Mann ordering).
    """
    basis: list[np.ndarray] = []
    for i in range(n):
        for j in range(i + 1, n):
            S = np.zeros((n, n), dtype=np.complex128)
            S[i, j] = S[j, i] = 1.0 / np.sqrt(2.0)
            basis.append(S)
            A = np.zeros((n, n), dtype=np.complex128)
            A[i, j] = -1j / np.sqrt(2.0)
            A[j, i] = 1j / np.sqrt(2.0)
            basis.append(A)
    for level in range(1, n):
        D = np.zeros((n, n), dtype=np.complex128)
        for k in range(level):
            D[k, k] = 1.0
        D[level, level] = -float(level)
        basis.append(D / np.sqrt(level * (level + 1)))
    return basis


def weyl_unitaries(n: int) -> list[np.ndarray]:
    """The n^2 shift/clock unitaries X^a Z^b, mutually trace-orthogonal."""
    shift = np.roll(np.eye(n, dtype=np.complex128), 1, axis=0)
    omega = np.exp(2j * np.pi / n)
    clock = np.diag(omega ** np.arange(n))
    out = []
    Xa = np.eye(n, dtype=np.complex128)
    for _ in range(n):
        Zb = np.eye(n, dtype=np.complex128)
        for _ in range(n):
            out.append(Xa @ Zb)
            Zb = Zb @ clock
        Xa = Xa @ shift
    return out


# ---------------------------------------------------------------------------
# operator subspaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OperatorSubspace:
    """A subspace of n x n matrices stored as an orthonormal basis.

    ``self_adjoint`` records whether the subspace contains A* whenever it
    contains A; ``traceless`` whether every element has zero trace.  Both
    flags are computed from the basis at construction time.
    """

    ambient_dim: int
    basis: tuple[np.ndarray, ...]
    self_adjoint: bool
    traceless: bool

    @property
    def dim(self) -> int:
        return len(self.basis)

    def project(self, X) -> np.ndarray:
        """Orthogonal projection of X onto the subspace."""
        X = as_complex_matrix(X)
        if X.shape != (self.ambient_dim, self.ambient_dim):
            raise DimensionMismatch(
                f"expected {self.ambient_dim} x {self.ambient_dim}, got {X.shape}")
        out = np.zeros_like(X)
        for B in self.basis:
            out += trace_inner_product(X, B) * B
        return out

    def residual(self, X) -> float:
        """Distance from X to the subspace."""
        return frob(as_complex_matrix(X) - self.project(X))

    def contains(self, X, tol: float = 1e-7) -> bool:
        X = as_complex_matrix(X)
        return self.residual(X) <= tol * max(1.0, frob(X))

    def contains_subspace(self, other: "OperatorSubspace", tol: float = 1e-7) -> bool:
        return all(self.contains(B, tol) for B in other.basis)

    def equals(self, other: "OperatorSubspace", tol: float = 1e-7) -> bool:
        return (self.dim == other.dim
                and self.contains_subspace(other, tol)
                and other.contains_subspace(self, tol))


def _subspace_from_basis(n: int, basis: list[np.ndarray],
                         flag_tol: float = 1e-8) -> OperatorSubspace:
    frozen = tuple(_freeze(B) for B in basis)
    traceless = all(abs(np.trace(B)) <= flag_tol for B in frozen)
    stub = OperatorSubspace(n, frozen, False, False)
    self_adjoint = all(stub.residual(dagger(B)) <= flag_tol for B in frozen)
    return OperatorSubspace(n, frozen, self_adjoint, traceless)


def _mgs(spanners: list[np.ndarray], drop_tol: float,
         scale: float | None = None) -> list[np.ndarray]:
    """Modified Gram-Schmidt in input order with a relative drop threshold.

    A spanner is dropped when its residual after orthogonalization is at
    most ``drop_tol`` times ``scale`` (the largest spanner norm unless
    given), mirroring how an SVD-based numerical rank would treat the
    collection.  Two orthogonalization passes keep the Gram matrix at
    machine-precision identity.
    """
    if scale is None:
        scale = max((frob(S) for S in spanners), default=0.0)
    if scale == 0.0:
        return []
    basis: list[np.ndarray] = []
    for S in spanners:
        V = S.copy()
        for _ in range(2):
            for B in basis:
                V = V - trace_inner_product(V, B) * B
        norm1 = frob(V)
        if norm1 <= drop_tol * scale:
            continue
        basis.append(V / norm1)
    return basis


def orthonormalize(spanners, tol: Tolerance = DEFAULT_TOL) -> OperatorSubspace:
    """Orthonormal subspace spanned by the given matrices.

    The empty list yields the zero subspace only if the ambient dimension
    can be inferred, so pass at least one matrix or use
    :func:`zero_subspace` directly.
    """
    mats = [as_complex_matrix(S) for S in spanners]
    if not mats:
        raise ValidationError("cannot infer ambient dimension from an empty span; "
                              "use zero_subspace(n)")
    n = mats[0].shape[0]
    for M in mats:
        if M.shape != (n, n):
            raise DimensionMismatch(f"mixed shapes in span: {M.shape} vs {(n, n)}")
    return _subspace_from_basis(n, _mgs(mats, tol.rank_gap))


def zero_subspace(n: int) -> OperatorSubspace:
    return OperatorSubspace(n, (), True, True)


def full_subspace(n: int) -> OperatorSubspace:
    return _subspace_from_basis(n, matrix_units(n))


def traceless_subspace(n: int) -> OperatorSubspace:
    return _subspace_from_basis(n, hermitian_traceless_basis(n))


def orthogonal_complement(S: OperatorSubspace, within: OperatorSubspace,
                          tol: Tolerance = DEFAULT_TOL) -> OperatorSubspace:
    """Orthogonal complement of S inside ``within``.

    Requires S to be contained in ``within``.  When both spaces are
    self-adjoint the result is re-expressed in Hermitian coordinates
    before orthonormalizing, so the returned basis consists of Hermitian
    matrices.
    """
    if S.ambient_dim != within.ambient_dim:
        raise DimensionMismatch("ambient dimensions differ")
    for B in S.basis:
        if within.residual(B) > tol.rank_gap:
            raise ValidationError("subspace is not contained in the ambient space")
    candidates = [W - S.project(W) for W in within.basis]
    if S.self_adjoint and within.self_adjoint:
        spanners = []
        for C in candidates:
            spanners.append((C + dagger(C)) / 2.0)
            spanners.append((C - dagger(C)) / 2j)
    else:
        spanners = candidates
    # candidates descend from unit-norm basis elements, so the relevant
    # scale is 1 even when every candidate happens to be tiny
    comp = _subspace_from_basis(within.ambient_dim,
                                _mgs(spanners, tol.rank_gap, scale=1.0))
    if comp.dim != within.dim - S.dim:
        raise VerificationError(
            f"complement dimension {comp.dim} != {within.dim} - {S.dim}")
    return comp


def kernel_of_linear_map(M, n: int | None = None,
                         tol: Tolerance = DEFAULT_TOL) -> OperatorSubspace:
    """Kernel of a linear map on vectorized n x n matrices.

    ``M`` is the n^2 x n^2 matrix of the map in the column-stacking
    convention.  The kernel is read off the SVD: singular values at most
    ``tol.rank_gap`` times the largest are treated as zero, and the
    corresponding right singular vectors are de-vectorized into an
    orthonormal matrix basis.
    """
    M = as_complex_matrix(M)
    if n is None:
        n = int(round(np.sqrt(M.shape[1])))
    if M.shape[1] != n * n:
        raise DimensionMismatch(f"map matrix has {M.shape[1]} columns, expected {n * n}")
    _, s, Vh = np.linalg.svd(M)
    smax = s[0] if s.size else 0.0
    cutoff = tol.rank_gap * smax
    basis = []
    for k in range(M.shape[1]):
        if k >= s.size or s[k] <= cutoff:
            basis.append(unvec(Vh[k].conj(), n))
    return _subspace_from_basis(n, basis)


def projection_onto_span(vectors, dim: int | None = None,
                         tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Hermitian idempotent projecting onto the span of the given vectors.

    Vectors may be 1-d arrays or n x 1 matrices.  The empty list yields
    the zero matrix (``dim`` required in that case).
    """
    cols = [as_complex_matrix(v).reshape(-1) for v in vectors]
    if not cols:
        if dim is None:
            raise ValidationError("dim required to build the zero projection")
        return np.zeros((dim, dim), dtype=np.complex128)
    n = cols[0].size
    for c in cols:
        if c.size != n:
            raise DimensionMismatch("vectors of mixed dimension")
    A = np.stack(cols, axis=1)
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    rank = int(np.sum(s > tol.rank_gap * (s[0] if s.size else 0.0)))
    P = U[:, :rank] @ dagger(U[:, :rank])
    return (P + dagger(P)) / 2.0
