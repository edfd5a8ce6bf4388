import numpy as np
import pytest

from ebchan import operator_core as oc
from ebchan.errors import DimensionMismatch, ValidationError


I2 = np.eye(2, dtype=complex)
X, Y, Z = oc.PAULI_X, oc.PAULI_Y, oc.PAULI_Z


def E(i, j, n=2):
    M = np.zeros((n, n), dtype=complex)
    M[i, j] = 1.0
    return M


# ---------------------------------------------------------------------------
# trace inner product
# ---------------------------------------------------------------------------

def test_trace_inner_product_examples():
    assert oc.trace_inner_product(I2, Z) == pytest.approx(0.0)
    assert oc.trace_inner_product(X, X) == pytest.approx(2.0)
    assert oc.trace_inner_product(E(0, 0), E(0, 0) + E(0, 1)) == pytest.approx(1.0)


def test_trace_inner_product_conjugate_symmetric():
    rng = np.random.default_rng(0)
    for _ in range(10):
        A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        B = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        assert oc.trace_inner_product(A, B) == pytest.approx(
            np.conj(oc.trace_inner_product(B, A)))


def test_trace_inner_product_dim_mismatch():
    with pytest.raises(DimensionMismatch):
        oc.trace_inner_product(np.eye(2), np.eye(3))


# ---------------------------------------------------------------------------
# orthonormalize
# ---------------------------------------------------------------------------

def test_orthonormalize_collinear():
    S = oc.orthonormalize([Z, 2 * Z])
    assert S.dim == 1
    expected = Z / np.sqrt(2.0)
    assert oc.frob(S.basis[0] - expected) < 1e-12 or oc.frob(S.basis[0] + expected) < 1e-12


def test_orthonormalize_paulis():
    S = oc.orthonormalize([X, Y, Z])
    assert S.dim == 3
    assert S.self_adjoint and S.traceless


def test_zero_subspace():
    S = oc.zero_subspace(2)
    assert S.dim == 0
    assert S.residual(X) == pytest.approx(oc.frob(X))


def test_orthonormalize_gram_identity_and_idempotent():
    rng = np.random.default_rng(1)
    mats = [rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)) for _ in range(7)]
    S = oc.orthonormalize(mats)
    gram = np.array([[oc.trace_inner_product(a, b) for a in S.basis] for b in S.basis])
    assert np.linalg.norm(gram - np.eye(S.dim)) < 1e-12
    S2 = oc.orthonormalize(list(S.basis))
    assert S2.dim == S.dim
    for B, B2 in zip(S.basis, S2.basis):
        assert oc.frob(B - B2) < 1e-9


# ---------------------------------------------------------------------------
# orthogonal complement
# ---------------------------------------------------------------------------

def test_complement_of_z_in_traceless():
    within = oc.traceless_subspace(2)
    S = oc.orthonormalize([Z])
    C = oc.orthogonal_complement(S, within)
    assert C.dim == 2
    for B in C.basis:
        assert oc.is_hermitian(B, 1e-12)
    target = oc.orthonormalize([X, Y])
    assert C.equals(target, 1e-10)


def test_complement_trivial_cases():
    within = oc.traceless_subspace(2)
    assert oc.orthogonal_complement(oc.zero_subspace(2), within).dim == 3
    assert oc.orthogonal_complement(within, within).dim == 0


def test_complement_dimension_additive_and_involutive():
    rng = np.random.default_rng(2)
    within = oc.traceless_subspace(3)
    for k in (1, 3, 5):
        spanners = []
        for _ in range(k):
            H = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
            H = (H + H.conj().T) / 2
            H -= np.trace(H) / 3 * np.eye(3)
            spanners.append(H)
        S = oc.orthonormalize(spanners)
        C = oc.orthogonal_complement(S, within)
        assert S.dim + C.dim == within.dim
        CC = oc.orthogonal_complement(C, within)
        assert CC.equals(S, 1e-9)


def test_complement_containment_violation():
    within = oc.traceless_subspace(2)
    S = oc.orthonormalize([np.eye(2)])
    with pytest.raises(ValidationError):
        oc.orthogonal_complement(S, within)


# ---------------------------------------------------------------------------
# kernels of linear maps
# ---------------------------------------------------------------------------

def test_kernel_of_identity_map():
    K = oc.kernel_of_linear_map(np.eye(4))
    assert K.dim == 0


def test_kernel_of_depolarizing_natural_matrix():
    # Natural matrix of X -> tr(X) I/2 built by hand: (1/2) vec(I) vec(I)^*.
    v = oc.vec(np.eye(2, dtype=complex))
    M = 0.5 * np.outer(v, v.conj())
    # Independent oracle: brute-force SVD of the explicit 4x4 matrix.
    s = np.linalg.svd(M, compute_uv=False)
    assert int(np.sum(s > 1e-12)) == 1
    K = oc.kernel_of_linear_map(M)
    assert K.dim == 3
    assert K.traceless


def test_kernel_with_planted_dimension():
    # Compose an invertible map with a projector of known corank.
    rng = np.random.default_rng(3)
    n = 3
    full = oc.full_subspace(n)
    planted = oc.orthonormalize([
        rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) for _ in range(4)])
    keep = oc.orthogonal_complement(planted, full)
    P = sum(np.outer(oc.vec(B), oc.vec(B).conj()) for B in keep.basis)
    A = rng.normal(size=(n * n, n * n)) + 1j * rng.normal(size=(n * n, n * n))
    K = oc.kernel_of_linear_map(A @ P, n)
    assert K.dim == planted.dim
    assert K.equals(planted, 1e-8)


# ---------------------------------------------------------------------------
# projections onto vector spans
# ---------------------------------------------------------------------------

def test_projection_examples():
    e1 = np.array([1.0, 0.0])
    e2 = np.array([0.0, 1.0])
    assert oc.frob(oc.projection_onto_span([e1]) - E(0, 0)) < 1e-12
    assert oc.frob(oc.projection_onto_span([e1, e1 + e2]) - np.eye(2)) < 1e-12
    assert oc.frob(oc.projection_onto_span([], dim=2)) == 0.0


def test_projection_is_hermitian_idempotent():
    rng = np.random.default_rng(4)
    vs = [rng.normal(size=5) + 1j * rng.normal(size=5) for _ in range(3)]
    P = oc.projection_onto_span(vs)
    assert oc.is_projection_matrix(P, 1e-10)
    assert int(round(np.trace(P).real)) == 3


# ---------------------------------------------------------------------------
# misc
# ---------------------------------------------------------------------------

def test_tolerance_validation():
    with pytest.raises(ValidationError):
        oc.Tolerance(abs=-1.0)
    with pytest.raises(ValidationError):
        oc.Tolerance(rank_gap=2.0)


def test_weyl_unitaries_orthogonal():
    for n in (2, 3):
        ws = oc.weyl_unitaries(n)
        assert len(ws) == n * n
        for i, A in enumerate(ws):
            assert oc.frob(A.conj().T @ A - np.eye(n)) < 1e-12
            for j, B in enumerate(ws):
                ip = oc.trace_inner_product(A, B)
                assert abs(ip - (n if i == j else 0.0)) < 1e-12


def test_hermitian_traceless_basis_orthonormal():
    for n in (2, 3, 4):
        basis = oc.hermitian_traceless_basis(n)
        assert len(basis) == n * n - 1
        for i, A in enumerate(basis):
            assert abs(np.trace(A)) < 1e-12
            assert oc.is_hermitian(A, 1e-12)
            for j, B in enumerate(basis):
                ip = oc.trace_inner_product(A, B)
                assert abs(ip - (1.0 if i == j else 0.0)) < 1e-12
