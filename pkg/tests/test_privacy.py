import numpy as np
import pytest

from ebchan import channel as ch
from ebchan import operator_core as oc
from ebchan import privacy as pv
from ebchan.errors import (AlgebraNotClosed, PrivacyViolation, ValidationError,
                           VerificationError)

X, Y, Z = oc.PAULI_X, oc.PAULI_Y, oc.PAULI_Z


def E(i, j, n=2):
    M = np.zeros((n, n), dtype=complex)
    M[i, j] = 1.0
    return M


def planted_cluster_channel(n=4, cluster=2, rng=None):
    """EB channel with `cluster` Kraus terms sharing one v direction,
    orthonormal w vectors, and the remaining v's orthogonal to v."""
    rng = rng or np.random.default_rng(0)
    W = ch.haar_unitary(n, rng)
    v = np.zeros(n, dtype=complex)
    v[0] = 1.0
    Vrest = ch.haar_unitary(n - 1, rng)
    pairs = []
    for i in range(n):
        if i < cluster:
            vi = v
        else:
            vi = np.concatenate([[0.0], Vrest[:, i - cluster]])
        pairs.append((vi, W[:, i].copy()))
    kraus = [np.outer(vi, wi.conj()) for vi, wi in pairs]
    return ch.Channel(kraus, rank_one=tuple(pairs))


# ---------------------------------------------------------------------------
# multiplicative domain tests
# ---------------------------------------------------------------------------

def test_mult_domain_spontaneous_emission():
    phi = ch.spontaneous_emission(2)
    assert pv.is_projection_in_mult_domain(phi, E(0, 0))
    assert pv.is_projection_in_mult_domain(phi, E(1, 1))
    assert oc.frob(phi.dual_apply(E(0, 0)) - np.eye(2)) < 1e-12
    assert oc.frob(phi.dual_apply(E(1, 1))) < 1e-12


def test_mult_domain_depolarizing_rejects_rank_one():
    phi = ch.depolarizing(2)
    assert not pv.is_projection_in_mult_domain(phi, E(0, 0))


def test_mult_domain_requires_projection():
    with pytest.raises(ValidationError):
        pv.is_projection_in_mult_domain(ch.depolarizing(2), X)


# ---------------------------------------------------------------------------
# kraus partition
# ---------------------------------------------------------------------------

def test_partition_spontaneous_emission():
    phi = ch.spontaneous_emission(2)
    part = pv.kraus_partition(phi)
    assert part.classes == [[0, 1]]
    assert part.has_residual
    assert oc.frob(part.P[0] - E(0, 0)) < 1e-12
    assert oc.frob(part.P[1] - E(1, 1)) < 1e-12
    assert oc.frob(part.Q[0] - np.eye(2)) < 1e-12
    assert oc.frob(part.Q[1]) < 1e-12


def test_partition_example_family():
    phi = pv.example_family(4, 2, 2, seed=7)
    part = pv.kraus_partition(phi)
    assert len(part.classes) == 2
    assert not part.has_residual
    for Q in part.Q:
        assert int(round(np.trace(Q).real)) == 2
        assert oc.frob(Q @ Q - Q) < 1e-9
    assert oc.frob(sum(part.Q) - np.eye(4)) < 1e-9


def test_partition_depolarizing_coarsens_to_single_class():
    # The finest v-overlap classes fail the projection test (dual images
    # are multiples of I), so the partition must coarsen to one class.
    phi = ch.holevo_to_kraus(ch.HolevoForm((np.eye(2),), (np.eye(2) / 2,)))
    part = pv.kraus_partition(phi)
    assert len(part.classes) == 1
    assert sorted(part.classes[0]) == list(range(len(phi.kraus)))
    assert oc.frob(part.P[0] - np.eye(2)) < 1e-9
    assert oc.frob(part.Q[0] - np.eye(2)) < 1e-9


def test_partition_lemma_identities():
    rng = np.random.default_rng(1)
    phi = pv.example_family(6, 3, 2, seed=3)
    part = pv.kraus_partition(phi)
    for _ in range(10):
        M = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        scale = max(1.0, oc.frob(M))
        for k in range(part.size):
            lhs = phi.apply(part.Q[k] @ M)
            assert oc.frob(lhs - part.P[k] @ phi.apply(M)) < 1e-8 * scale
            assert oc.frob(phi.apply(M @ part.Q[k])
                           - phi.apply(M) @ part.P[k]) < 1e-8 * scale


def test_partition_requires_rank_one_form():
    with pytest.raises(ValidationError):
        pv.kraus_partition(ch.identity_channel(2))


def test_offdiag_annihilation():
    assert pv.offdiag_annihilation_check(
        ch.spontaneous_emission(2), pv.kraus_partition(ch.spontaneous_emission(2)))
    phi = pv.example_family(4, 2, 2, seed=11)
    assert pv.offdiag_annihilation_check(phi, pv.kraus_partition(phi))
    single = ch.holevo_to_kraus(ch.HolevoForm((np.eye(2),), (np.eye(2) / 2,)))
    assert pv.offdiag_annihilation_check(single, pv.kraus_partition(single))


# ---------------------------------------------------------------------------
# rank-one private algebras
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("n", [2, 3])
def test_rank_one_algebra_spontaneous_emission(n):
    phi = ch.spontaneous_emission(n)
    certs = pv.rank_one_private_algebra(phi)
    assert len(certs) == 1
    cert = certs[0]
    assert len(cert.algebra_basis) == n * n
    assert oc.frob(cert.rho0 - E(0, 0, n)) < 1e-10
    assert cert.residual < 1e-10


def test_rank_one_algebra_planted_cluster():
    phi = planted_cluster_channel(4, 2)
    certs = pv.rank_one_private_algebra(phi)
    assert len(certs) >= 1
    cert = certs[0]
    assert len(cert.algebra_basis) == 4  # M_2 has dimension 4
    v = np.zeros(4, dtype=complex)
    v[0] = 1
    assert oc.frob(cert.rho0 - np.outer(v, v.conj())) < 1e-9


def test_rank_one_algebra_empty_when_vs_generic():
    rng = np.random.default_rng(2)
    U = ch.haar_unitary(3, rng)
    pairs = []
    for i in range(3):
        v = rng.normal(size=3) + 1j * rng.normal(size=3)
        v /= np.linalg.norm(v)
        pairs.append((v, U[:, i].copy()))
    phi = ch.Channel([np.outer(v, w.conj()) for v, w in pairs],
                     rank_one=tuple(pairs))
    # generic overlapping v's: no cluster projection lands in the domain
    assert pv.rank_one_private_algebra(phi) == []


# ---------------------------------------------------------------------------
# constant-diagonal algebras
# ---------------------------------------------------------------------------

def test_constant_diagonal_bell_block():
    U, basis = pv.constant_diagonal_algebra(4, [(2, 2)])
    assert len(basis) == 4
    for A in basis:
        dev = np.abs(np.diag(A) - np.trace(A) / 4)
        assert np.max(dev) < 1e-9


def test_constant_diagonal_trivial_cases():
    U, basis = pv.constant_diagonal_algebra(1, [(1, 1)])
    assert len(basis) == 1
    U, basis = pv.constant_diagonal_algebra(2, [(2, 1)])
    assert len(basis) == 1
    assert oc.frob(basis[0] - basis[0][0, 0] * np.eye(2)) < 1e-12


def test_constant_diagonal_fourier_cases():
    for r in (2, 3, 4):
        U, basis = pv.constant_diagonal_algebra(r, [(1, 1)] * r)
        assert len(basis) == r
        for A in basis:
            assert np.max(np.abs(np.diag(A) - np.trace(A) / r)) < 1e-12


def test_constant_diagonal_rectangular_block():
    U, basis = pv.constant_diagonal_algebra(6, [(3, 2)])
    assert len(basis) == 4
    for A in basis:
        assert np.max(np.abs(np.diag(A) - np.trace(A) / 6)) < 1e-10


def test_constant_diagonal_uniform_multiblock():
    U, basis = pv.constant_diagonal_algebra(8, [(2, 2), (2, 2)])
    assert len(basis) == 8
    for A in basis:
        assert np.max(np.abs(np.diag(A) - np.trace(A) / 8)) < 1e-10


def test_constant_diagonal_nonuniform_search():
    U, basis = pv.constant_diagonal_algebra(5, [(2, 2), (1, 1)], seed=1)
    assert oc.frob(U.conj().T @ U - np.eye(5)) < 1e-9
    assert len(basis) == 5
    for A in basis:
        assert np.max(np.abs(np.diag(A) - np.trace(A) / 5)) < 1e-9


def test_constant_diagonal_rejects_bad_partition():
    with pytest.raises(ValidationError):
        pv.constant_diagonal_algebra(4, [(2, 1)])


# ---------------------------------------------------------------------------
# same-rank private algebras
# ---------------------------------------------------------------------------

def test_same_rank_example_family_2x2():
    phi = pv.example_family(4, 2, 2, seed=5)
    part = pv.kraus_partition(phi)
    Ps = part.P[:2]
    cert = pv.same_rank_private_algebra(
        phi, Ps, algebra=pv.constant_diagonal_algebra(2, [(1, 1), (1, 1)]))
    assert cert.residual < 1e-8


def test_same_rank_example_family_3x3():
    phi = pv.example_family(9, 3, 3, seed=6)
    part = pv.kraus_partition(phi)
    cert = pv.same_rank_private_algebra(phi, part.P[:3])
    assert cert.residual < 1e-8


def test_same_rank_single_projection():
    phi = ch.holevo_to_kraus(ch.HolevoForm((np.eye(2),), (np.eye(2) / 2,)))
    cert = pv.same_rank_private_algebra(phi, [np.eye(2)])
    assert cert.residual < 1e-10
    assert oc.frob(cert.rho0 - np.eye(2) / 2) < 1e-10


def test_same_rank_commutation_invariant():
    phi = pv.example_family(6, 3, 2, seed=8)
    part = pv.kraus_partition(phi)
    Ps = part.P[:3]
    cert = pv.same_rank_private_algebra(phi, Ps)
    for A in cert.algebra_basis:
        out = phi.apply(A)
        for P in Ps:
            assert oc.frob(out @ P - P @ out) < 1e-8


def test_same_rank_rejects_rank_mismatch():
    phi = ch.spontaneous_emission(2)
    # P = e1e1* has dual image I (rank 2); P = e2e2* has dual image 0
    with pytest.raises(ValidationError):
        pv.same_rank_private_algebra(phi, [E(0, 0), E(1, 1)])


# ---------------------------------------------------------------------------
# example family
# ---------------------------------------------------------------------------

def test_example_family_shapes():
    phi = pv.example_family(4, 2, 2, seed=7)
    assert len(phi.kraus) == 4
    assert phi.tp_residual() < 1e-9
    phi = pv.example_family(2, 1, 2, seed=7)
    part = pv.kraus_partition(phi)
    assert len(part.classes) == 1
    assert oc.frob(part.Q[0] - np.eye(2)) < 1e-9
    phi = pv.example_family(6, 3, 2, seed=7)
    part = pv.kraus_partition(phi)
    assert len(part.classes) == 3
    assert all(int(round(np.trace(Q).real)) == 2 for Q in part.Q)


def test_example_family_rejects_bad_factorization():
    with pytest.raises(ValidationError):
        pv.example_family(5, 2, 2, seed=0)


# ---------------------------------------------------------------------------
# verify_private
# ---------------------------------------------------------------------------

def test_verify_private_depolarizing_full_algebra():
    phi = ch.depolarizing(3)
    cert = pv.verify_private(phi, oc.matrix_units(3))
    assert oc.frob(cert.rho0 - np.eye(3) / 3) < 1e-10
    assert cert.residual < 1e-10


def test_verify_private_spontaneous_emission():
    phi = ch.spontaneous_emission(2)
    cert = pv.verify_private(phi, oc.matrix_units(2), rho0=E(0, 0))
    assert oc.frob(cert.rho0 - E(0, 0)) < 1e-10


def test_verify_private_identity_channel_fails():
    with pytest.raises(PrivacyViolation):
        pv.verify_private(ch.identity_channel(2), oc.matrix_units(2))


def test_verify_private_rejects_unclosed_span():
    with pytest.raises(AlgebraNotClosed):
        pv.verify_private(ch.depolarizing(2), [E(0, 1)])


def test_verify_private_wrong_rho0():
    with pytest.raises(PrivacyViolation):
        pv.verify_private(ch.spontaneous_emission(2), oc.matrix_units(2),
                          rho0=np.eye(2) / 2)
