import numpy as np
import pytest

from ebchan import channel as ch
from ebchan import nullspace as ns
from ebchan import operator_core as oc
from ebchan.errors import ValidationError

X, Y, Z = oc.PAULI_X, oc.PAULI_Y, oc.PAULI_Z


def random_selfadjoint_traceless_target(n, dim, rng):
    spanners = []
    for _ in range(dim):
        H = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        H = (H + H.conj().T) / 2
        H -= np.trace(H) / n * np.eye(n)
        spanners.append(H)
    if not spanners:
        return oc.zero_subspace(n)
    return oc.orthonormalize(spanners)


# ---------------------------------------------------------------------------
# channel_nullspace
# ---------------------------------------------------------------------------

def test_nullspace_of_depolarizing():
    for n in (2, 3):
        K = ns.channel_nullspace(ch.depolarizing(n))
        assert K.dim == n * n - 1
        assert K.traceless and K.self_adjoint


def test_nullspace_of_identity():
    assert ns.channel_nullspace(ch.identity_channel(2)).dim == 0


def test_nullspace_traceless_for_random_channels():
    rng = np.random.default_rng(0)
    for _ in range(5):
        phi = ch.random_channel(3, 2, rng)
        K = ns.channel_nullspace(phi)
        for B in K.basis:
            assert abs(np.trace(B)) < 1e-9


# ---------------------------------------------------------------------------
# synthesis: worked examples
# ---------------------------------------------------------------------------

def test_synthesize_span_z():
    target = oc.orthonormalize([Z])
    phi, recipe = ns.synthesize_annihilator(target, seed=1)
    assert len(recipe.hermitian_basis) == 3
    first_two = oc.orthonormalize(recipe.hermitian_basis[:2])
    assert first_two.equals(oc.orthonormalize([X, Y]), 1e-10)
    assert oc.frob(recipe.hermitian_basis[2]
                   + recipe.hermitian_basis[0] + recipe.hermitian_basis[1]) < 1e-12
    # shift sizes against an eigensolver oracle: H1, H2 have minimal
    # eigenvalue -1/sqrt(2); H3 = -(X+Y)/sqrt(2) has minimal eigenvalue -1
    expected_shifts = (-1 / np.sqrt(2), -1 / np.sqrt(2), -1.0)
    for k, (H, expected) in enumerate(zip(recipe.hermitian_basis, expected_shifts)):
        assert np.linalg.eigvalsh(H)[0] == pytest.approx(expected, abs=1e-12)
        assert recipe.lambdas[k] == pytest.approx(expected, abs=1e-12)
    assert recipe.lam == pytest.approx(np.sqrt(2) + 1, abs=1e-12)
    acc = sum(recipe.povm)
    assert oc.frob(acc - np.eye(2)) < 1e-12
    found = ns.channel_nullspace(phi)
    assert found.equals(target, 1e-7)


def test_synthesize_span_xz():
    target = oc.orthonormalize([X, Z])
    phi, recipe = ns.synthesize_annihilator(target, seed=2)
    assert len(recipe.povm) == 2
    assert oc.orthonormalize([recipe.hermitian_basis[0]]).equals(
        oc.orthonormalize([Y]), 1e-10)
    assert oc.frob(recipe.hermitian_basis[1] + recipe.hermitian_basis[0]) < 1e-12
    assert ns.channel_nullspace(phi).equals(target, 1e-7)


def test_synthesize_full_traceless_gives_depolarizing():
    target = oc.traceless_subspace(2)
    phi, recipe = ns.synthesize_annihilator(target, seed=3)
    assert recipe.diagnostics["branch"] == "full-traceless"
    assert phi.holevo is not None and len(phi.holevo.povm) == 1
    assert oc.frob(phi.holevo.states[0] - np.eye(2) / 2) < 1e-12
    assert ns.channel_nullspace(phi).dim == 3


def test_synthesized_channels_are_eb():
    rng = np.random.default_rng(4)
    for n, dim in ((2, 1), (3, 4)):
        target = random_selfadjoint_traceless_target(n, dim, rng)
        phi, _ = ns.synthesize_annihilator(target, seed=5)
        report = ch.eb_check(phi)
        assert report.verdict == "EB"
        assert report.eb_certificate is not None


def test_synthesize_roundtrip_random_targets():
    rng = np.random.default_rng(6)
    for i in range(30):
        n = int(rng.integers(2, 5))
        dim = int(rng.integers(0, n * n))
        target = random_selfadjoint_traceless_target(n, dim, rng)
        phi, recipe = ns.synthesize_annihilator(target, seed=100 + i)
        found = ns.channel_nullspace(phi)
        assert found.dim == target.dim
        assert found.equals(target, 1e-7)
        acc = sum(recipe.povm) if recipe.povm else np.eye(n)
        assert oc.frob(acc - np.eye(n)) < 1e-9
        for F in recipe.povm:
            assert np.linalg.eigvalsh((F + F.conj().T) / 2)[0] > -1e-9


def test_synthesize_rejects_bad_targets():
    with pytest.raises(ValidationError):
        ns.synthesize_annihilator(oc.orthonormalize([np.eye(2)]))
    e01 = np.zeros((2, 2), dtype=complex)
    e01[0, 1] = 1.0
    with pytest.raises(ValidationError):
        ns.synthesize_annihilator(oc.orthonormalize([e01]))


# ---------------------------------------------------------------------------
# bi-unitary nullspaces
# ---------------------------------------------------------------------------

def test_biunitary_z_half():
    K = ns.biunitary_nullspace(Z, 0.5)
    assert K.dim == 2
    # Oracle: the natural matrix of rho -> (rho + Z rho Z)/2 is
    # diag(1, 0, 0, 1) in the column-stacking basis, so the kernel is
    # spanned by E12 and E21.
    M = (np.eye(4) + np.kron(Z.conj(), Z)) / 2
    assert oc.frob(M - np.diag([1.0, 0, 0, 1.0])) < 1e-12
    e12 = np.zeros((2, 2), dtype=complex)
    e12[0, 1] = 1
    assert K.contains(e12) and K.contains(e12.T)


def test_biunitary_z_third_and_identity():
    assert ns.biunitary_nullspace(Z, 1 / 3).dim == 0
    assert ns.biunitary_nullspace(np.eye(2), 0.5).dim == 0


def test_biunitary_rejects_non_unitary():
    with pytest.raises(ValidationError):
        ns.biunitary_nullspace(np.array([[1, 1], [0, 1]]), 0.5)


def test_biunitary_agreement_random():
    rng = np.random.default_rng(7)
    for i in range(15):
        n = int(rng.integers(2, 5))
        if i % 2 == 0:
            # structured: eigenvalues in phase-flip pairs
            phases = np.exp(1j * rng.uniform(0, 2 * np.pi, size=n))
            for k in range(0, n - 1, 2):
                phases[k + 1] = -phases[k]
            V = ch.haar_unitary(n, rng)
            U = V @ np.diag(phases) @ V.conj().T
            p = 0.5
        else:
            U = ch.haar_unitary(n, rng)
            p = float(rng.uniform(0.05, 0.95))
            if abs(p - 0.5) < 1e-3:
                p = 0.3
        K = ns.biunitary_nullspace(U, p)
        explicit = ch.Channel([np.sqrt(1 - p) * np.eye(n), np.sqrt(p) * U])
        direct = ns.channel_nullspace(explicit)
        assert K.dim == direct.dim
        if K.dim:
            assert K.equals(direct, 1e-7)
        if abs(p - 0.5) > 1e-6:
            assert K.dim == 0


def test_recipe_diagnostics_present():
    rng = np.random.default_rng(8)
    target = random_selfadjoint_traceless_target(3, 2, rng)
    _, recipe = ns.synthesize_annihilator(target, seed=9)
    assert recipe.diagnostics["states_gram_min_eig"] > 0
    assert recipe.diagnostics["povm_min_singular_value"] > 0
