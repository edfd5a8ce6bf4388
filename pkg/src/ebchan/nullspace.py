"""Channel nullspaces: computation, synthesis of entanglement breaking
channels annihilating a prescribed operator subspace, and the unitary-noise
special case."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import operator_core as oc
from .channel import Channel, HolevoForm, KrausMap, depolarizing, holevo_to_kraus, random_density
from .errors import ValidationError, VerificationError
from .operator_core import DEFAULT_TOL, OperatorSubspace, Tolerance, dagger, frob


def channel_nullspace(phi: KrausMap, tol: Tolerance = DEFAULT_TOL) -> OperatorSubspace:
    """The subspace {X : phi(X) = 0}, read off the natural matrix.

    For a trace-preserving positive map the result is always self-adjoint
    and traceless; both are asserted on the computed basis.
    """
    kernel = oc.kernel_of_linear_map(phi.natural_matrix(), phi.dim_in, tol)
    if kernel.dim > 0:
        if not kernel.traceless:
            raise VerificationError("computed nullspace contains a non-traceless element")
        if not kernel.self_adjoint:
            raise VerificationError("computed nullspace is not self-adjoint")
    return kernel


@dataclass
class SynthesisRecipe:
    """Audit trail of one nullspace synthesis.

    ``hermitian_basis`` lists the orthonormal Hermitian basis of the
    orthogonal complement of the target (inside the traceless matrices)
    followed by the extra element equal to minus their sum; ``lambdas``
    holds the per-element shifts and ``lam`` their negated sum, so that
    ``povm[k] = (hermitian_basis[k] - lambdas[k] I) / lam``.
    """

    target: OperatorSubspace
    hermitian_basis: list[np.ndarray]
    lambdas: list[float]
    lam: float
    povm: list[np.ndarray]
    states: list[np.ndarray]
    seed: int
    diagnostics: dict = field(default_factory=dict)


def _draw_independent_densities(n: int, count: int, seed: int,
                                min_gram_eig: float = 1e-6,
                                max_retries: int = 50):
    """Random densities with a numerically independent span.

    Independence is gated on the smallest eigenvalue of the Gram matrix
    of the unit-normalized densities; the draw is retried with a fresh
    stream when the gate fails.
    """
    for attempt in range(max_retries):
        rng = np.random.default_rng(np.random.SeedSequence([seed, attempt]))
        states = [random_density(n, rng) for _ in range(count)]
        units = [R / frob(R) for R in states]
        gram = np.array([[oc.trace_inner_product(a, b).real for a in units] for b in units])
        min_eig = float(np.linalg.eigvalsh(gram)[0]) if count else 1.0
        if min_eig >= min_gram_eig:
            return states, min_eig
    raise VerificationError(
        f"could not draw {count} independent densities in {max_retries} attempts")


def synthesize_annihilator(target: OperatorSubspace, seed: int = 0,
                           tol: Tolerance = DEFAULT_TOL) -> tuple[Channel, SynthesisRecipe]:
    """Entanglement breaking channel whose nullspace is exactly ``target``.

    The target must be a self-adjoint subspace of the traceless matrices.
    The full traceless space yields the depolarizing channel; otherwise a
    POVM is built from a Hermitian basis of the target's orthogonal
    complement by shifting each element just into the positive cone, and
    paired with random linearly independent output states.  The
    constructed channel's nullspace is recomputed and compared against
    the target before returning.
    """
    n = target.ambient_dim
    if not target.traceless:
        raise ValidationError("target subspace must consist of traceless matrices")
    if not target.self_adjoint:
        raise ValidationError("target subspace must be self-adjoint")
    if target.dim > n * n - 1:
        raise ValidationError("target dimension exceeds the traceless space")

    if target.dim == n * n - 1:
        phi = depolarizing(n)
        recipe = SynthesisRecipe(target=target, hermitian_basis=[], lambdas=[],
                                 lam=0.0, povm=[np.eye(n, dtype=np.complex128)],
                                 states=[np.eye(n, dtype=np.complex128) / n], seed=seed,
                                 diagnostics={"branch": "full-traceless"})
        _verify_synthesis(phi, target, tol)
        return phi, recipe

    traceless = oc.traceless_subspace(n)
    comp = oc.orthogonal_complement(target, traceless, tol)
    hermitian_basis = [np.asarray(H) for H in comp.basis]
    hermitian_basis.append(-sum(hermitian_basis))

    lambdas = []
    for H in hermitian_basis:
        min_eig = float(np.linalg.eigvalsh((H + dagger(H)) / 2)[0])
        lambdas.append(min_eig if min_eig < -tol.abs else -1.0)
    lam = -float(sum(lambdas))
    povm = [(H - lk * np.eye(n)) / lam for H, lk in zip(hermitian_basis, lambdas)]

    states, min_gram_eig = _draw_independent_densities(n, len(povm), seed)
    holevo = HolevoForm(tuple(povm), tuple(states))
    phi = holevo_to_kraus(holevo, tol)

    flat = np.stack([oc.vec(F) for F in povm])
    povm_svals = np.linalg.svd(flat, compute_uv=False)
    recipe = SynthesisRecipe(
        target=target, hermitian_basis=hermitian_basis, lambdas=lambdas, lam=lam,
        povm=povm, states=list(states), seed=seed,
        diagnostics={"branch": "povm",
                     "states_gram_min_eig": min_gram_eig,
                     "povm_min_singular_value": float(povm_svals[-1])})
    _verify_synthesis(phi, target, tol)
    return phi, recipe


def _verify_synthesis(phi: Channel, target: OperatorSubspace, tol: Tolerance) -> None:
    computed = channel_nullspace(phi, tol)
    if computed.dim != target.dim or not computed.equals(target, 1e-7):
        raise VerificationError(
            f"synthesized nullspace (dim {computed.dim}) does not match the "
            f"target (dim {target.dim})")


def biunitary_nullspace(U, p: float, tol: Tolerance = DEFAULT_TOL) -> OperatorSubspace:
    """Nullspace of X -> (1-p) X + p U X U*.

    Empty unless p = 1/2, in which case it is spanned by the outer
    products of eigenvectors of U whose eigenvalues differ by a sign.
    The result is cross-checked against the kernel of the explicit
    two-Kraus channel.
    """
    U = oc.as_complex_matrix(U)
    n = U.shape[0]
    if frob(dagger(U) @ U - np.eye(n)) > tol.abs * 100:
        raise ValidationError("input matrix is not unitary")
    if not 0.0 < p < 1.0:
        raise ValidationError(f"probability must lie in (0, 1), got {p}")

    if abs(p - 0.5) > tol.abs:
        result = oc.zero_subspace(n)
    else:
        clusters = _eigenvector_clusters(U)
        spanners = []
        for (wa, Va) in clusters:
            for (wb, Vb) in clusters:
                if abs(wa + wb) <= 1e-8:
                    for i in range(Va.shape[1]):
                        for j in range(Vb.shape[1]):
                            spanners.append(np.outer(Va[:, i], Vb[:, j].conj()))
        if spanners:
            result = oc.orthonormalize(spanners, tol)
        else:
            result = oc.zero_subspace(n)

    explicit = Channel([np.sqrt(1.0 - p) * np.eye(n), np.sqrt(p) * U])
    direct = channel_nullspace(explicit, tol)
    if direct.dim != result.dim or (result.dim and not direct.equals(result, 1e-7)):
        raise VerificationError(
            "eigenvalue-pairing nullspace disagrees with the explicit kernel")
    return result


def _eigenvector_clusters(U: np.ndarray, phase_tol: float = 1e-8):
    """Eigenvalue clusters of a unitary with orthonormalized eigenvectors."""
    evals, evecs = np.linalg.eig(U)
    order = np.argsort(np.angle(evals))
    evals, evecs = evals[order], evecs[:, order]
    clusters = []
    used = np.zeros(evals.size, dtype=bool)
    for i in range(evals.size):
        if used[i]:
            continue
        members = [i]
        used[i] = True
        for j in range(i + 1, evals.size):
            if not used[j] and abs(evals[j] - evals[i]) <= phase_tol:
                members.append(j)
                used[j] = True
        block = evecs[:, members]
        Q, _ = np.linalg.qr(block)
        clusters.append((complex(np.mean(evals[members])), Q))
    return clusters
