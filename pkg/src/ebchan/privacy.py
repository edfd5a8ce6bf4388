"""Private algebra construction for entanglement breaking channels:
multiplicative-domain projection tests, the Kraus-vector partition, private
algebras from collinear Kraus directions and from equal-rank dual
projections, and constant-diagonal subalgebra generation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import operator_core as oc
from .channel import Channel, KrausMap, dual, haar_unitary
from .errors import (AlgebraNotClosed, PrivacyViolation, ValidationError,
                     VerificationError)
from .operator_core import DEFAULT_TOL, Tolerance, dagger, frob

_CHECK_SEED = 0x5EED


@dataclass
class KrausPartition:
    """Partition of rank-one Kraus indices by overlapping v directions.

    ``P`` holds the projections onto each class's v span, with one extra
    residual projection appended when the v vectors do not span
    everything; ``Q`` holds the dual images, which are projections onto
    the matching w spans (zero for the residual).
    """

    classes: list[list[int]]
    P: list[np.ndarray]
    Q: list[np.ndarray]
    has_residual: bool

    @property
    def size(self) -> int:
        return len(self.P)


@dataclass
class PrivatizationCertificate:
    """Evidence that a channel sends an algebra to a fixed state.

    ``residual`` is the largest deviation of ``phi(A) - tr(A) rho0`` over
    the orthonormal algebra basis.
    """

    algebra_basis: list[np.ndarray]
    rho0: np.ndarray
    residual: float
    structure: str


def is_projection_in_mult_domain(phi: Channel, P, tol: float = 1e-8) -> bool:
    """Whether the dual image of a projection is again a projection.

    For the unital dual of a trace-preserving map this characterizes
    membership of P in the dual's multiplicative domain.
    """
    P = oc.as_complex_matrix(P)
    if not oc.is_projection_matrix(P, tol):
        raise ValidationError("input is not a projection")
    Q = phi.dual_apply(P)
    return (frob(Q @ Q - Q) <= tol * max(1.0, frob(Q))
            and frob(Q - dagger(Q)) <= tol * max(1.0, frob(Q)))


# ---------------------------------------------------------------------------
# Kraus partition
# ---------------------------------------------------------------------------

def _overlap_components(vs: list[np.ndarray], tol: float) -> list[list[int]]:
    d = len(vs)
    adj = [[abs(np.vdot(vs[i], vs[j])) > tol for j in range(d)] for i in range(d)]
    seen = [False] * d
    comps = []
    for i in range(d):
        if seen[i]:
            continue
        stack, comp = [i], []
        seen[i] = True
        while stack:
            a = stack.pop()
            comp.append(a)
            for b in range(d):
                if not seen[b] and adj[a][b]:
                    seen[b] = True
                    stack.append(b)
        comps.append(sorted(comp))
    return comps


def _build_partition(phi: Channel, classes: list[list[int]],
                     tol: Tolerance) -> KrausPartition:
    vs = [v for v, _ in phi.rank_one]
    n = phi.dim_in
    P = [oc.projection_onto_span([vs[i] for i in cls], tol=tol) for cls in classes]
    residual = np.eye(n, dtype=np.complex128) - sum(P)
    residual = (residual + dagger(residual)) / 2
    has_residual = frob(residual) > 1e-9
    if has_residual:
        P = P + [residual]
    Q = [phi.dual_apply(Pk) for Pk in P]
    Q = [(Qk + dagger(Qk)) / 2 for Qk in Q]
    return KrausPartition(classes=classes, P=P, Q=Q, has_residual=has_residual)


def _partition_violation(phi: Channel, part: KrausPartition, tol: float,
                         rng) -> tuple[str, tuple[int, int]] | None:
    """First violated partition invariant, with the implicated class pair."""
    n = phi.dim_in
    ws = [w for _, w in phi.rank_one]
    for k, Qk in enumerate(part.Q):
        if frob(Qk @ Qk - Qk) > tol * max(1.0, frob(Qk)):
            worst = max((frob(part.Q[k] @ part.Q[l]), (k, l))
                        for l in range(part.size) if l != k)[1]
            return "dual image is not idempotent", worst
    for k in range(part.size):
        for l in range(k + 1, part.size):
            if frob(part.Q[k] @ part.Q[l]) > tol:
                return "dual images are not orthogonal", (k, l)
    if frob(sum(part.Q) - np.eye(n)) > tol * 10:
        return "dual images do not sum to the identity", (0, min(1, part.size - 1))
    for k, cls in enumerate(part.classes):
        expected = np.zeros((n, n), dtype=np.complex128)
        for i in cls:
            expected += np.outer(ws[i], ws[i].conj())
        if frob(part.Q[k] - expected) > tol * 10 * max(1.0, frob(expected)):
            return "dual image differs from the class w-span projection", \
                (k, (k + 1) % max(2, part.size))
    for _ in range(20):
        X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        scale = max(1.0, frob(X))
        phiX = phi.apply(X)
        for k in range(part.size):
            if frob(phi.apply(part.Q[k] @ X) - part.P[k] @ phiX) > tol * scale:
                return "left multiplication identity failed", (k, (k + 1) % part.size)
            if frob(phi.apply(X @ part.Q[k]) - phiX @ part.P[k]) > tol * scale:
                return "right multiplication identity failed", (k, (k + 1) % part.size)
        for k in range(part.size):
            for l in range(part.size):
                if k != l and frob(phi.apply(part.Q[k] @ X @ part.Q[l])) > tol * scale:
                    return "cross block is not annihilated", (k, l)
    return None


def kraus_partition(phi: Channel, tol: float = 1e-8,
                    overlap_tol: float = 1e-8) -> KrausPartition:
    """Partition of the rank-one Kraus indices validated against the
    multiplication identities.

    Classes start as connected components of the v-overlap graph (the
    finest candidate); if validation fails the implicated pair of classes
    is merged and the candidate re-validated, which terminates because a
    single class always validates.
    """
    if phi.rank_one is None:
        raise ValidationError("kraus_partition needs a channel with a rank-one form")
    classes = _overlap_components([v for v, _ in phi.rank_one], overlap_tol)
    tolerance = DEFAULT_TOL
    while True:
        part = _build_partition(phi, classes, tolerance)
        rng = np.random.default_rng(_CHECK_SEED)
        violation = _partition_violation(phi, part, tol, rng)
        if violation is None:
            return part
        if len(classes) == 1:
            raise VerificationError(
                f"single-class partition failed validation: {violation[0]}")
        reason, (k, l) = violation
        k = min(k, len(classes) - 1)
        l = min(l, len(classes) - 1)
        if k == l:
            l = (k + 1) % len(classes)
        a, b = sorted((k, l))
        merged = sorted(classes[a] + classes[b])
        classes = [c for i, c in enumerate(classes) if i not in (a, b)] + [merged]
        classes.sort(key=lambda c: c[0])


def offdiag_annihilation_check(phi: Channel, part: KrausPartition,
                               tol: float = 1e-8, samples: int = 20,
                               seed: int = _CHECK_SEED) -> bool:
    """Check phi(X) = sum_k P_k phi(X) P_k and annihilation of cross blocks."""
    n = phi.dim_in
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        scale = max(1.0, frob(X))
        phiX = phi.apply(X)
        pinched = sum(Pk @ phiX @ Pk for Pk in part.P)
        if frob(phiX - pinched) > tol * scale:
            return False
        for j in range(part.size):
            for k in range(part.size):
                if j != k and frob(phi.apply(part.Q[j] @ X @ part.Q[k])) > tol * scale:
                    return False
    return True


# ---------------------------------------------------------------------------
# private algebras from collinear Kraus directions
# ---------------------------------------------------------------------------

def rank_one_private_algebra(phi: Channel, tol: float = 1e-8,
                             collinear_tol: float = 1e-9) -> list[PrivatizationCertificate]:
    """Certificates for the algebras spanned by w_i w_j* over clusters of
    collinear v directions.

    For each cluster whose common projection v v* has a projection dual
    image, the spanned algebra is privatized to v v*; every emitted
    certificate is verified.  Clusters that fail either test are skipped.
    """
    if phi.rank_one is None:
        raise ValidationError("rank_one_private_algebra needs a rank-one form")
    vs = [v for v, _ in phi.rank_one]
    ws = [w for _, w in phi.rank_one]
    d = len(vs)
    adj = [[abs(np.vdot(vs[i], vs[j])) >= 1.0 - collinear_tol for j in range(d)]
           for i in range(d)]
    seen = [False] * d
    certificates = []
    for i in range(d):
        if seen[i]:
            continue
        cluster = [j for j in range(d) if adj[i][j]]
        for j in cluster:
            seen[j] = True
        v = vs[cluster[0]]
        P = np.outer(v, v.conj())
        try:
            in_domain = is_projection_in_mult_domain(phi, P, tol)
        except ValidationError:
            in_domain = False
        if not in_domain:
            continue
        # absorb phases so every member uses the same v exactly
        adjusted = []
        for j in cluster:
            K = np.outer(vs[j], ws[j].conj())
            adjusted.append(dagger(K) @ v)
        basis_raw = [np.outer(wa, wb.conj()) for wa in adjusted for wb in adjusted]
        span = oc.orthonormalize(basis_raw)
        try:
            cert = verify_private(phi, list(span.basis), rho0=P, tol=tol)
        except (AlgebraNotClosed, PrivacyViolation):
            continue
        k = int(round(np.trace(sum(np.outer(w, w.conj()) for w in adjusted)).real))
        wgram = np.array([[np.vdot(wa, wb) for wb in adjusted] for wa in adjusted])
        orthogonal_ws = frob(wgram - np.diag(np.diag(wgram))) < 1e-8
        if orthogonal_ws and span.dim == len(cluster) ** 2:
            structure = f"full matrix algebra on {len(cluster)} dimensions"
        else:
            structure = (f"span of {len(cluster)}^2 rank-one products "
                         f"(dim {span.dim})")
        cert.structure = structure
        certificates.append(cert)
    return certificates


# ---------------------------------------------------------------------------
# constant-diagonal subalgebras
# ---------------------------------------------------------------------------

def _block_isometry_family(a: int, b: int) -> list[np.ndarray]:
    """a*b mutually trace-orthogonal scaled isometries of shape (a, b)."""
    shift = np.roll(np.eye(a, dtype=np.complex128), 1, axis=0)
    omega = np.exp(2j * np.pi / b)
    clock = np.diag(omega ** np.arange(b))
    embed = np.eye(a, b, dtype=np.complex128)
    family = []
    Xp = np.eye(a, dtype=np.complex128)
    for _ in range(a):
        Zq = np.eye(b, dtype=np.complex128)
        for _ in range(b):
            family.append(Xp @ embed @ Zq)
            Zq = Zq @ clock
        Xp = Xp @ shift
    return family


def _uniform_constant_diag_unitary(r: int, blocks: list[tuple[int, int]]) -> np.ndarray:
    """Exact unitary for partitions whose blocks all have the same shape."""
    a, b = blocks[0]
    m = a * b
    p = len(blocks)
    family = _block_isometry_family(a, b)
    omega = np.exp(2j * np.pi / p)
    rows = []
    for c in range(p):
        for fidx in range(m):
            g = np.zeros(r, dtype=np.complex128)
            for k in range(p):
                block = (omega ** (c * k)) / np.sqrt(p) * family[fidx] / np.sqrt(b)
                g[k * m:(k + 1) * m] = block.reshape(m)
            rows.append(np.conj(g))
    return np.stack(rows)


def _block_diag_element(r: int, blocks: list[tuple[int, int]], which: int,
                        inner: np.ndarray) -> np.ndarray:
    D = np.zeros((r, r), dtype=np.complex128)
    offset = sum(a * b for a, b in blocks[:which])
    a, b = blocks[which]
    D[offset:offset + a * b, offset:offset + a * b] = np.kron(np.eye(a), inner)
    return D


def _algebra_block_elements(r: int, blocks: list[tuple[int, int]]):
    elements = []
    for k, (_, b) in enumerate(blocks):
        for E in oc.matrix_units(b):
            elements.append(_block_diag_element(r, blocks, k, E))
    return elements


def _project_rows_to_block_isometries(U: np.ndarray, blocks, r: int) -> np.ndarray:
    """Per row and per block, snap to the nearest scaled isometry."""
    out = np.zeros_like(U)
    for i in range(r):
        offset = 0
        for a, b in blocks:
            m = a * b
            M = U[i, offset:offset + m].reshape(a, b)
            P, _, Vh = np.linalg.svd(M, full_matrices=False)
            out[i, offset:offset + m] = (np.sqrt(a / r) * (P @ Vh)).reshape(m)
            offset += m
    return out


def _search_constant_diag_unitary(r: int, blocks: list[tuple[int, int]],
                                  seed: int, restarts: int = 40,
                                  iters: int = 4000) -> np.ndarray | None:
    """Randomized search for non-uniform partitions.

    Alternates between the row constraint (each row's block part a scaled
    isometry, which is what constant diagonals require) and the unitary
    group (polar projection); a fixed point of both is a solution.
    """
    rng = np.random.default_rng(seed)
    for _ in range(restarts):
        U = haar_unitary(r, rng)
        for _ in range(iters):
            G = _project_rows_to_block_isometries(U, blocks, r)
            P, _, Vh = np.linalg.svd(G)
            U_new = P @ Vh
            step = frob(U_new - U)
            U = U_new
            if step < 1e-15:
                break
        if frob(_project_rows_to_block_isometries(U, blocks, r) - U) < 1e-12:
            return U
    return None


def constant_diagonal_algebra(r: int, partition, tol: float = 1e-9,
                              seed: int = 0):
    """A unitary U and a basis of a subalgebra of M_r in which every
    element has all diagonal entries equal to tr/r.

    ``partition`` lists block shapes (i_k, j_k) with sum i_k * j_k = r;
    the algebra is the conjugation by U of the direct sum of
    I_max(i,j) kron M_min(i,j) blocks.  Uniform partitions (all blocks the
    same shape) get an exact shift/clock construction; anything else
    falls back to a randomized unitary search.  The diagonal-constancy
    property is always verified; failure raises instead of returning an
    unchecked construction.
    """
    blocks = [(max(int(i), int(j)), min(int(i), int(j))) for i, j in partition]
    if not blocks or any(a < 1 or b < 1 for a, b in blocks):
        raise ValidationError("partition blocks must be positive integer pairs")
    if sum(a * b for a, b in blocks) != r:
        raise ValidationError(
            f"partition {partition} does not sum to {r}")
    if len({blk for blk in blocks}) == 1:
        U = _uniform_constant_diag_unitary(r, blocks)
    else:
        U = _search_constant_diag_unitary(r, blocks, seed)
        if U is None:
            raise VerificationError(
                f"no verified constant-diagonal unitary found for partition {partition}")
    if frob(dagger(U) @ U - np.eye(r)) > 1e-9:
        raise VerificationError("constructed matrix is not unitary")
    basis = []
    worst = 0.0
    for D in _algebra_block_elements(r, blocks):
        A = U @ D @ dagger(U)
        dev = np.max(np.abs(np.diag(A) - np.trace(A) / r))
        worst = max(worst, float(dev))
        basis.append(A)
    if worst > tol:
        raise VerificationError(
            f"constant-diagonal property failed verification (residual {worst:.3e})")
    return U, basis


# ---------------------------------------------------------------------------
# same-rank private algebras
# ---------------------------------------------------------------------------

def same_rank_private_algebra(phi: Channel, P_list, algebra=None,
                              tol: float = 1e-8) -> PrivatizationCertificate:
    """Certificate for the embedded image of a constant-diagonal algebra.

    ``P_list`` holds mutually orthogonal projections whose dual images
    are projections of one common rank; the embedding sends matrix units
    of M_r to partial isometries between the dual ranges.  ``algebra``
    may be a ``(U, basis)`` pair from :func:`constant_diagonal_algebra`;
    by default a square partition is used when r is a perfect square and
    the Fourier-twisted diagonal algebra otherwise.
    """
    Ps = [oc.as_complex_matrix(P) for P in P_list]
    r = len(Ps)
    if r == 0:
        raise ValidationError("need at least one projection")
    n = phi.dim_in
    for k, P in enumerate(Ps):
        if not oc.is_projection_matrix(P, tol):
            raise ValidationError(f"element {k} is not a projection")
        if not is_projection_in_mult_domain(phi, P, tol):
            raise ValidationError(
                f"projection {k} fails the multiplicative-domain test")
        for l in range(k):
            if frob(Ps[k] @ Ps[l]) > tol:
                raise ValidationError("projections are not mutually orthogonal")
    Qs = [phi.dual_apply(P) for P in Ps]
    Qs = [(Q + dagger(Q)) / 2 for Q in Qs]
    ranks = [int(round(np.trace(Q).real)) for Q in Qs]
    if len(set(ranks)) != 1:
        raise ValidationError(f"dual projections have unequal ranks {ranks}")
    s = ranks[0]
    if s == 0:
        raise ValidationError("dual projections vanish")

    bases = []
    for Q in Qs:
        evals, evecs = np.linalg.eigh(Q)
        cols = evecs[:, evals > 0.5]
        if cols.shape[1] != s:
            raise ValidationError("dual projection has ambiguous rank")
        for c in range(cols.shape[1]):
            idx = int(np.argmax(np.abs(cols[:, c])))
            cols[:, c] *= np.abs(cols[idx, c]) / cols[idx, c]
        bases.append(cols)

    if algebra is None:
        m = int(round(np.sqrt(r)))
        if m * m == r:
            algebra = constant_diagonal_algebra(r, [(m, m)])
        else:
            algebra = constant_diagonal_algebra(r, [(1, 1)] * r)
    _, alg_basis = algebra
    for A in alg_basis:
        if oc.as_complex_matrix(A).shape != (r, r):
            raise ValidationError("algebra elements must be r x r")

    def embed(A):
        out = np.zeros((n, n), dtype=np.complex128)
        for k in range(r):
            for l in range(r):
                if abs(A[k, l]) > 0:
                    out += A[k, l] * (bases[k] @ dagger(bases[l]))
        return out

    embedded = [embed(np.asarray(A)) for A in alg_basis]
    P_total = sum(Ps)
    rho0 = P_total @ phi.apply(np.eye(n)) @ P_total
    rho0 = (rho0 + dagger(rho0)) / 2
    rho0 = rho0 / np.trace(rho0).real
    span = oc.orthonormalize(embedded)
    cert = verify_private(phi, list(span.basis), rho0=rho0, tol=tol)
    blocks = sorted({(a.shape[0] if hasattr(a, "shape") else 0) for a in alg_basis})
    cert.structure = (f"embedded constant-diagonal subalgebra of M_{r} "
                      f"(dual rank {s})")
    return cert


def example_family(n: int, r: int, s: int, seed: int = 0,
                   tol: float = 1e-8) -> Channel:
    """Entanglement breaking channel with r classes of s rank-one Kraus
    terms: jointly orthonormal w vectors, and v vectors drawn inside r
    mutually orthogonal s-dimensional subspaces.

    The construction guarantees the dual maps each class projection to a
    rank-s projection, so :func:`same_rank_private_algebra` applies.
    """
    if r * s != n:
        raise ValidationError(f"need r*s = n, got {r}*{s} != {n}")
    for attempt in range(50):
        rng = np.random.default_rng(np.random.SeedSequence([seed, attempt, 0xFA]))
        Wmat = haar_unitary(n, rng)
        Vmat = haar_unitary(n, rng)
        pairs = []
        ok = True
        for k in range(r):
            sub = Vmat[:, k * s:(k + 1) * s]
            vs = []
            for i in range(s):
                g = rng.normal(size=s) + 1j * rng.normal(size=s)
                v = sub @ g
                v /= np.linalg.norm(v)
                vs.append(v)
            gram = np.array([[np.vdot(a, b) for b in vs] for a in vs])
            if np.linalg.eigvalsh(gram)[0] < 1e-3:
                ok = False
                break
            for i in range(s):
                pairs.append((vs[i], Wmat[:, k * s + i].copy()))
        if not ok:
            continue
        kraus = [np.outer(v, w.conj()) for v, w in pairs]
        phi = Channel(kraus, rank_one=tuple(pairs))
        for k in range(r):
            class_vs = [pairs[k * s + i][0] for i in range(s)]
            P = oc.projection_onto_span(class_vs)
            Q = phi.dual_apply(P)
            if frob(Q @ Q - Q) > tol or int(round(np.trace(Q).real)) != s:
                ok = False
                break
        if ok:
            return phi
    raise VerificationError("could not draw a well-conditioned instance")


# ---------------------------------------------------------------------------
# privacy verification
# ---------------------------------------------------------------------------

def verify_private(phi: KrausMap, algebra_basis, rho0=None,
                   tol: float = 1e-8) -> PrivatizationCertificate:
    """Check that a *-closed span is privatized by the channel.

    Two equivalent criteria are evaluated and must agree: (a) the
    traceless part of the algebra is annihilated; (b) phi(A) equals
    tr(A) rho0 for the fixed state inferred from the first non-traceless
    element (compared against ``rho0`` when supplied).  Raises
    :class:`AlgebraNotClosed` when the span fails adjoint/product
    closure and :class:`PrivacyViolation` (with the worst offender) when
    privatization fails.
    """
    mats = [oc.as_complex_matrix(A) for A in algebra_basis]
    if not mats:
        raise ValidationError("empty algebra basis")
    n = mats[0].shape[0]
    span = oc.orthonormalize(mats)
    for A in mats:
        if span.residual(dagger(A)) > tol * max(1.0, frob(A)):
            raise AlgebraNotClosed("span is not closed under adjoints")
    for A in mats:
        for B in mats:
            prod = A @ B
            if span.residual(prod) > tol * max(1.0, frob(prod)):
                raise AlgebraNotClosed("span is not closed under multiplication")

    basis = list(span.basis)
    traces = np.array([np.trace(B) for B in basis])

    # (a) annihilation of the traceless part
    coeff_kernel = []
    if np.max(np.abs(traces)) <= 1e-12:
        traceless_elements = basis
    else:
        t = traces.reshape(1, -1)
        _, sv, Vh = np.linalg.svd(t)
        coeff_kernel = [Vh[k].conj() for k in range(1, len(basis))]
        traceless_elements = [sum(c[i] * basis[i] for i in range(len(basis)))
                              for c in coeff_kernel]
    worst_a, worst_elem = 0.0, None
    for T in traceless_elements:
        resid = frob(phi.apply(T)) / max(1.0, frob(T))
        if resid > worst_a:
            worst_a, worst_elem = resid, T
    passed_a = worst_a <= tol

    # (b) the fixed-state identity
    idx = int(np.argmax(np.abs(traces)))
    if abs(traces[idx]) <= 1e-12:
        raise AlgebraNotClosed(
            "no element with nonzero trace: a nonzero *-closed algebra "
            "always contains one")
    rho_hat = phi.apply(basis[idx]) / traces[idx]
    rho_hat = (rho_hat + dagger(rho_hat)) / 2
    worst_b = 0.0
    for B in basis:
        resid = frob(phi.apply(B) - np.trace(B) * rho_hat) / max(1.0, frob(B))
        worst_b = max(worst_b, resid)
    passed_b = worst_b <= tol
    if rho0 is not None and passed_b:
        rho0 = oc.as_complex_matrix(rho0)
        if frob(rho_hat - rho0) > tol * 10:
            raise PrivacyViolation(
                "privatization holds but not to the supplied fixed state",
                worst_residual=frob(rho_hat - rho0))

    if passed_a != passed_b:
        raise VerificationError(
            "annihilation and fixed-state criteria disagree "
            f"(traceless residual {worst_a:.3e}, identity residual {worst_b:.3e})")
    if not passed_a:
        raise PrivacyViolation(
            f"algebra is not privatized (worst residual {max(worst_a, worst_b):.3e})",
            worst_element=worst_elem, worst_residual=max(worst_a, worst_b))
    return PrivatizationCertificate(
        algebra_basis=basis, rho0=rho_hat, residual=float(max(worst_a, worst_b)),
        structure=f"verified span of dimension {len(basis)}")
