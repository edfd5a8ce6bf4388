"""Mixed-unitarity machinery: the diag-zero isometry criterion on the
canonical complement, obstruction analysis of the complement's traceless
range, a verified heuristic search for decompositions, and the privatizing
channel built from any decomposition found.

Detecting mixed unitarity is NP-hard in general, so the API separates a
sound verifier (:func:`verify_diag_zero_isometry`), sound obstructions
(:func:`obstruction_report`), and an explicitly incomplete search
(:func:`search_mixed_unitary`) whose positive results are always verified
and whose failures prove nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from . import operator_core as oc
from ._accel import alt_project_rank_one
from .channel import Channel, KrausMap, canonical_complement, complement_kraus_family
from .errors import ValidationError, VerificationError
from .operator_core import DEFAULT_TOL, OperatorSubspace, Tolerance, dagger, frob

VERDICT_NOT_MIXED_UNITARY = "NOT_MIXED_UNITARY"
VERDICT_CANDIDATE_FOUND = "CANDIDATE_FOUND"
VERDICT_INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class MixedUnitaryDecomposition:
    """A verified convex-mixture-of-unitaries form of a channel.

    ``isometry`` is the r x d matrix W expressing each scaled unitary in
    the complement's Kraus family: sqrt(p_i) U_i = sum_j W[i, j] V_j.
    """

    probs: np.ndarray
    unitaries: list[np.ndarray]
    isometry: np.ndarray
    diag_residual: float
    choi_residual: float

    @property
    def terms(self) -> int:
        return len(self.unitaries)

    def as_channel(self) -> Channel:
        return Channel([np.sqrt(p) * U for p, U in zip(self.probs, self.unitaries)])


@dataclass
class ObstructionReport:
    """Outcome of the complement-range obstruction analysis."""

    S: OperatorSubspace
    T: OperatorSubspace
    verdict: str
    witness: str
    data: dict = field(default_factory=dict)
    decomposition: MixedUnitaryDecomposition | None = None


# ---------------------------------------------------------------------------
# complement range and its Hermitian complement
# ---------------------------------------------------------------------------

def traceless_complement_range(phi: KrausMap, tol: Tolerance = DEFAULT_TOL):
    """The pair (S, T) for the obstruction analysis.

    S is the image of the traceless matrices under the canonical
    complement; T is its orthogonal complement inside the full d x d
    matrix space, expressed in a Hermitian basis.  The identity always
    lies in T because the complement is trace preserving.
    """
    comp = canonical_complement(phi, tol)
    d = comp.dim_out
    images = [comp.apply(B) for B in oc.hermitian_traceless_basis(phi.dim_in)]
    images = [M for M in images if frob(M) > tol.rank_gap]
    S = oc.orthonormalize(images, tol) if images else oc.zero_subspace(d)
    T = oc.orthogonal_complement(S, oc.full_subspace(d), tol)
    eye = np.eye(d, dtype=np.complex128) / np.sqrt(d)
    if T.residual(eye) > 1e-8:
        raise VerificationError("identity is missing from the complement obstruction space")
    return S, T


# ---------------------------------------------------------------------------
# sound verifier
# ---------------------------------------------------------------------------

def verify_diag_zero_isometry(phi: KrausMap, W, tol: float = 1e-8):
    """Check whether W maps the complement's traceless range off-diagonal.

    Returns ``(ok, residual, decomposition)``.  ``residual`` is the
    largest diagonal magnitude of ``W comp(B) W*`` over a traceless
    operator basis; when it passes, the implied mixture of unitaries is
    extracted, fully validated (unitarity, probabilities, Choi
    reconstruction) and returned.
    """
    W = oc.as_complex_matrix(W)
    V = complement_kraus_family(phi)
    d = len(V)
    if W.shape[1] != d:
        raise ValidationError(f"isometry must have {d} columns, got {W.shape[1]}")
    if frob(dagger(W) @ W - np.eye(d)) > 1e-8:
        raise ValidationError("W is not an isometry")
    comp = canonical_complement(phi)
    residual = 0.0
    for B in oc.hermitian_traceless_basis(phi.dim_in):
        M = W @ comp.apply(B) @ dagger(W)
        residual = max(residual, float(np.max(np.abs(np.diag(M)))))
    if residual > tol:
        return False, residual, None

    n = phi.dim_in
    probs, unitaries, rows = [], [], []
    for i in range(W.shape[0]):
        tilde = sum(W[i, j] * V[j] for j in range(d))
        gram = dagger(tilde) @ tilde
        p = float(np.trace(gram).real) / n
        if p <= 1e-12:
            if np.linalg.norm(W[i, :]) > 1e-8:
                return False, residual, None
            continue
        if frob(gram - p * np.eye(n)) > tol * max(1.0, p) * 10:
            return False, residual, None
        probs.append(p)
        unitaries.append(tilde / np.sqrt(p))
        rows.append(W[i, :])
    if not probs:
        return False, residual, None
    probs = np.array(probs)
    W_kept = np.stack(rows)
    for U in unitaries:
        if frob(dagger(U) @ U - np.eye(n)) > 1e-7:
            return False, residual, None
    if abs(probs.sum() - 1.0) > 1e-8:
        return False, residual, None
    recon = Channel([np.sqrt(p) * U for p, U in zip(probs, unitaries)])
    choi_resid = frob(recon.choi() - phi.choi()) / max(1.0, frob(phi.choi()))
    if choi_resid > tol:
        return False, residual, None
    dec = MixedUnitaryDecomposition(probs=probs, unitaries=unitaries,
                                    isometry=W_kept, diag_residual=residual,
                                    choi_residual=choi_resid)
    return True, residual, dec


def mixing_isometry(phi: KrausMap, kraus_family, tol: float = 1e-8) -> np.ndarray:
    """Coefficients of a Kraus family in the complement's family.

    Solves ``family[i] = sum_j W[i, j] V_j`` by least squares against the
    complement's Kraus operators and verifies both the reconstruction and
    that W is an isometry.
    """
    V = complement_kraus_family(phi)
    A = np.stack([oc.vec(Vj) for Vj in V], axis=1)
    rows = []
    for K in kraus_family:
        K = oc.as_complex_matrix(K)
        coef, res, _, _ = np.linalg.lstsq(A, oc.vec(K), rcond=None)
        if frob(A @ coef - oc.vec(K)) > tol * max(1.0, frob(K)):
            raise ValidationError("Kraus family does not lie in the span of the "
                                  "complement family")
        rows.append(coef)
    W = np.stack(rows)
    if frob(dagger(W) @ W - np.eye(len(V))) > tol * 10:
        raise ValidationError("computed coefficient matrix is not an isometry")
    return W


# ---------------------------------------------------------------------------
# rank-one harvesting inside T
# ---------------------------------------------------------------------------

def _flatten_basis(T: OperatorSubspace) -> np.ndarray:
    return np.stack([np.asarray(B).reshape(-1) for B in T.basis])


def _find_rank_one(basis_flat: np.ndarray, proj_cols: np.ndarray, rng,
                   tries: int, d: int, accept: float = 1e-8):
    """Repeated alternating-projection starts; returns a unit vector whose
    projector lies in T (and in the free subspace), or None."""
    f = proj_cols.shape[1]
    for _ in range(tries):
        g = rng.normal(size=f) + 1j * rng.normal(size=f)
        w0 = proj_cols @ g
        w0 /= np.linalg.norm(w0)
        x0 = np.outer(w0, w0.conj())
        w, lam, resid, _ = alt_project_rank_one(basis_flat, proj_cols, x0)
        if lam <= 1e-10:
            continue
        w = w / np.linalg.norm(w)
        P = np.outer(w, w.conj())
        coef = (basis_flat.conj() @ P.reshape(-1)).real
        feas = float(np.linalg.norm(P.reshape(-1) - basis_flat.T @ coef.astype(complex)))
        if feas <= accept:
            return w
    return None


def _orthonormal_completion(frame: list[np.ndarray], d: int) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of the frame vectors."""
    if not frame:
        return np.eye(d, dtype=np.complex128)
    A = np.stack(frame, axis=1)
    Q, _ = np.linalg.qr(np.eye(d, dtype=np.complex128) - A @ dagger(A))
    cols = []
    for k in range(d):
        col = Q[:, k]
        col = col - A @ (dagger(A) @ col)
        norm = np.linalg.norm(col)
        if norm > 1e-7:
            cols.append(col / norm)
    out = np.stack(cols, axis=1) if cols else np.zeros((d, 0), dtype=np.complex128)
    # re-orthonormalize
    if out.shape[1]:
        out, _ = np.linalg.qr(out)
    return out


def _greedy_frame(T: OperatorSubspace, d: int, rng, tries_per_slot: int = 3):
    """Try to assemble d orthonormal vectors with projectors in T.

    The last slot is the forced orthogonal completion (feasible for free
    once the others are), so only d - 1 searches run.
    """
    basis_flat = _flatten_basis(T)
    frame: list[np.ndarray] = []
    while len(frame) < d - 1:
        free = _orthonormal_completion(frame, d)
        if free.shape[1] == 0:
            return None
        w = _find_rank_one(basis_flat, free, rng, tries_per_slot, d)
        if w is None:
            return None
        frame.append(w)
    free = _orthonormal_completion(frame, d)
    if free.shape[1] != 1:
        return None
    frame.append(free[:, 0])
    return frame


def _frame_to_isometry(frame: list[np.ndarray]) -> np.ndarray:
    return np.stack([w.conj() for w in frame])


def _harvest_directions(T: OperatorSubspace, d: int, rng, starts: int):
    basis_flat = _flatten_basis(T)
    eye = np.eye(d, dtype=np.complex128)
    found: list[np.ndarray] = []
    for _ in range(starts):
        w = _find_rank_one(basis_flat, eye, rng, 1, d)
        if w is None:
            continue
        dup = any(abs(np.vdot(w, u)) ** 2 >= 1.0 - 1e-6 for u in found)
        if not dup:
            found.append(w)
    return found


def _nnls_frame(directions: list[np.ndarray], d: int, max_terms: int):
    """Nonnegative weights making sum_k c_k w_k w_k* = I, or None."""
    if not directions:
        return None
    cols = []
    for w in directions:
        P = np.outer(w, w.conj()).reshape(-1)
        cols.append(np.concatenate([P.real, P.imag]))
    A = np.stack(cols, axis=1)
    target = np.eye(d, dtype=np.complex128).reshape(-1)
    b = np.concatenate([target.real, target.imag])
    coef, resid = nnls(A, b)
    if resid > 1e-8:
        return None
    keep = [(c, w) for c, w in zip(coef, directions) if c > 1e-10]
    if not keep or len(keep) > max_terms:
        return None
    return [np.sqrt(c) * w for c, w in keep]


# ---------------------------------------------------------------------------
# search
# ---------------------------------------------------------------------------

def _unitary_multiple_probs(family, n: int, tol: float = 1e-9):
    probs = []
    for K in family:
        gram = dagger(K) @ K
        p = float(np.trace(gram).real) / n
        if p <= tol or frob(gram - p * np.eye(n)) > 1e-9 * max(1.0, p):
            return None
        probs.append(p)
    if abs(sum(probs) - 1.0) > 1e-8:
        return None
    return probs


def search_mixed_unitary(phi: KrausMap, max_terms: int | None = None,
                         restarts: int = 64, seed: int = 0,
                         tol: float = 1e-8) -> MixedUnitaryDecomposition | None:
    """Heuristic search for a mixed-unitary decomposition.

    Tries, in order: reading off stored Kraus operators that are already
    multiples of unitaries; the shift/clock frame when the complement
    dimension is a perfect square; a greedy orthonormal frame assembled
    from alternating-projection rank-one searches; and a nonnegative
    least-squares frame over harvested directions (never more than
    ``max_terms`` terms, default d^2).  Everything returned went through
    :func:`verify_diag_zero_isometry`; ``None`` proves nothing.
    """
    V = complement_kraus_family(phi)
    d = len(V)
    n = phi.dim_in
    if max_terms is None:
        max_terms = d * d

    # stage 0: the channel may already be written as a mixture of unitaries
    for family in (list(phi.kraus), V):
        if _unitary_multiple_probs(family, n) is not None:
            try:
                W = mixing_isometry(phi, family)
            except ValidationError:
                continue
            ok, _, dec = verify_diag_zero_isometry(phi, W, tol)
            if ok and dec.terms <= max_terms:
                return dec

    # stage 1: structured frame from the shift/clock family when d = m^2
    m = int(round(np.sqrt(d)))
    if m * m == d:
        rows = [np.asarray(Wa).reshape(-1) / np.sqrt(m) for Wa in oc.weyl_unitaries(m)]
        W = np.stack([r.conj() for r in rows])
        try:
            ok, _, dec = verify_diag_zero_isometry(phi, W, tol)
        except ValidationError:
            ok, dec = False, None
        if ok and dec.terms <= max_terms:
            return dec

    _, T = traceless_complement_range(phi)

    # stage 2: greedy orthonormal frame (r = d terms)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    for _ in range(max(1, restarts)):
        frame = _greedy_frame(T, d, rng)
        if frame is None:
            continue
        ok, _, dec = verify_diag_zero_isometry(phi, _frame_to_isometry(frame), tol)
        if ok and dec.terms <= max_terms:
            return dec

    # stage 3: harvested directions + nonnegative least squares (r <= max_terms)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
    directions = _harvest_directions(T, d, rng, max(restarts, 4 * d * d))
    scaled = _nnls_frame(directions, d, max_terms)
    if scaled is not None:
        W = np.stack([w.conj() for w in scaled])
        ok, _, dec = verify_diag_zero_isometry(phi, W, tol)
        if ok:
            return dec
    return None


# ---------------------------------------------------------------------------
# obstruction certificate and report
# ---------------------------------------------------------------------------

def no_rank_one_certificate(T: OperatorSubspace, margin: float = 1e-9):
    """Try to certify that T contains no nonzero rank-one PSD element.

    A unit-norm element of T is rank-one PSD exactly when its largest
    eigenvalue equals 1, and c -> lambda_max(sum_i c_i B_i) is
    1-Lipschitz on the unit sphere of real coefficients, so a covering
    grid bounds the maximum.  Returns ``(certified, sup_bound)``; only
    small real dimensions are attempted (dim T <= 3), everything else
    returns ``(False, nan)``.
    """
    t = T.dim
    if t == 0:
        return True, 0.0
    if t == 1:
        B = np.asarray(T.basis[0])
        for sign in (1.0, -1.0):
            evals = np.linalg.eigvalsh(sign * (B + dagger(B)) / 2)
            if evals[-1] >= 1.0 - 1e-9:
                return False, 1.0
        bound = max(np.linalg.eigvalsh((s * (B + dagger(B)) / 2))[-1] for s in (1.0, -1.0))
        return True, float(bound)
    if t > 3:
        return False, float("nan")
    herm = [(np.asarray(B) + dagger(B)) / 2 for B in T.basis]
    if any(frob(H - B) > 1e-9 for H, B in zip(herm, T.basis)):
        return False, float("nan")  # only Hermitian bases are handled
    if t == 2:
        thetas = np.arange(0.0, 2 * np.pi, 1e-3)
        delta = 5e-4
        best = 0.0
        for th in thetas:
            M = np.cos(th) * herm[0] + np.sin(th) * herm[1]
            best = max(best, float(np.linalg.eigvalsh(M)[-1]))
    else:
        count = 60000
        idx = np.arange(count)
        z = 1.0 - 2.0 * (idx + 0.5) / count
        r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        golden = np.pi * (3.0 - np.sqrt(5.0))
        ang = golden * idx
        pts = np.stack([r * np.cos(ang), r * np.sin(ang), z], axis=1)
        delta = 4.0 / np.sqrt(count)
        best = 0.0
        for c in pts:
            M = c[0] * herm[0] + c[1] * herm[1] + c[2] * herm[2]
            best = max(best, float(np.linalg.eigvalsh(M)[-1]))
    bound = best + delta
    return bool(bound < 1.0 - margin), float(bound)


def classify_obstruction(T: OperatorSubspace, d: int,
                         decomposition: MixedUnitaryDecomposition | None):
    """Verdict logic shared by :func:`obstruction_report`."""
    if decomposition is not None:
        return VERDICT_CANDIDATE_FOUND, "verified decomposition found", {}
    if T.dim == 1 and d > 1:
        B = T.basis[0]
        eye = np.eye(d, dtype=np.complex128) / np.sqrt(d)
        if min(frob(B - eye), frob(B + eye)) <= 1e-8:
            return (VERDICT_NOT_MIXED_UNITARY,
                    "obstruction space is spanned by the identity alone, which is "
                    f"not rank one for d = {d} > 1",
                    {"pattern": "identity-span"})
    if d <= 3:
        certified, bound = no_rank_one_certificate(T)
        if certified:
            return (VERDICT_NOT_MIXED_UNITARY,
                    "covering bound excludes rank-one projections from the "
                    f"obstruction space (sup lambda_max <= {bound:.6f} < 1)",
                    {"pattern": "covering-bound", "sup_bound": bound})
    return (VERDICT_INCONCLUSIVE,
            "search found nothing and no obstruction certificate applies", {})


def obstruction_report(phi: KrausMap, max_terms: int | None = None,
                       restarts: int = 64, seed: int = 0,
                       tol: float = 1e-8) -> ObstructionReport:
    """Run the obstruction analysis and the search, and classify the outcome."""
    S, T = traceless_complement_range(phi)
    V = complement_kraus_family(phi)
    dec = search_mixed_unitary(phi, max_terms=max_terms, restarts=restarts,
                               seed=seed, tol=tol)
    verdict, witness, data = classify_obstruction(T, len(V), dec)
    data = dict(data)
    data.update({"d": len(V), "S_dim": S.dim, "T_dim": T.dim})
    return ObstructionReport(S=S, T=T, verdict=verdict, witness=witness,
                             data=data, decomposition=dec)


# ---------------------------------------------------------------------------
# privatizing channel
# ---------------------------------------------------------------------------

def build_privatizing_channel(phi: KrausMap, dec: MixedUnitaryDecomposition,
                              tol: float = 1e-8):
    """The channel E with E(comp(X)) = tr(X)/r I_r, built from a decomposition.

    E maps the complement's output space into r x r matrices using
    rank-one Kraus operators assembled from the rows of the
    decomposition's isometry; it is completely positive but not trace
    preserving in the usual trace.  The defining identity is verified on
    a full operator basis and the Choi rank of E is checked to equal r.
    """
    comp = canonical_complement(phi)
    d = comp.dim_out
    W = dec.isometry
    r = W.shape[0]
    if W.shape[1] != d:
        raise ValidationError("decomposition does not match the channel's complement")
    probs = np.asarray(dec.probs, dtype=float)
    kraus = []
    for i in range(r):
        w = W[i, :].conj()
        u = np.zeros(r, dtype=np.complex128)
        u[i] = 1.0 / np.sqrt(r * probs[i])
        kraus.append(np.outer(u, w.conj()))
    E = KrausMap(kraus)
    residual = 0.0
    eye_r = np.eye(r, dtype=np.complex128)
    for B in oc.matrix_units(phi.dim_in):
        lhs = E.apply(comp.apply(B))
        target = (np.trace(B) / r) * eye_r
        residual = max(residual, frob(lhs - target))
    if residual > tol:
        raise VerificationError(
            f"privatizing identity failed (residual {residual:.3e}); "
            "the decomposition is inconsistent with the complement")
    if E.choi_rank() != r:
        raise VerificationError("privatizing channel has unexpected Choi rank")
    return E, residual
