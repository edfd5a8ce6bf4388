"""Quantum channels in Kraus form: Choi matrices, Holevo forms, duals,
canonical complements, and entanglement-breaking certificates.

Conventions, fixed once for the whole package:

* vectorization is column-stacking, so the natural matrix of
  ``X -> sum_i V_i X V_i*`` is ``sum_i conj(V_i) kron V_i``;
* the Choi matrix is ``J = sum_ij E_ij kron Phi(E_ij)`` (input factor
  first), positive semidefinite exactly for completely positive maps,
  with partial trace over the second factor equal to I exactly for
  trace-preserving maps.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from . import operator_core as oc
from .errors import DimensionMismatch, ParseError, ValidationError
from .operator_core import DEFAULT_TOL, Tolerance, dagger, frob, unvec, vec


class KrausMap:
    """Completely positive map given by a list of Kraus operators.

    Not necessarily trace preserving; :class:`Channel` adds that
    requirement.  Instances are immutable after construction.
    """

    def __init__(self, kraus):
        ks = [np.ascontiguousarray(np.asarray(K, dtype=np.complex128)) for K in kraus]
        if not ks:
            raise ValidationError("a Kraus map needs at least one Kraus operator")
        rows, cols = ks[0].shape
        for K in ks:
            if K.ndim != 2 or K.shape != (rows, cols):
                raise DimensionMismatch("Kraus operators of mixed shape")
            K.setflags(write=False)
        self.kraus: tuple[np.ndarray, ...] = tuple(ks)
        self.dim_in = cols
        self.dim_out = rows

    def __len__(self):
        return len(self.kraus)

    def apply(self, X) -> np.ndarray:
        """Evaluate the map: sum_i V_i X V_i*."""
        X = oc.as_complex_matrix(X)
        if X.shape != (self.dim_in, self.dim_in):
            raise DimensionMismatch(
                f"expected {self.dim_in} x {self.dim_in} input, got {X.shape}")
        out = np.zeros((self.dim_out, self.dim_out), dtype=np.complex128)
        for V in self.kraus:
            out += V @ X @ dagger(V)
        return out

    def dual_apply(self, X) -> np.ndarray:
        """Evaluate the dual map: sum_i V_i* X V_i."""
        X = oc.as_complex_matrix(X)
        if X.shape != (self.dim_out, self.dim_out):
            raise DimensionMismatch(
                f"expected {self.dim_out} x {self.dim_out} input, got {X.shape}")
        out = np.zeros((self.dim_in, self.dim_in), dtype=np.complex128)
        for V in self.kraus:
            out += dagger(V) @ X @ V
        return out

    def natural_matrix(self) -> np.ndarray:
        """Matrix M with M vec(X) = vec(map(X)) in column-stacking convention."""
        M = np.zeros((self.dim_out ** 2, self.dim_in ** 2), dtype=np.complex128)
        for V in self.kraus:
            M += np.kron(V.conj(), V)
        return M

    def choi(self) -> np.ndarray:
        """Choi matrix sum_ij E_ij kron map(E_ij)."""
        n = self.dim_in * self.dim_out
        J = np.zeros((n, n), dtype=np.complex128)
        for V in self.kraus:
            w = vec(V)
            J += np.outer(w, w.conj())
        return J

    def choi_rank(self, tol: Tolerance = DEFAULT_TOL) -> int:
        evals = np.linalg.eigvalsh(self.choi())
        top = evals[-1] if evals.size else 0.0
        return int(np.sum(evals > tol.rank_gap * max(top, 0.0)))

    def tp_residual(self) -> float:
        acc = np.zeros((self.dim_in, self.dim_in), dtype=np.complex128)
        for V in self.kraus:
            acc += dagger(V) @ V
        return frob(acc - np.eye(self.dim_in))

    def minimal_kraus(self, tol: Tolerance = DEFAULT_TOL) -> list[np.ndarray]:
        """Minimal Kraus family from the Choi eigendecomposition.

        Eigenvalues are sorted in descending order and each operator's
        phase is fixed by making its largest-magnitude entry real
        positive, so the output is reproducible.
        """
        J = self.choi()
        evals, evecs = np.linalg.eigh(J)
        top = max(evals[-1], 0.0)
        if evals[0] < -DEFAULT_TOL.abs * max(1.0, top):
            raise ValidationError(
                f"map is not completely positive: Choi eigenvalue {evals[0]:.3e}")
        out = []
        for k in range(evals.size - 1, -1, -1):
            lam = evals[k]
            if lam <= tol.rank_gap * top:
                break
            w = np.sqrt(lam) * evecs[:, k]
            idx = int(np.argmax(np.abs(w)))
            phase = w[idx] / abs(w[idx])
            out.append(unvec(w / phase, self.dim_out, self.dim_in))
        return out


def dual(phi: KrausMap) -> KrausMap:
    """The dual (adjoint) map, unital when ``phi`` is trace preserving."""
    return KrausMap([dagger(V) for V in phi.kraus])


@dataclass(frozen=True)
class HolevoForm:
    """Measure-and-prepare data: POVM elements paired with output states."""

    povm: tuple[np.ndarray, ...]
    states: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "povm",
                           tuple(oc.as_complex_matrix(F) for F in self.povm))
        object.__setattr__(self, "states",
                           tuple(oc.as_complex_matrix(R) for R in self.states))

    @property
    def dim_in(self) -> int:
        return self.povm[0].shape[0]

    @property
    def dim_out(self) -> int:
        return self.states[0].shape[0]

    def apply(self, X) -> np.ndarray:
        X = oc.as_complex_matrix(X)
        out = np.zeros((self.dim_out, self.dim_out), dtype=np.complex128)
        for F, R in zip(self.povm, self.states):
            out += np.trace(F @ X) * R
        return out

    def validate(self, tol: Tolerance = DEFAULT_TOL) -> None:
        if len(self.povm) != len(self.states) or not self.povm:
            raise ValidationError("POVM and state lists must have equal length >= 1")
        d_in, d_out = self.dim_in, self.dim_out
        acc = np.zeros((d_in, d_in), dtype=np.complex128)
        for F in self.povm:
            if F.shape != (d_in, d_in):
                raise DimensionMismatch("POVM elements of mixed dimension")
            if frob(F) <= tol.abs:
                raise ValidationError("POVM contains a zero element")
            if not oc.is_hermitian(F, tol.abs * 10):
                raise ValidationError("POVM element is not Hermitian")
            if np.linalg.eigvalsh((F + dagger(F)) / 2)[0] < -tol.abs * 10:
                raise ValidationError("POVM element is not positive semidefinite")
            acc += F
        if frob(acc - np.eye(d_in)) > tol.abs * 100:
            raise ValidationError(
                f"POVM does not sum to the identity (residual {frob(acc - np.eye(d_in)):.3e})")
        for R in self.states:
            if R.shape != (d_out, d_out):
                raise DimensionMismatch("states of mixed dimension")
            if not oc.is_hermitian(R, tol.abs * 10):
                raise ValidationError("state is not Hermitian")
            if np.linalg.eigvalsh((R + dagger(R)) / 2)[0] < -tol.abs * 10:
                raise ValidationError("state is not positive semidefinite")
            if abs(np.trace(R) - 1.0) > tol.abs * 100:
                raise ValidationError("state does not have unit trace")


class Channel(KrausMap):
    """Trace-preserving completely positive map.

    Optionally carries a Holevo form and a rank-one Kraus form
    ``(v_i, w_i)`` with ``V_i = v_i w_i*``, ``|v_i| = 1`` and
    ``sum_i w_i w_i* = I``; both are validated when attached.
    """

    def __init__(self, kraus, holevo: HolevoForm | None = None,
                 rank_one=None, tol: Tolerance = DEFAULT_TOL, validate: bool = True):
        super().__init__(kraus)
        self.holevo = holevo
        if rank_one is not None:
            rank_one = tuple(
                (np.ascontiguousarray(np.asarray(v, dtype=np.complex128)).reshape(-1),
                 np.ascontiguousarray(np.asarray(w, dtype=np.complex128)).reshape(-1))
                for v, w in rank_one)
        self.rank_one = rank_one
        if validate:
            self.validate(tol)

    def validate(self, tol: Tolerance = DEFAULT_TOL) -> None:
        resid = self.tp_residual()
        if resid > tol.abs * 100:
            raise ValidationError(f"channel is not trace preserving (residual {resid:.3e})")
        if self.holevo is not None:
            self.holevo.validate(tol)
            if (self.holevo.dim_in, self.holevo.dim_out) != (self.dim_in, self.dim_out):
                raise DimensionMismatch("Holevo form dimensions do not match the channel")
        if self.rank_one is not None:
            if len(self.rank_one) != len(self.kraus):
                raise ValidationError("rank-one form must match the Kraus list")
            acc = np.zeros((self.dim_in, self.dim_in), dtype=np.complex128)
            for (v, w), V in zip(self.rank_one, self.kraus):
                if abs(np.linalg.norm(v) - 1.0) > tol.abs * 100:
                    raise ValidationError("rank-one form has a non-unit v vector")
                if np.linalg.norm(w) <= tol.abs:
                    raise ValidationError("rank-one form has a zero w vector")
                if frob(np.outer(v, w.conj()) - V) > tol.abs * 100 * max(1.0, frob(V)):
                    raise ValidationError("rank-one form does not reproduce the Kraus operator")
                acc += np.outer(w, w.conj())
            if frob(acc - np.eye(self.dim_in)) > tol.abs * 100:
                raise ValidationError("rank-one w vectors do not resolve the identity")

    @classmethod
    def from_choi(cls, J, dim_in: int, dim_out: int,
                  tol: Tolerance = DEFAULT_TOL) -> "Channel":
        """Rebuild a channel from its Choi matrix (minimal Kraus family)."""
        J = oc.as_complex_matrix(J)
        if J.shape != (dim_in * dim_out, dim_in * dim_out):
            raise DimensionMismatch("Choi matrix has the wrong size")
        evals, evecs = np.linalg.eigh((J + dagger(J)) / 2)
        top = max(evals[-1], 0.0)
        if evals[0] < -tol.abs * max(1.0, top):
            raise ValidationError("Choi matrix is not positive semidefinite")
        kraus = []
        for k in range(evals.size - 1, -1, -1):
            lam = evals[k]
            if lam <= tol.rank_gap * top:
                break
            w = np.sqrt(lam) * evecs[:, k]
            idx = int(np.argmax(np.abs(w)))
            w = w / (w[idx] / abs(w[idx]))
            kraus.append(unvec(w, dim_out, dim_in))
        return cls(kraus, tol=tol)

    def with_rank_one(self, tol: Tolerance = DEFAULT_TOL) -> "Channel | None":
        """Attach a rank-one form if the minimal Kraus family is rank one.

        Returns the rewritten channel, or None when some minimal Kraus
        operator has numerical rank above one.
        """
        if self.rank_one is not None:
            return self
        pairs = _rank_one_pairs(self.minimal_kraus(tol), tol)
        if pairs is None:
            return None
        kraus = [np.outer(v, w.conj()) for v, w in pairs]
        return Channel(kraus, holevo=self.holevo, rank_one=pairs, tol=tol)


def _rank_one_pairs(kraus, tol: Tolerance):
    pairs = []
    for V in kraus:
        s = np.linalg.svd(V, compute_uv=False)
        if s.size > 1 and s[1] > tol.rank_gap * s[0]:
            return None
        U, sv, Vh = np.linalg.svd(V)
        v = U[:, 0]
        idx = int(np.argmax(np.abs(v)))
        v = v / (v[idx] / abs(v[idx]))
        w = dagger(V) @ v
        pairs.append((v, w))
    return tuple(pairs)


# ---------------------------------------------------------------------------
# representation conversions
# ---------------------------------------------------------------------------

def holevo_to_kraus(h: HolevoForm, tol: Tolerance = DEFAULT_TOL) -> Channel:
    """Channel with rank-one Kraus operators realizing a Holevo form.

    Spectrally decomposes each POVM element and state, emitting one
    rank-one operator ``sqrt(f r) b a*`` per eigenvalue pair; eigenvalues
    at most ``tol.rank_gap`` times the leading one are dropped.
    """
    h.validate(tol)
    kraus = []
    pairs = []
    for F, R in zip(h.povm, h.states):
        fvals, fvecs = np.linalg.eigh((F + dagger(F)) / 2)
        rvals, rvecs = np.linalg.eigh((R + dagger(R)) / 2)
        fcut = tol.rank_gap * max(fvals[-1], 0.0)
        rcut = tol.rank_gap * max(rvals[-1], 0.0)
        for fa in range(fvals.size - 1, -1, -1):
            if fvals[fa] <= fcut:
                break
            for rb in range(rvals.size - 1, -1, -1):
                if rvals[rb] <= rcut:
                    break
                weight = np.sqrt(fvals[fa] * rvals[rb])
                v = rvecs[:, rb]
                w = weight * fvecs[:, fa]
                kraus.append(np.outer(v, w.conj()))
                pairs.append((v, w))
    phi = Channel(kraus, holevo=h, rank_one=tuple(pairs), tol=tol)
    # the rank-one realization must reproduce the Holevo action
    probe = np.zeros((h.dim_in, h.dim_in), dtype=np.complex128)
    for B in oc.matrix_units(h.dim_in):
        if frob(phi.apply(B) - h.apply(B)) > tol.abs * 1000:
            raise ValidationError("Holevo form decomposition failed to reproduce the map")
    return phi


def canonical_complement(phi: KrausMap, tol: Tolerance = DEFAULT_TOL) -> Channel:
    """Channel to the environment built from a minimal Kraus family.

    If the stored Kraus family is already minimal it is used in its given
    order (complements are only defined up to an isometry, so the order
    matters for comparisons); otherwise a minimal family is derived from
    the Choi matrix.
    """
    V = complement_kraus_family(phi, tol)
    return _complement_from_family(V, phi.dim_in, tol)


def complement_kraus_family(phi: KrausMap, tol: Tolerance = DEFAULT_TOL) -> list[np.ndarray]:
    """The Kraus family the canonical complement is built on."""
    if len(phi.kraus) == phi.choi_rank(tol):
        return list(phi.kraus)
    return phi.minimal_kraus(tol)


def _complement_from_family(V: list[np.ndarray], n: int, tol: Tolerance) -> Channel:
    d = len(V)
    stacked = np.stack(V)  # (d, n_out, n_in)
    kraus = [np.ascontiguousarray(stacked[:, j, :]) for j in range(stacked.shape[1])]
    return Channel(kraus, tol=tol)


def diagonal_range_to_holevo(E: KrausMap, basis_vectors,
                             tol: Tolerance = DEFAULT_TOL) -> HolevoForm:
    """Holevo form of a channel whose range lies in a diagonal algebra.

    ``basis_vectors`` is the orthonormal basis diagonalizing the range;
    raises when the range check fails.  The returned form has
    ``F_i = E_dual(u_i u_i*)`` and ``R_i = u_i u_i*``.
    """
    us = [oc.as_complex_matrix(u).reshape(-1) for u in basis_vectors]
    r = E.dim_out
    if len(us) != r:
        raise ValidationError(f"need {r} basis vectors, got {len(us)}")
    U = np.stack(us, axis=1)
    if frob(dagger(U) @ U - np.eye(r)) > tol.abs * 100:
        raise ValidationError("basis vectors are not orthonormal")
    check_tol = max(tol.abs * 1000, 1e-8)
    for B in oc.matrix_units(E.dim_in):
        Y = dagger(U) @ E.apply(B) @ U
        off = Y - np.diag(np.diag(Y))
        if frob(off) > check_tol * max(1.0, frob(Y)):
            raise ValidationError(
                "channel range is not contained in the given diagonal algebra")
    povm = []
    states = []
    for u in us:
        F = E.dual_apply(np.outer(u, u.conj()))
        povm.append((F + dagger(F)) / 2)
        states.append(np.outer(u, u.conj()))
    h = HolevoForm(tuple(povm), tuple(states))
    h.validate(tol)
    for B in oc.matrix_units(E.dim_in):
        if frob(h.apply(B) - E.apply(B)) > check_tol * max(1.0, frob(E.apply(B))):
            raise ValidationError("reconstructed Holevo form does not reproduce the channel")
    return h


# ---------------------------------------------------------------------------
# entanglement-breaking check
# ---------------------------------------------------------------------------

@dataclass
class ChannelReport:
    """Validity and entanglement-breaking summary for one channel."""

    is_tp: bool
    tp_residual: float
    is_cp: bool
    cp_residual: float
    choi_rank: int
    ppt: bool
    eb_certificate: tuple | None
    verdict: str  # "EB", "NOT-EB" or "UNDECIDED"


def partial_transpose(J: np.ndarray, dim_a: int, dim_b: int) -> np.ndarray:
    """Partial transpose over the first tensor factor."""
    T = J.reshape(dim_a, dim_b, dim_a, dim_b)
    return np.ascontiguousarray(T.transpose(2, 1, 0, 3)).reshape(J.shape)


def partial_trace_second(J: np.ndarray, dim_a: int, dim_b: int) -> np.ndarray:
    T = J.reshape(dim_a, dim_b, dim_a, dim_b)
    return np.einsum("iaja->ij", T)


def eb_check(phi: KrausMap, tol: Tolerance = DEFAULT_TOL) -> ChannelReport:
    """Three-valued entanglement-breaking report.

    EB when a validated rank-one Kraus form is available (attached, via an
    attached Holevo form, or because the minimal Kraus family is rank
    one); NOT-EB when the Choi matrix fails the PPT necessary condition;
    UNDECIDED otherwise.
    """
    J = phi.choi()
    evals = np.linalg.eigvalsh(J)
    cp_resid = float(max(0.0, -evals[0]))
    is_cp = evals[0] >= -tol.abs * max(1.0, evals[-1])
    tp_resid = phi.tp_residual()
    is_tp = tp_resid <= tol.abs * 100
    rank = phi.choi_rank(tol)
    pt = partial_transpose(J, phi.dim_in, phi.dim_out)
    pt_evals = np.linalg.eigvalsh((pt + dagger(pt)) / 2)
    ppt = bool(pt_evals[0] >= -tol.abs * 100 * max(1.0, pt_evals[-1]))

    certificate = None
    if isinstance(phi, Channel) and phi.rank_one is not None:
        certificate = phi.rank_one
    elif isinstance(phi, Channel) and phi.holevo is not None:
        certificate = holevo_to_kraus(phi.holevo, tol).rank_one
    else:
        certificate = _rank_one_pairs(phi.minimal_kraus(tol), tol)

    if certificate is not None:
        verdict = "EB"
    elif not ppt:
        verdict = "NOT-EB"
    else:
        verdict = "UNDECIDED"
    return ChannelReport(is_tp=is_tp, tp_residual=tp_resid, is_cp=is_cp,
                         cp_residual=cp_resid, choi_rank=rank, ppt=ppt,
                         eb_certificate=certificate, verdict=verdict)


# ---------------------------------------------------------------------------
# built-in channels
# ---------------------------------------------------------------------------

def identity_channel(n: int) -> Channel:
    return Channel([np.eye(n, dtype=np.complex128)])


def depolarizing(n: int) -> Channel:
    """Completely depolarizing channel X -> tr(X) I/n.

    Kraus operators are the matrix units E_ij / sqrt(n) in row-major
    (i, j) order; the Holevo form {I, I/n} is attached, as is the
    rank-one form v = e_i, w = e_j / sqrt(n).
    """
    kraus = []
    pairs = []
    eye = np.eye(n, dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            kraus.append(np.outer(eye[:, i], eye[:, j]) / np.sqrt(n))
            pairs.append((eye[:, i].copy(), eye[:, j] / np.sqrt(n)))
    holevo = HolevoForm((eye.copy(),), (eye / n,))
    return Channel(kraus, holevo=holevo, rank_one=tuple(pairs))


def werner_holevo3() -> Channel:
    """The channel X -> (tr(X) I - X^T)/2 on 3 x 3 matrices.

    Kraus operators are the antisymmetric units (K_i)_{jk} = eps_{ijk} /
    sqrt(2); with this sign convention the canonical complement equals
    the channel itself exactly.
    """
    kraus = []
    for i in range(3):
        K = np.zeros((3, 3), dtype=np.complex128)
        j, k = (i + 1) % 3, (i + 2) % 3
        K[j, k] = 1.0 / np.sqrt(2.0)
        K[k, j] = -1.0 / np.sqrt(2.0)
        kraus.append(K)
    return Channel(kraus)


def spontaneous_emission(n: int) -> Channel:
    """Channel sending every density matrix to e_1 e_1*."""
    eye = np.eye(n, dtype=np.complex128)
    kraus = [np.outer(eye[:, 0], eye[:, k]) for k in range(n)]
    pairs = tuple((eye[:, 0].copy(), eye[:, k].copy()) for k in range(n))
    return Channel(kraus, rank_one=pairs)


def biunitary(U, p: float) -> Channel:
    """Unitary noise channel X -> (1-p) X + p U X U*."""
    U = oc.as_complex_matrix(U)
    n = U.shape[0]
    if frob(dagger(U) @ U - np.eye(n)) > 1e-9:
        raise ValidationError("biunitary requires a unitary matrix")
    if not 0.0 < p < 1.0:
        raise ValidationError(f"probability must lie in (0, 1), got {p}")
    return Channel([np.sqrt(1.0 - p) * np.eye(n), np.sqrt(p) * U])


def mixed_unitary_channel(probs, unitaries, tol: Tolerance = DEFAULT_TOL) -> Channel:
    """Channel sum_i p_i U_i X U_i* from an explicit convex mixture."""
    probs = np.asarray(probs, dtype=float)
    if np.any(probs <= 0) or abs(probs.sum() - 1.0) > tol.abs * 100:
        raise ValidationError("probabilities must be positive and sum to one")
    kraus = []
    for p, U in zip(probs, unitaries):
        U = oc.as_complex_matrix(U)
        if frob(dagger(U) @ U - np.eye(U.shape[0])) > tol.abs * 100:
            raise ValidationError("mixture contains a non-unitary matrix")
        kraus.append(np.sqrt(p) * U)
    return Channel(kraus, tol=tol)


def haar_unitary(n: int, rng) -> np.ndarray:
    """Haar-distributed unitary via phase-fixed QR of a Ginibre matrix."""
    G = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    Q, R = np.linalg.qr(G)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_density(n: int, rng) -> np.ndarray:
    """Wishart density matrix G G* / tr(G G*)."""
    G = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = G @ dagger(G)
    return rho / np.trace(rho).real


def random_channel(n: int, d: int, rng) -> Channel:
    """Random channel with d Kraus operators from a Haar Stinespring isometry."""
    G = rng.normal(size=(n * d, n)) + 1j * rng.normal(size=(n * d, n))
    Q, _ = np.linalg.qr(G)
    return Channel([Q[i * n:(i + 1) * n, :] for i in range(d)])


_PAULI_BY_NAME = {"x": oc.PAULI_X, "y": oc.PAULI_Y, "z": oc.PAULI_Z}


def builtin_channel(name: str) -> Channel:
    """Named example channels: ``depolarizing(n)``/``depolarizingN``,
    ``werner_holevo3``, ``spontaneous_emission(n)``, ``identity(n)`` and
    ``biunitary(P, p)`` with a Pauli name for P."""
    text = name.strip().lower().replace(" ", "")
    m = re.fullmatch(r"(depolarizing|spontaneous_emission|identity)\(?(\d+)\)?", text)
    if m:
        n = int(m.group(2))
        if n < 1:
            raise ParseError(f"dimension must be positive in {name!r}")
        maker = {"depolarizing": depolarizing,
                 "spontaneous_emission": spontaneous_emission,
                 "identity": identity_channel}[m.group(1)]
        return maker(n)
    if text in ("werner_holevo3", "werner_holevo(3)"):
        return werner_holevo3()
    m = re.fullmatch(r"biunitary\(([xyz]),([0-9.eE+-]+)\)", text)
    if m:
        try:
            p = float(m.group(2))
        except ValueError as exc:
            raise ParseError(f"bad probability in {name!r}") from exc
        return biunitary(_PAULI_BY_NAME[m.group(1)], p)
    raise ParseError(f"unknown builtin channel {name!r}")
