"""JSON wire formats.

Complex scalars serialize as two-element arrays ``[re, im]``; matrices as
row-major nested arrays of those pairs.  All floats are rounded to 12
significant digits before emission so reports diff deterministically.
"""

from __future__ import annotations

import json

import numpy as np

from . import operator_core as oc
from .channel import Channel, HolevoForm
from .errors import ParseError
from .operator_core import DEFAULT_TOL, OperatorSubspace, Tolerance


def matrix_to_json(A) -> list:
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim == 1:
        A = A.reshape(-1, 1)
    return [[[float(x.real), float(x.imag)] for x in row] for row in A]


def matrix_from_json(obj) -> np.ndarray:
    try:
        rows = []
        for row in obj:
            rows.append([complex(float(entry[0]), float(entry[1])) for entry in row])
        M = np.array(rows, dtype=np.complex128)
    except (TypeError, ValueError, IndexError) as exc:
        raise ParseError(f"malformed matrix: {exc}") from exc
    if M.ndim != 2 or M.size == 0:
        raise ParseError("matrix must be a non-empty 2-d array")
    return M


def channel_to_json(phi: Channel) -> dict:
    out = {"n_in": phi.dim_in, "n_out": phi.dim_out,
           "kraus": [matrix_to_json(K) for K in phi.kraus]}
    if phi.holevo is not None:
        out["holevo"] = {"F": [matrix_to_json(F) for F in phi.holevo.povm],
                         "R": [matrix_to_json(R) for R in phi.holevo.states]}
    return out


def channel_from_json(obj, tol: Tolerance = DEFAULT_TOL) -> Channel:
    if not isinstance(obj, dict):
        raise ParseError("channel JSON must be an object")
    if "kraus" in obj:
        kraus = [matrix_from_json(K) for K in obj["kraus"]]
        holevo = None
        if "holevo" in obj:
            holevo = _holevo_from_json(obj["holevo"])
        phi = Channel(kraus, holevo=holevo, tol=tol)
        if "n_in" in obj and int(obj["n_in"]) != phi.dim_in:
            raise ParseError("n_in does not match the Kraus operators")
        if "n_out" in obj and int(obj["n_out"]) != phi.dim_out:
            raise ParseError("n_out does not match the Kraus operators")
        return phi
    if "holevo" in obj:
        from .channel import holevo_to_kraus

        return holevo_to_kraus(_holevo_from_json(obj["holevo"]), tol)
    raise ParseError("channel JSON needs a 'kraus' or 'holevo' entry")


def _holevo_from_json(obj) -> HolevoForm:
    try:
        povm = tuple(matrix_from_json(F) for F in obj["F"])
        states = tuple(matrix_from_json(R) for R in obj["R"])
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed Holevo form: {exc}") from exc
    return HolevoForm(povm, states)


def subspace_to_json(S: OperatorSubspace) -> dict:
    return {"n": S.ambient_dim,
            "basis": [matrix_to_json(B) for B in S.basis],
            "self_adjoint": S.self_adjoint,
            "traceless": S.traceless}


def subspace_from_json(obj, tol: Tolerance = DEFAULT_TOL) -> OperatorSubspace:
    if not isinstance(obj, dict) or "n" not in obj or "basis" not in obj:
        raise ParseError("subspace JSON needs 'n' and 'basis' entries")
    n = int(obj["n"])
    mats = [matrix_from_json(B) for B in obj["basis"]]
    for M in mats:
        if M.shape != (n, n):
            raise ParseError(f"basis element of shape {M.shape} in ambient dimension {n}")
    if not mats:
        return oc.zero_subspace(n)
    return oc.orthonormalize(mats, tol)


def round12(value):
    """Round floats (recursively) to 12 significant digits."""
    if isinstance(value, bool):
        return value
    if isinstance(value, (float, np.floating)):
        return float(f"{float(value):.12g}")
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, complex):
        return [round12(value.real), round12(value.imag)]
    if isinstance(value, dict):
        return {k: round12(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [round12(v) for v in value]
    return value


def canonical_json(obj) -> str:
    return json.dumps(round12(obj), indent=2)
