"""Hot kernel: alternating projection between an operator subspace and the
rank-one PSD cone.

This is the inner loop of the mixed-unitary search and dominates its
runtime, so it is compiled with numba when available.  Set
``EBCHAN_NO_NUMBA=1`` (or ``NUMBA_DISABLE_JIT=1``) to force the pure-numpy
twin; both paths run the same statements.
"""

from __future__ import annotations

import os

import numpy as np


def _env_disables_numba() -> bool:
    if os.environ.get("EBCHAN_NO_NUMBA", "").strip() not in ("", "0"):
        return True
    if os.environ.get("NUMBA_DISABLE_JIT", "").strip() == "1":
        return True
    return False


def alt_project_rank_one(basis_flat, proj_cols, x0, max_iter=2000, step_tol=1e-10):
    """One alternating-projection run toward a rank-one PSD element.

    Parameters
    ----------
    basis_flat : (t, d*d) complex128
        Orthonormal Hermitian basis of the target subspace, flattened in
        C order.
    proj_cols : (d, f) complex128
        Orthonormal columns spanning the subspace the rank-one element's
        vector is restricted to (pass the identity for no restriction).
    x0 : (d, d) complex128
        Hermitian starting point.
    max_iter, step_tol :
        The run stops when successive cone iterates differ by at most
        ``step_tol`` in Frobenius norm.

    Returns
    -------
    w : (d,) complex128
        Vector of the final cone point (unnormalized; zero if the cone
        projection vanished).
    lam : float
        Weight of the final rank-one cone point.
    residual : float
        Frobenius distance between the final subspace projection and its
        cone projection.
    iterations : int
    """
    return _kernel()(np.ascontiguousarray(basis_flat, dtype=np.complex128),
                     np.ascontiguousarray(proj_cols, dtype=np.complex128),
                     np.ascontiguousarray(x0, dtype=np.complex128),
                     int(max_iter), float(step_tol))


def _alt_project_impl(basis_flat, proj_cols, x0, max_iter, step_tol):
    d = x0.shape[0]
    t = basis_flat.shape[0]
    f = proj_cols.shape[1]
    x = x0.copy()
    z = np.zeros((d, d), dtype=np.complex128)
    z_prev = np.zeros((d, d), dtype=np.complex128)
    y = np.zeros((d, d), dtype=np.complex128)
    w = np.zeros(d, dtype=np.complex128)
    lam = 0.0
    iters = 0
    for it in range(max_iter):
        iters = it + 1
        # project onto the subspace: real coefficients against the Hermitian basis
        xf = x.reshape(d * d)
        coef = basis_flat.conj() @ xf
        yf = basis_flat.T @ (coef.real + 0j * coef.real)
        y = yf.reshape(d, d)
        y = 0.5 * (y + y.conj().T)
        # project onto the rank-one PSD cone restricted to the free subspace
        yc = proj_cols.conj().T @ y @ proj_cols
        yc = 0.5 * (yc + yc.conj().T)
        evals, evecs = np.linalg.eigh(yc)
        lam = evals[f - 1]
        if lam <= 0.0:
            w = np.zeros(d, dtype=np.complex128)
            z = np.zeros((d, d), dtype=np.complex128)
        else:
            w = proj_cols @ evecs[:, f - 1]
            z = lam * (w.reshape(d, 1) @ w.conj().reshape(1, d))
        step = np.sqrt(np.sum(np.abs(z - z_prev) ** 2))
        for a in range(d):
            for b in range(d):
                z_prev[a, b] = z[a, b]
        x = z
        if it > 0 and step <= step_tol:
            break
    residual = np.sqrt(np.sum(np.abs(z - y) ** 2))
    return w, lam, residual, iters


_COMPILED = None
_BACKEND = None


def _kernel():
    global _COMPILED, _BACKEND
    if _COMPILED is not None:
        return _COMPILED
    if not _env_disables_numba():
        try:
            import numba

            _COMPILED = numba.njit(cache=True)(_alt_project_impl)
            # trigger compilation problems now rather than mid-search
            _COMPILED(np.eye(1, dtype=np.complex128).reshape(1, 1),
                      np.eye(1, dtype=np.complex128),
                      np.eye(1, dtype=np.complex128), 2, 1e-10)
            _BACKEND = "numba"
            return _COMPILED
        except Exception:  # pragma: no cover - numba missing or broken
            _COMPILED = None
    _COMPILED = _alt_project_impl
    _BACKEND = "numpy"
    return _COMPILED


def backend() -> str:
    """Which implementation the kernel dispatches to: 'numba' or 'numpy'."""
    _kernel()
    return _BACKEND
