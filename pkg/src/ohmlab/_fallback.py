"""Pure-numpy twins of the compiled kernels in ``_kernels.pyx``.

Signatures and results match the compiled versions; only speed differs.
"""
from __future__ import annotations

import numpy as np

ENUM_CHUNK = 4096


def pcg(indptr, indices, data, diag, b, x, tol, maxiter):
    """Jacobi-preconditioned CG on a symmetric positive definite CSR matrix.

    ``x`` holds the initial guess and is overwritten. Stops when
    ``||b - A x|| <= tol ||b||``. Returns ``(iterations, relative_residual)``.
    """
    from scipy.sparse import csr_matrix

    n = b.shape[0]
    A = csr_matrix((data, indices, indptr), shape=(n, n))
    bnorm = np.sqrt(b @ b)
    if bnorm == 0.0:
        x[:] = 0.0
        return 0, 0.0
    r = b - A @ x
    z = r / diag
    p = z.copy()
    rz = r @ z
    rr = r @ r
    it = 0
    while np.sqrt(rr) > tol * bnorm and it < maxiter:
        q = A @ p
        alpha = rz / (p @ q)
        x += alpha * p
        r -= alpha * q
        z = r / diag
        rz_new = r @ z
        rr = r @ r
        p = z + (rz_new / rz) * p
        rz = rz_new
        it += 1
    res = b - A @ x
    return it, float(np.sqrt(res @ res) / bnorm)


def enumerate_resistance(cu, cv, nv, s, t, a, b, out_f, out_theta=None):
    """Effective resistance between ``s`` and ``t`` for every environment in {a, b}^E.

    Environment ``mask`` has ``r_k = b`` iff bit ``k`` is set. The graph must be
    connected. When ``out_theta`` is given, row ``mask`` receives the unit
    current along each edge's stored orientation.
    """
    m = cu.shape[0]
    n = nv - 1
    if n < 1:
        raise ValueError("need at least two vertices")
    keep = np.arange(nv) != t
    red = np.cumsum(keep) - 1
    red[t] = -1
    # signed incidence restricted to non-sink vertices: B[k, i]
    inc = np.zeros((m, n))
    for k in range(m):
        if red[cu[k]] >= 0:
            inc[k, red[cu[k]]] += 1.0
        if red[cv[k]] >= 0:
            inc[k, red[cv[k]]] -= 1.0
    sr = red[s]
    rhs = np.zeros(n)
    rhs[sr] = 1.0
    total = 1 << m
    bits = np.arange(m)
    for start in range(0, total, ENUM_CHUNK):
        masks = np.arange(start, min(total, start + ENUM_CHUNK))
        r = np.where((masks[:, None] >> bits) & 1, b, a)
        cond = 1.0 / r
        lap = np.einsum("ki,ck,kj->cij", inc, cond, inc)
        try:
            x = np.linalg.solve(lap, np.broadcast_to(rhs, (len(masks), n))[..., None])[..., 0]
        except np.linalg.LinAlgError:
            raise ArithmeticError("Laplacian not positive definite: graph disconnected?") from None
        out_f[masks] = x[:, sr]
        if out_theta is not None:
            out_theta[masks] = (x @ inc.T) * cond
