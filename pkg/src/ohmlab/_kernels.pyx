# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. ``ohmlab._fallback`` mirrors every function here in numpy."""

from libc.math cimport sqrt


def pcg(const long[::1] indptr, const long[::1] indices, const double[::1] data,
        const double[::1] diag, const double[::1] b, double[::1] x,
        double tol, long maxiter):
    """Jacobi-preconditioned CG on a symmetric positive definite CSR matrix.

    ``x`` holds the initial guess and is overwritten. Stops when
    ``||b - A x|| <= tol ||b||``. Returns ``(iterations, relative_residual)``.
    """
    cdef Py_ssize_t n = b.shape[0]
    cdef Py_ssize_t i, j
    cdef long it = 0
    cdef double bnorm = 0.0, rz, rz_new, pq, alpha, beta, rr, s
    cdef double[::1] r = b.copy()
    cdef double[::1] z = b.copy()
    cdef double[::1] p = b.copy()
    cdef double[::1] q = b.copy()
    for i in range(n):
        bnorm += b[i] * b[i]
    bnorm = sqrt(bnorm)
    if bnorm == 0.0:
        x[:] = 0.0
        return 0, 0.0
    with nogil:
        rr = 0.0
        rz = 0.0
        for i in range(n):
            s = 0.0
            for j in range(indptr[i], indptr[i + 1]):
                s = s + data[j] * x[indices[j]]
            r[i] = b[i] - s
            z[i] = r[i] / diag[i]
            p[i] = z[i]
            rz += r[i] * z[i]
            rr += r[i] * r[i]
        while sqrt(rr) > tol * bnorm and it < maxiter:
            pq = 0.0
            for i in range(n):
                s = 0.0
                for j in range(indptr[i], indptr[i + 1]):
                    s = s + data[j] * p[indices[j]]
                q[i] = s
                pq += p[i] * s
            alpha = rz / pq
            rr = 0.0
            rz_new = 0.0
            for i in range(n):
                x[i] += alpha * p[i]
                r[i] -= alpha * q[i]
                z[i] = r[i] / diag[i]
                rz_new += r[i] * z[i]
                rr += r[i] * r[i]
            beta = rz_new / rz
            rz = rz_new
            for i in range(n):
                p[i] = z[i] + beta * p[i]
            it += 1
        # true residual, not the recursively updated one
        rr = 0.0
        for i in range(n):
            s = 0.0
            for j in range(indptr[i], indptr[i + 1]):
                s = s + data[j] * x[indices[j]]
            rr += (b[i] - s) * (b[i] - s)
    return it, sqrt(rr) / bnorm


cdef int _cholesky_solve(double[:, ::1] m, double[::1] y, Py_ssize_t n) noexcept nogil:
    """In-place Cholesky of the leading n x n block of ``m``, then solve m y' = y."""
    cdef Py_ssize_t i, j, k
    cdef double s
    for j in range(n):
        s = m[j, j]
        for k in range(j):
            s -= m[j, k] * m[j, k]
        if s <= 0.0:
            return -1
        m[j, j] = sqrt(s)
        for i in range(j + 1, n):
            s = m[i, j]
            for k in range(j):
                s -= m[i, k] * m[j, k]
            m[i, j] = s / m[j, j]
    for i in range(n):
        s = y[i]
        for k in range(i):
            s -= m[i, k] * y[k]
        y[i] = s / m[i, i]
    for i in range(n - 1, -1, -1):
        s = y[i]
        for k in range(i + 1, n):
            s -= m[k, i] * y[k]
        y[i] = s / m[i, i]
    return 0


def enumerate_resistance(const long[::1] cu, const long[::1] cv, long nv, long s, long t,
                         double a, double b, double[::1] out_f, double[:, ::1] out_theta=None):
    """Effective resistance between ``s`` and ``t`` for every environment in {a, b}^E.

    Environment ``mask`` has ``r_k = b`` iff bit ``k`` is set. The graph must be
    connected. When ``out_theta`` is given, row ``mask`` receives the unit
    current along each edge's stored orientation.
    """
    cdef Py_ssize_t m = cu.shape[0]
    cdef Py_ssize_t n = nv - 1
    cdef long total = 1 << m
    cdef long mask
    cdef Py_ssize_t k, i, j, ui, vi
    cdef double c, xu, xv
    cdef bint want_theta = out_theta is not None
    cdef double[:, ::1] lap
    cdef double[::1] y
    import numpy as np
    if n < 1:
        raise ValueError("need at least two vertices")
    lap = np.zeros((n, n))
    y = np.zeros(n)
    redv = np.empty(nv, dtype=np.int64)
    for i in range(nv):
        redv[i] = -1 if i == t else (i if i < t else i - 1)
    cdef long[::1] rv = redv
    cdef long sr = rv[s]
    cdef int status = 0
    with nogil:
        for mask in range(total):
            for i in range(n):
                y[i] = 0.0
                for j in range(n):
                    lap[i, j] = 0.0
            for k in range(m):
                c = 1.0 / (b if (mask >> k) & 1 else a)
                ui = rv[cu[k]]
                vi = rv[cv[k]]
                if ui >= 0:
                    lap[ui, ui] += c
                if vi >= 0:
                    lap[vi, vi] += c
                if ui >= 0 and vi >= 0:
                    lap[ui, vi] -= c
                    lap[vi, ui] -= c
            y[sr] = 1.0
            if _cholesky_solve(lap, y, n) != 0:
                status = -1
                break
            out_f[mask] = y[sr]
            if want_theta:
                for k in range(m):
                    c = 1.0 / (b if (mask >> k) & 1 else a)
                    ui = rv[cu[k]]
                    vi = rv[cv[k]]
                    xu = y[ui] if ui >= 0 else 0.0
                    xv = y[vi] if vi >= 0 else 0.0
                    out_theta[mask, k] = (xu - xv) * c
    if status != 0:
        raise ArithmeticError("Laplacian not positive definite: graph disconnected?")
