# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled path stepping: the fast twin of ``_pykernels.run_paths_poly``.

The arithmetic here mirrors the NumPy fallback operation for operation
(same Philox block draws, same term-ordered polynomial drift with
repeated-multiplication powers, same step association, same bisection),
and the extension is compiled with -ffp-contract=off, so the two
backends return bit-identical samples.  See _pykernels for the rules.
"""

import numpy as np

from libc.math cimport fabs

DEF BLOCK = 1024
DEF MAXDIM = 4
DEF TOL = 1e-10
DEF MAXIT = 200


cdef double _poly_eval(const long long[:, ::1] E, const double[::1] C,
                       Py_ssize_t lo, Py_ssize_t hi,
                       const double* x, Py_ssize_t dim) noexcept nogil:
    cdef double acc = 0.0
    cdef double val
    cdef Py_ssize_t t, d
    cdef long long r, e
    for t in range(lo, hi):
        val = C[t]
        for d in range(dim):
            e = E[t, d]
            for r in range(e):
                val = val * x[d]
        acc = acc + val
    return acc


cdef double _gap(int kind, double a, double b,
                 const long long[:, ::1] Eg, const double[::1] Cg,
                 const double* x, Py_ssize_t dim) noexcept nogil:
    cdef double g1, g2
    if kind == 0:
        g1 = x[0] - a
        g2 = b - x[0]
        return g1 if g1 < g2 else g2
    return -_poly_eval(Eg, Cg, 0, Cg.shape[0], x, dim)


cdef bint _inside(int kind, double a, double b,
                  const long long[:, ::1] Eg, const double[::1] Cg,
                  const double* x, Py_ssize_t dim) noexcept nogil:
    if kind == 0:
        return x[0] > a and x[0] < b
    return _poly_eval(Eg, Cg, 0, Cg.shape[0], x, dim) < 0.0


cdef double _bisect(int kind, double a, double b,
                    const long long[:, ::1] Eg, const double[::1] Cg,
                    const double* xp, const double* xn,
                    double* out, Py_ssize_t dim) noexcept nogil:
    cdef double lo = 0.0
    cdef double hi = 1.0
    cdef double mid = 1.0
    cdef double xm[MAXDIM]
    cdef double gm
    cdef Py_ssize_t d
    cdef int it = 0
    for d in range(dim):
        xm[d] = xn[d]
    gm = _gap(kind, a, b, Eg, Cg, xm, dim)
    while fabs(gm) >= TOL and it < MAXIT:
        mid = 0.5 * (lo + hi)
        for d in range(dim):
            xm[d] = xp[d] + mid * (xn[d] - xp[d])
        gm = _gap(kind, a, b, Eg, Cg, xm, dim)
        if gm > 0.0:
            lo = mid
        else:
            hi = mid
        it += 1
    if kind == 0:
        xm[0] = a if fabs(xm[0] - a) <= fabs(xm[0] - b) else b
    for d in range(dim):
        out[d] = xm[d]
    return mid


cdef int _advance(const long long[:, ::1] E, const double[::1] C,
                  const long long[::1] off,
                  int kind, double a, double b,
                  const long long[:, ::1] Eg, const double[::1] Cg,
                  double* x, const double[:, ::1] xi, Py_ssize_t m,
                  double dt, double sqrt_hdt, long long k0,
                  double* out_pt, double* out_time,
                  Py_ssize_t dim) noexcept nogil:
    cdef double g[MAXDIM]
    cdef double xn[MAXDIM]
    cdef double theta
    cdef Py_ssize_t kk, d
    for kk in range(m):
        for d in range(dim):
            g[d] = _poly_eval(E, C, off[d], off[d + 1], x, dim)
        for d in range(dim):
            xn[d] = (x[d] - g[d] * dt) + sqrt_hdt * xi[kk, d]
        if not _inside(kind, a, b, Eg, Cg, xn, dim):
            theta = _bisect(kind, a, b, Eg, Cg, x, xn, out_pt, dim)
            out_time[0] = (<double> (k0 + kk) + theta) * dt
            return 1
        for d in range(dim):
            x[d] = xn[d]
    return 0


def run_paths_poly(tables, dom_spec, starts, double dt, double sqrt_hdt,
                   long long max_steps, seed, long long path_offset):
    """Drop-in replacement for _pykernels.run_paths_poly."""
    E_obj, C_obj, off_obj = tables
    cdef const long long[:, ::1] E = np.ascontiguousarray(E_obj, dtype=np.int64)
    cdef const double[::1] C = np.ascontiguousarray(C_obj, dtype=np.float64)
    cdef const long long[::1] off = np.ascontiguousarray(off_obj, dtype=np.int64)

    starts_arr = np.ascontiguousarray(starts, dtype=np.float64)
    cdef const double[:, ::1] sv = starts_arr
    cdef Py_ssize_t n = starts_arr.shape[0]
    cdef Py_ssize_t dim = starts_arr.shape[1]
    if dim > MAXDIM:
        raise ValueError(f"compiled kernel supports dim <= {MAXDIM}")

    cdef int kind
    cdef double a = 0.0, b = 0.0
    if dom_spec[0] == "interval":
        kind = 0
        a = dom_spec[1]
        b = dom_spec[2]
        Eg_obj = np.zeros((0, dim), dtype=np.int64)
        Cg_obj = np.zeros(0, dtype=np.float64)
    else:
        kind = 1
        Eg_obj = np.ascontiguousarray(dom_spec[1], dtype=np.int64)
        Cg_obj = np.ascontiguousarray(dom_spec[2], dtype=np.float64)
    cdef const long long[:, ::1] Eg = Eg_obj
    cdef const double[::1] Cg = Cg_obj

    out_pts = np.empty((n, dim), dtype=np.float64)
    out_t = np.full(n, max_steps * dt, dtype=np.float64)
    out_c = np.zeros(n, dtype=bool)
    cdef double[:, ::1] pv = out_pts
    cdef double[::1] tv = out_t

    cdef double x[MAXDIM]
    cdef double pt[MAXDIM]
    cdef double tme = 0.0
    cdef const double[:, ::1] xi
    cdef Py_ssize_t i, d, m
    cdef long long k
    cdef int done

    philox = np.random.Philox
    generator = np.random.Generator
    for i in range(n):
        gen = generator(philox(key=[seed, path_offset + i]))
        for d in range(dim):
            x[d] = sv[i, d]
        k = 0
        done = 0
        while k < max_steps:
            xi_obj = gen.standard_normal((BLOCK, dim))
            xi = xi_obj
            m = min(BLOCK, max_steps - k)
            with nogil:
                done = _advance(E, C, off, kind, a, b, Eg, Cg,
                                x, xi, m, dt, sqrt_hdt, k, pt, &tme, dim)
            if done:
                for d in range(dim):
                    pv[i, d] = pt[d]
                tv[i] = tme
                break
            k += m
        if not done:
            for d in range(dim):
                pv[i, d] = x[d]
            out_c[i] = True
    return out_pts, out_t, out_c
