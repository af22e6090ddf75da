# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled pair-quadrature kernels; same contract as the numpy fallback."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef cnp.intp_t idx_t


def pair_apply(const idx_t[::1] rows, const double[::1] w,
               const idx_t[:, ::1] pidx, const double[:, ::1] pcoef,
               const idx_t[:, ::1] qidx, const double[:, ::1] qcoef,
               const double[::1] f, const double[::1] g, Py_ssize_t n):
    cdef Py_ssize_t p, k, npairs = rows.shape[0]
    cdef double pf, qf, pg, qg
    out = np.zeros(n)
    cdef double[::1] o = out
    with nogil:
        for p in range(npairs):
            pf = 0.0
            qf = 0.0
            pg = 0.0
            qg = 0.0
            for k in range(4):
                pf = pf + pcoef[p, k] * f[pidx[p, k]]
                qf = qf + qcoef[p, k] * f[qidx[p, k]]
                pg = pg + pcoef[p, k] * g[pidx[p, k]]
                qg = qg + qcoef[p, k] * g[qidx[p, k]]
            o[rows[p]] += w[p] * (pf * qg + pg * qf)
    return out


def pair_jacobian(const idx_t[::1] rows, const double[::1] w,
                  const idx_t[:, ::1] pidx, const double[:, ::1] pcoef,
                  const idx_t[:, ::1] qidx, const double[:, ::1] qcoef,
                  const double[::1] g, Py_ssize_t n):
    cdef Py_ssize_t p, k, i, npairs = rows.shape[0]
    cdef double pg, qg
    out = np.zeros((n, n))
    cdef double[:, ::1] J = out
    with nogil:
        for p in range(npairs):
            pg = 0.0
            qg = 0.0
            for k in range(4):
                pg = pg + pcoef[p, k] * g[pidx[p, k]]
                qg = qg + qcoef[p, k] * g[qidx[p, k]]
            i = rows[p]
            for k in range(4):
                J[i, qidx[p, k]] += w[p] * pg * qcoef[p, k]
                J[i, pidx[p, k]] += w[p] * qg * pcoef[p, k]
    return out
