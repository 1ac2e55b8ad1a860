# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-line pair sums.

Along a line, the 1-D interaction of two sets with disjoint interiors is
``sum_ij a_i b_j |p_i - q_j|^(1-s) / (s (1-s))`` over the jump points of the
two indicators (jump weights +-1).  The kernels below evaluate these forms for
many lines at once; the pure numpy twin lives in ``_fallback.py``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, fabs, isnan
from libc.stdlib cimport malloc, free

cnp.import_array()


cdef inline double _form(double* p, double* a, Py_ssize_t na,
                         double* q, double* b, Py_ssize_t nb, double e) noexcept nogil:
    cdef double acc = 0.0, r
    cdef Py_ssize_t i, j
    for i in range(na):
        for j in range(nb):
            r = fabs(p[i] - q[j])
            if r > 0.0:
                acc += a[i] * b[j] * exp(e * log(r))
    return acc


def perimeter_forms(const double[:] t, const long long[:] ptr, const unsigned char[:] start,
                    const double[:] w1, const double[:] w2, const double[:] s_values,
                    bint with_nonlocal=True):
    """Per-line local and nonlocal parts of the s-perimeter relative to (w1, w2)."""
    cdef Py_ssize_t k = start.shape[0], ns = s_values.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] loc = np.zeros((k, ns))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] non = np.zeros((k, ns))
    cdef double[:, :] L = loc
    cdef double[:, :] N = non
    cdef Py_ssize_t mmax = 0, i, j, m, na, si
    for i in range(k):
        if ptr[i + 1] - ptr[i] > mmax:
            mmax = ptr[i + 1] - ptr[i]
    cdef double* ep = <double*> malloc((mmax + 1) * sizeof(double))
    cdef double* ew = <double*> malloc((mmax + 1) * sizeof(double))
    cdef double* ap = <double*> malloc((mmax + 3) * sizeof(double))
    cdef double* aw = <double*> malloc((mmax + 3) * sizeof(double))
    cdef double gp[2]
    cdef double gw[2]
    cdef double a, b, e, c, qaa, qag, qae, qeg
    cdef int st, st1, st2
    gw[0] = 1.0
    gw[1] = -1.0
    try:
        with nogil:
            for i in range(k):
                a = w1[i]
                b = w2[i]
                if isnan(a) or isnan(b) or not (b > a):
                    continue
                m = ptr[i + 1] - ptr[i]
                st = start[i]
                st1 = st
                na = 1
                for j in range(m):
                    ep[j] = t[ptr[i] + j]
                    ew[j] = -1.0 if st else 1.0
                    if ep[j] < a:
                        st1 = 1 - st1
                    st = 1 - st
                st = start[i]
                st2 = st
                for j in range(m):
                    if ep[j] < b:
                        st2 = 1 - st2
                ap[0] = a
                aw[0] = <double> st1
                for j in range(m):
                    if ep[j] > a and ep[j] < b:
                        ap[na] = ep[j]
                        aw[na] = ew[j]
                        na += 1
                ap[na] = b
                aw[na] = -(<double> st2)
                na += 1
                gp[0] = a
                gp[1] = b
                for si in range(ns):
                    e = 1.0 - s_values[si]
                    c = 1.0 / (s_values[si] * e)
                    qaa = _form(ap, aw, na, ap, aw, na, e)
                    qag = _form(ap, aw, na, gp, gw, 2, e)
                    L[i, si] = c * (qag - qaa)
                    if with_nonlocal:
                        qae = _form(ap, aw, na, ep, ew, m, e)
                        qeg = _form(ep, ew, m, gp, gw, 2, e)
                        N[i, si] = c * (-2.0 * qae - 2.0 * qag + 2.0 * qaa + qeg)
    finally:
        free(ep)
        free(ew)
        free(ap)
        free(aw)
    return loc, non


def interaction_forms(const double[:] ta, const long long[:] pa, const unsigned char[:] sa,
                      const double[:] tb, const long long[:] pb, const unsigned char[:] sb,
                      double s):
    """Per-line 1-D interaction of two traces (jumps at infinity dropped)."""
    cdef Py_ssize_t k = sa.shape[0], i, j, ma, mb, mmax = 0
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(k)
    cdef double[:] O = out
    for i in range(k):
        if pa[i + 1] - pa[i] > mmax:
            mmax = pa[i + 1] - pa[i]
        if pb[i + 1] - pb[i] > mmax:
            mmax = pb[i + 1] - pb[i]
    cdef double* xa = <double*> malloc((mmax + 1) * sizeof(double))
    cdef double* wa = <double*> malloc((mmax + 1) * sizeof(double))
    cdef double* xb = <double*> malloc((mmax + 1) * sizeof(double))
    cdef double* wb = <double*> malloc((mmax + 1) * sizeof(double))
    cdef double e = 1.0 - s, c = 1.0 / (s * (1.0 - s))
    cdef int st
    try:
        with nogil:
            for i in range(k):
                ma = pa[i + 1] - pa[i]
                mb = pb[i + 1] - pb[i]
                if ma == 0 or mb == 0:
                    continue
                st = sa[i]
                for j in range(ma):
                    xa[j] = ta[pa[i] + j]
                    wa[j] = -1.0 if st else 1.0
                    st = 1 - st
                st = sb[i]
                for j in range(mb):
                    xb[j] = tb[pb[i] + j]
                    wb[j] = -1.0 if st else 1.0
                    st = 1 - st
                O[i] = c * _form(xa, wa, ma, xb, wb, mb, e)
    finally:
        free(xa)
        free(wa)
        free(xb)
        free(wb)
    return out
