# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: frame orthonormalization and nearest-cell search."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def orthonormalize(frames):
    """Batched Gram-Schmidt (two passes) with positive R diagonal."""
    cdef const double[:, :, ::1] f = np.ascontiguousarray(frames, dtype=np.float64)
    cdef Py_ssize_t n_pts = f.shape[0], n = f.shape[1], m = f.shape[2]
    q_arr = np.array(frames, dtype=np.float64, order='C', copy=True)
    cdef double[:, :, ::1] q = q_arr
    rmin_arr = np.empty(n_pts)
    cdef double[::1] rmin = rmin_arr
    cdef Py_ssize_t p, j, k, i, rep
    cdef double dot, nrm, orig, ratio
    with nogil:
        for p in range(n_pts):
            rmin[p] = 1e300
            for j in range(m):
                orig = 0.0
                for i in range(n):
                    orig += q[p, i, j] * q[p, i, j]
                orig = sqrt(orig)
                for rep in range(2):
                    for k in range(j):
                        dot = 0.0
                        for i in range(n):
                            dot += q[p, i, k] * q[p, i, j]
                        for i in range(n):
                            q[p, i, j] -= dot * q[p, i, k]
                nrm = 0.0
                for i in range(n):
                    nrm += q[p, i, j] * q[p, i, j]
                nrm = sqrt(nrm)
                ratio = nrm / orig if orig > 0 else 0.0
                if ratio < rmin[p]:
                    rmin[p] = ratio
                if nrm > 0:
                    for i in range(n):
                        q[p, i, j] /= nrm
    return q_arr, rmin_arr


def projector_features(frames, dims):
    cdef const double[:, :, ::1] f = np.ascontiguousarray(frames, dtype=np.float64)
    cdef Py_ssize_t n_pts = f.shape[0], n = f.shape[1]
    cdef Py_ssize_t nb = len(dims)
    cdef const cnp.int64_t[::1] dv = np.asarray(list(dims), dtype=np.int64).reshape(-1)
    out_arr = np.empty((n_pts, nb, n * n))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t p, b, i, j, c
    cdef double s
    with nogil:
        for p in range(n_pts):
            for b in range(nb):
                for i in range(n):
                    for j in range(i, n):
                        s = 0.0
                        for c in range(dv[b]):
                            s += f[p, i, c] * f[p, j, c]
                        out[p, b, i * n + j] = s
                        out[p, b, j * n + i] = s
    return out_arr


cdef inline double _sqdist(const double[:, :, ::1] a, Py_ssize_t p, const double[:, :, ::1] c,
                           Py_ssize_t m, double bound) noexcept nogil:
    cdef Py_ssize_t b, t
    cdef double best = 0.0, s, d
    for b in range(a.shape[1]):
        s = 0.0
        for t in range(a.shape[2]):
            d = a[p, b, t] - c[m, b, t]
            s += d * d
        if s > best:
            best = s
            if best > bound:
                return best
    return best


def nearest(feat_pts, feat_centers):
    cdef const double[:, :, ::1] a = np.ascontiguousarray(feat_pts, dtype=np.float64)
    cdef const double[:, :, ::1] c = np.ascontiguousarray(feat_centers, dtype=np.float64)
    cdef Py_ssize_t n_pts = a.shape[0], n_c = c.shape[0], p, m, bi
    idx_arr = np.empty(n_pts, dtype=np.int64)
    dist_arr = np.empty(n_pts)
    cdef cnp.int64_t[::1] idx = idx_arr
    cdef double[::1] dist = dist_arr
    cdef double best, s
    with nogil:
        for p in range(n_pts):
            best = 1e300
            bi = 0
            for m in range(n_c):
                s = _sqdist(a, p, c, m, best)
                if s < best:
                    best = s
                    bi = m
            idx[p] = bi
            dist[p] = sqrt(best)
    return idx_arr, dist_arr


def within(feat_pts, feat_centers, double radius):
    cdef const double[:, :, ::1] a = np.ascontiguousarray(feat_pts, dtype=np.float64)
    cdef const double[:, :, ::1] c = np.ascontiguousarray(feat_centers, dtype=np.float64)
    cdef Py_ssize_t n_pts = a.shape[0], n_c = c.shape[0], p, m
    cdef double r2 = radius * radius
    indptr_arr = np.zeros(n_pts + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] indptr = indptr_arr
    # first pass counts, second pass fills
    with nogil:
        for p in range(n_pts):
            for m in range(n_c):
                if _sqdist(a, p, c, m, r2) <= r2:
                    indptr[p + 1] += 1
    indptr_arr = np.cumsum(indptr_arr)
    indptr = indptr_arr
    cols_arr = np.empty(indptr_arr[-1], dtype=np.int64)
    cdef cnp.int64_t[::1] cols = cols_arr
    cdef Py_ssize_t pos
    with nogil:
        for p in range(n_pts):
            pos = indptr[p]
            for m in range(n_c):
                if _sqdist(a, p, c, m, r2) <= r2:
                    cols[pos] = m
                    pos += 1
    return indptr_arr, cols_arr


def pairwise(feat_a, feat_b):
    cdef const double[:, :, ::1] a = np.ascontiguousarray(feat_a, dtype=np.float64)
    cdef const double[:, :, ::1] b = np.ascontiguousarray(feat_b, dtype=np.float64)
    out_arr = np.empty((a.shape[0], b.shape[0]))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(a.shape[0]):
            for j in range(b.shape[0]):
                out[i, j] = sqrt(_sqdist(a, i, b, j, 1e300))
    return out_arr
