# cython: language_level=3
"""Compiled inner loops: Matérn-3/2 cross-covariance, dominance filtering, 2-D sweep."""
import numpy as np

cimport numpy as cnp
from libc.math cimport exp, sqrt

cnp.import_array()

cdef double SQRT3 = 1.7320508075688772


def matern32_cross(const double[:, ::1] A, const double[:, ::1] B,
                   double variance, double lengthscale):
    cdef Py_ssize_t n = A.shape[0], m = B.shape[0], d = A.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc, diff, s
    cdef double scale = SQRT3 / lengthscale
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] K = out
    with nogil:
        for i in range(n):
            for j in range(m):
                acc = 0.0
                for k in range(d):
                    diff = A[i, k] - B[j, k]
                    acc = acc + diff * diff
                s = scale * sqrt(acc)
                K[i, j] = variance * (1.0 + s) * exp(-s)
    return out


def nondominated_mask(const double[:, ::1] F):
    cdef Py_ssize_t n = F.shape[0], K = F.shape[1]
    cdef Py_ssize_t i, j, k
    cdef bint all_le, any_lt
    mask = np.ones(n, dtype=np.uint8)
    cdef unsigned char[::1] keep = mask
    with nogil:
        for i in range(n):
            for j in range(n):
                if j == i:
                    continue
                all_le = True
                any_lt = False
                for k in range(K):
                    if F[j, k] > F[i, k]:
                        all_le = False
                        break
                    if F[j, k] < F[i, k]:
                        any_lt = True
                if all_le and any_lt:
                    keep[i] = 0
                    break
    return mask.astype(bool)


def hypervolume_2d(const double[:, ::1] P, double r0, double r1):
    """P must be sorted by the first column (ties by the second)."""
    cdef Py_ssize_t n = P.shape[0], i
    cdef double hv = 0.0, best = r1, prev_x = 0.0
    cdef Py_ssize_t last = -1
    # sweep left to right; a point counts only if it lowers the running f2 floor
    with nogil:
        for i in range(n):
            if P[i, 1] < best:
                if last >= 0:
                    hv = hv + (P[i, 0] - prev_x) * (r1 - best)
                prev_x = P[i, 0]
                best = P[i, 1]
                last = i
        if last >= 0:
            hv = hv + (r0 - prev_x) * (r1 - best)
    return hv
