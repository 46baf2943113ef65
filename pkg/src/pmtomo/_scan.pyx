# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled L1 similarity scan.

For every admissible, non-skipped template shift the similarity
C = 1 - sum|test - tmpl| / sum(B_test + B_tmpl) is accumulated in plain
C order over the template support (k innermost), one double accumulator
per sum, so results are bit-identical to a naive scalar evaluation.
"""

from cython.parallel cimport prange
from libc.math cimport fabs


def scan(double[:, :, ::1] test, double[:, :, ::1] tmpl,
         unsigned char[:, :, ::1] skip, int cx, int cy, int cz,
         int mode, double[:, :, ::1] out, int threads):
    """Fill `out` with similarities; skipped/inadmissible entries untouched.

    mode 0 compares raw (nonnegative) values with denominator t + p;
    mode 1 compares signed values with denominator |t| + |p|.
    Shift (i, j, k) places the template center voxel (cx, cy, cz) on test
    voxel (i, j, k).
    """
    cdef Py_ssize_t nx = test.shape[0], ny = test.shape[1], nz = test.shape[2]
    cdef Py_ssize_t wx = tmpl.shape[0], wy = tmpl.shape[1], wz = tmpl.shape[2]
    cdef Py_ssize_t i_lo = cx, i_hi = nx - wx + cx
    cdef Py_ssize_t j_lo = cy, j_hi = ny - wy + cy
    cdef Py_ssize_t k_lo = cz, k_hi = nz - wz + cz
    cdef Py_ssize_t i, j, k, a, b, c, ti, tj, tk
    cdef double num, den, t, p

    if threads < 1:
        threads = 1

    for i in prange(i_lo, i_hi + 1, nogil=True, schedule="static",
                    num_threads=threads):
        for j in range(j_lo, j_hi + 1):
            for k in range(k_lo, k_hi + 1):
                if skip[i, j, k]:
                    continue
                num = 0.0
                den = 0.0
                ti = i - cx
                tj = j - cy
                tk = k - cz
                if mode == 0:
                    for a in range(wx):
                        for b in range(wy):
                            for c in range(wz):
                                t = test[ti + a, tj + b, tk + c]
                                p = tmpl[a, b, c]
                                num = num + fabs(t - p)
                                den = den + (t + p)
                else:
                    for a in range(wx):
                        for b in range(wy):
                            for c in range(wz):
                                t = test[ti + a, tj + b, tk + c]
                                p = tmpl[a, b, c]
                                num = num + fabs(t - p)
                                den = den + (fabs(t) + fabs(p))
                if den == 0.0:
                    out[i, j, k] = 1.0
                else:
                    out[i, j, k] = 1.0 - num / den
