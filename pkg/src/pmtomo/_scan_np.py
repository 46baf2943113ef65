"""Pure-numpy fallback for the L1 similarity scan.

Mirrors the compiled kernel bit for bit: per-element terms are formed
exactly as in the scalar loop and reduced with cumsum, whose left-to-right
accumulation matches the naive C-order summation of the compiled code.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def scan(test, tmpl, skip, cx, cy, cz, mode, out, threads):
    nx, ny, nz = test.shape
    wx, wy, wz = tmpl.shape
    i_lo, i_hi = cx, nx - wx + cx
    j_lo, j_hi = cy, ny - wy + cy
    k_lo, k_hi = cz, nz - wz + cz
    if i_hi < i_lo or j_hi < j_lo or k_hi < k_lo:
        return
    abs_tmpl = np.abs(tmpl)
    windows = sliding_window_view(test, (wx, wy, wz))
    n_el = wx * wy * wz
    for i in range(i_lo, i_hi + 1):
        for k in range(k_lo, k_hi + 1):
            row_skip = skip[i, j_lo:j_hi + 1, k]
            if row_skip.all():
                continue
            # (Sy, wx, wy, wz) blocks for every j shift at this (i, k)
            blocks = windows[i - cx, :, k - cz]
            diff = np.abs(blocks - tmpl).reshape(-1, n_el)
            num = np.cumsum(diff, axis=1)[:, -1]
            if mode == 0:
                den_el = (blocks + tmpl).reshape(-1, n_el)
            else:
                den_el = (np.abs(blocks) + abs_tmpl).reshape(-1, n_el)
            den = np.cumsum(den_el, axis=1)[:, -1]
            with np.errstate(divide="ignore", invalid="ignore"):
                c_row = np.where(den == 0.0, 1.0, 1.0 - num / den)
            out[i, j_lo:j_hi + 1, k] = np.where(row_skip,
                                                out[i, j_lo:j_hi + 1, k], c_row)
