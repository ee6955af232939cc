"""Scan-then-golden-section extremization, vectorized over many intervals."""

from __future__ import annotations

from typing import Callable

import numpy as np

INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0


def golden_min(fun: Callable, a, b, iters: int = 40):
    """Golden-section search for a minimum on each ``[a[i], b[i]]``.

    ``fun`` maps an array of shape (m,) to values of shape (m,). Returns the
    best point seen and its value for every interval.
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc = fun(c)
    fd = fun(d)
    for _ in range(iters):
        left = fc < fd
        # keep [a, d] where f(c) < f(d), else [c, b]; one new probe per interval
        a, b = np.where(left, a, c), np.where(left, d, b)
        c, d = (np.where(left, b - INV_PHI * (b - a), d),
                np.where(left, c, a + INV_PHI * (b - a)))
        probe = np.where(left, c, d)
        fp = fun(probe)
        fc, fd = np.where(left, fp, fd), np.where(left, fc, fp)
    take_c = fc <= fd
    return np.where(take_c, c, d), np.where(take_c, fc, fd)


def scan_min(fun: Callable, lo, hi, n_scan: int = 64, n_golden: int = 40):
    """Minimize over ``[lo[i], hi[i]]``: uniform scan, then golden refinement.

    ``fun`` maps an (m, q) array of abscissae to (m, q) values. Endpoints are
    part of the scan, so a function monotone on an interval is minimized
    exactly. Returns (argmin, min) arrays of shape (m,).
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    m = lo.size
    if n_scan < 2:
        n_scan = 2
    s = np.linspace(0.0, 1.0, n_scan)
    xi = lo[:, None] + (hi - lo)[:, None] * s[None, :]
    xi[:, -1] = hi
    vals = np.asarray(fun(xi), dtype=float).reshape(m, n_scan)
    j = np.argmin(vals, axis=1)
    rows = np.arange(m)
    best_x = xi[rows, j]
    best_v = vals[rows, j]
    if n_golden <= 0:
        return best_x, best_v
    a = xi[rows, np.maximum(j - 1, 0)]
    b = xi[rows, np.minimum(j + 1, n_scan - 1)]
    wide = b > a
    if np.any(wide):
        idx = np.flatnonzero(wide)

        def column(z):
            full = best_x[:, None].copy()
            full[idx, 0] = z
            return np.asarray(fun(full), dtype=float)[idx, 0]

        gx, gv = golden_min(column, a[idx], b[idx], n_golden)
        better = gv < best_v[idx]
        best_x[idx[better]] = gx[better]
        best_v[idx[better]] = gv[better]
    return best_x, best_v


def scan_max(fun: Callable, lo, hi, n_scan: int = 64, n_golden: int = 40):
    x, v = scan_min(lambda z: -np.asarray(fun(z), dtype=float), lo, hi, n_scan, n_golden)
    return x, -v
