"""Pure-numpy versions of the routines in ``_core.pyx``.

Signatures and results match the compiled module; this is what runs when the
extension is missing or ``SPARSEBO_PURE_PYTHON`` is set.
"""
import numpy as np

_SQRT3 = np.sqrt(3.0)


def matern32_cross(A, B, variance, lengthscale):
    n, m = A.shape[0], B.shape[0]
    out = np.empty((n, m))
    # direct differences (no |a|^2+|b|^2-2ab expansion) keep k(x, x') == k(x', x) bitwise
    step = max(1, 2_000_000 // max(1, m * A.shape[1]))
    for lo in range(0, n, step):
        diff = A[lo:lo + step, None, :] - B[None, :, :]
        r = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        s = (_SQRT3 / lengthscale) * r
        out[lo:lo + step] = variance * (1.0 + s) * np.exp(-s)
    return out


def nondominated_mask(F):
    n = F.shape[0]
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        le = np.all(F <= F[i], axis=1)
        lt = np.any(F < F[i], axis=1)
        if np.any(le & lt):
            keep[i] = False
    return keep


def hypervolume_2d(P, r0, r1):
    """P must be sorted by the first column (ties by the second)."""
    hv = 0.0
    best = r1
    prev_x = None
    for x, y in P:
        if y < best:
            if prev_x is not None:
                hv += (x - prev_x) * (r1 - best)
            prev_x = x
            best = y
    if prev_x is not None:
        hv += (r0 - prev_x) * (r1 - best)
    return float(hv)
