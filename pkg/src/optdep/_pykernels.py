"""Pure numpy implementations of the hot kernels (fallback backend)."""
import numpy as np

from . import _families as fam


def h_inverse(code, theta, u, w, rtol=1e-10, maxiter=200):
    """Solve h(u, v) = w for v in (0, 1) by vectorised bisection."""
    u = np.ascontiguousarray(u, dtype=float)
    w = np.ascontiguousarray(w, dtype=float)
    if code == fam.INDEPENDENCE:
        return w.copy()
    if code == fam.COMONOTONE:
        return u.copy()
    lo = np.zeros_like(u)
    hi = np.ones_like(u)
    active = np.ones(u.shape, dtype=bool)
    for _ in range(maxiter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        mid = 0.5 * (lo[idx] + hi[idx])
        below = fam.h_func(code, theta, u[idx], mid) < w[idx]
        lo[idx] = np.where(below, mid, lo[idx])
        hi[idx] = np.where(below, hi[idx], mid)
        done = (hi[idx] - lo[idx]) <= rtol * hi[idx]
        active[idx[done]] = False
    return 0.5 * (lo + hi)


def log_density_sum(code, theta, u, v):
    return float(np.sum(fam.log_pdf(code, theta, u, v)))


def empirical_copula_grid(u, v, gu, gv):
    """Fraction of pairs with u_i <= gu[a] and v_i <= gv[b], for sorted grids."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    gu = np.asarray(gu, dtype=float)
    gv = np.asarray(gv, dtype=float)
    n = u.size
    na, nb = gu.size, gv.size
    # first grid index at which each pair starts being counted
    iu = np.searchsorted(gu, u, side="left")
    iv = np.searchsorted(gv, v, side="left")
    counts = np.bincount(iu * (nb + 1) + iv, minlength=(na + 1) * (nb + 1))
    counts = counts.reshape(na + 1, nb + 1).cumsum(axis=0).cumsum(axis=1)
    return counts[:na, :nb] / float(n)
