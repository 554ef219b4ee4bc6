# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: conditional inversion, log-likelihood sums and the
empirical copula grid.  Mirrors optdep._pykernels exactly in contract."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, log1p, expm1, fabs, fmax, INFINITY

cnp.import_array()

cdef enum:
    INDEPENDENCE = 0
    CLAYTON = 1
    FRANK = 2
    GUMBEL = 3
    COMONOTONE = 4


cdef inline double _softplus(double x) nogil:
    if x > 0:
        return x + log1p(exp(-x))
    return log1p(exp(x))


cdef inline double _log_abs_expm1(double x) nogil:
    return log(fabs(expm1(x)))


cdef inline double _logaddexp(double a, double b) nogil:
    cdef double m = fmax(a, b)
    if m == -INFINITY:
        return m
    return m + log1p(exp(-fabs(a - b)))


cdef inline double _frank_log_den(double theta, double u, double v) nogil:
    # see optdep._families._frank_log_den
    return _logaddexp(-theta * u + _log_abs_expm1(-theta * v),
                      -theta * v + _log_abs_expm1(-theta * (1.0 - v)))


cdef inline double _h(int code, double theta, double u, double v) nogil:
    cdef double z, x, y, sp, big_a, out
    if v <= 0.0:
        return 0.0
    if v >= 1.0:
        return 1.0
    if code == CLAYTON:
        z = exp(theta * log(u)) * expm1(-theta * log(v))
        out = exp(-(1.0 + theta) / theta * log1p(z))
    elif code == FRANK:
        out = 1.0 / (1.0 + exp(theta * (u - v) + _log_abs_expm1(-theta * (1.0 - v))
                               - _log_abs_expm1(-theta * v)))
    elif code == GUMBEL:
        x = -log(u)
        y = -log(v)
        sp = _softplus(theta * (log(y) - log(x)))
        big_a = x * exp(sp / theta)
        out = exp(-big_a + x + (1.0 / theta - 1.0) * sp)
    else:
        out = v
    if out != out:
        return 0.0
    if out < 0.0:
        return 0.0
    if out > 1.0:
        return 1.0
    return out


cdef inline double _log_pdf(int code, double theta, double u, double v) nogil:
    cdef double a, b, m, lse, x, y, lx, ly, sp, log_a, big_a
    if code == CLAYTON:
        a = -theta * log(u)
        b = -theta * log(v)
        m = fmax(a, b)
        lse = m + log(exp(a - m) + exp(b - m) - exp(-m))
        return log1p(theta) - (theta + 1.0) * (log(u) + log(v)) - (2.0 + 1.0 / theta) * lse
    elif code == FRANK:
        return log(-theta * expm1(-theta)) - theta * (u + v) - 2.0 * _frank_log_den(theta, u, v)
    elif code == GUMBEL:
        x = -log(u)
        y = -log(v)
        lx = log(x)
        ly = log(y)
        sp = _softplus(theta * (ly - lx))
        log_a = lx + sp / theta
        big_a = exp(log_a)
        return (-big_a + x + y + (theta - 1.0) * (lx + ly)
                + (1.0 - 2.0 * theta) * log_a + log(big_a + theta - 1.0))
    return 0.0


cdef inline double _h_root(int code, double theta, double u, double w,
                           double rtol, int maxiter) nogil:
    """Root of h(u, .) = w by Newton steps on the density, kept inside a
    shrinking bisection bracket (falls back to the midpoint when a step leaves it)."""
    cdef double lo = 0.0, hi = 1.0, x = w, f, d, xn
    cdef int it
    if w <= 0.0:
        return 0.0
    if w >= 1.0:
        return 1.0
    for it in range(maxiter):
        f = _h(code, theta, u, x) - w
        if f < 0.0:
            lo = x
        else:
            hi = x
        d = exp(_log_pdf(code, theta, u, x))
        if d > 0.0 and d < 1e300:
            xn = x - f / d
        else:
            xn = 0.5 * (lo + hi)
        if not (xn > lo and xn < hi):
            xn = 0.5 * (lo + hi)
        if fabs(xn - x) <= rtol * xn or hi - lo <= rtol * hi:
            return xn
        x = xn
    return x


def h_inverse(int code, double theta, u, w, double rtol=1e-10, int maxiter=200):
    cdef const double[::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef const double[::1] ww = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t n = uu.shape[0], i
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] oo = out
    if code == INDEPENDENCE:
        return np.array(ww, dtype=np.float64)
    if code == COMONOTONE:
        return np.array(uu, dtype=np.float64)
    with nogil:
        for i in range(n):
            oo[i] = _h_root(code, theta, uu[i], ww[i], rtol, maxiter)
    return out


def log_density_sum(int code, double theta, u, v):
    cdef const double[::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef const double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef Py_ssize_t n = uu.shape[0], i
    cdef double total = 0.0
    if code == INDEPENDENCE:
        return 0.0
    with nogil:
        for i in range(n):
            total += _log_pdf(code, theta, uu[i], vv[i])
    return total


def empirical_copula_grid(u, v, gu, gv):
    cdef const double[::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef const double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef const double[::1] ga = np.ascontiguousarray(gu, dtype=np.float64)
    cdef const double[::1] gb = np.ascontiguousarray(gv, dtype=np.float64)
    cdef Py_ssize_t n = uu.shape[0], na = ga.shape[0], nb = gb.shape[0]
    cdef Py_ssize_t i, a, b, ia, ib
    counts = np.zeros((na + 1, nb + 1), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] cc = counts
    with nogil:
        for i in range(n):
            # first grid index with g >= value (searchsorted, side=left)
            ia = 0
            while ia < na and ga[ia] < uu[i]:
                ia += 1
            ib = 0
            while ib < nb and gb[ib] < vv[i]:
                ib += 1
            cc[ia, ib] += 1
        for a in range(na + 1):
            for b in range(1, nb + 1):
                cc[a, b] += cc[a, b - 1]
        for a in range(1, na + 1):
            for b in range(nb + 1):
                cc[a, b] += cc[a - 1, b]
    return counts[:na, :nb] / float(n)
