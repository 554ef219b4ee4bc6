"""Vectorised closed-form formulas for the bivariate copula families.

Family codes are shared with the compiled kernels:

    0 independence, 1 Clayton, 2 Frank, 3 Gumbel, 4 comonotone (upper bound M)

All functions broadcast over numpy arrays and never raise on boundary
inputs; callers validate parameter domains.
"""
import numpy as np

INDEPENDENCE = 0
CLAYTON = 1
FRANK = 2
GUMBEL = 3
COMONOTONE = 4


def _softplus(x):
    return np.logaddexp(0.0, x)


def _log_abs_expm1(x):
    return np.log(np.abs(np.expm1(x)))


def _frank_log_den(theta, u, v):
    """log|expm1(-t) + expm1(-t u) expm1(-t v)| without cancellation.

    The sum equals -(P + Q) with P = e^{-tu}(1 - e^{-tv}) and
    Q = e^{-tv}(1 - e^{-t(1-v)}), two terms of equal sign for either sign of t.
    """
    lp = -theta * u + _log_abs_expm1(-theta * v)
    lq = -theta * v + _log_abs_expm1(-theta * (1.0 - v))
    return np.logaddexp(lp, lq)


def _frank_log_ratio(theta, u, v):
    """log(Q / P) for the split above; dC/du = 1 / (1 + Q/P)."""
    return theta * (u - v) + _log_abs_expm1(-theta * (1.0 - v)) - _log_abs_expm1(-theta * v)


def cdf(code, theta, u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if code == INDEPENDENCE:
            out = u * v
        elif code == COMONOTONE:
            out = np.minimum(u, v)
        elif code == CLAYTON:
            # (u^-t + v^-t - 1)^(-1/t) in log space; the sum is >= 1 for t > 0
            # so the max{., 0} clamp never binds, and large t cannot overflow
            a = -theta * np.log(u)
            b = -theta * np.log(v)
            m = np.maximum(a, b)
            lse = m + np.log(np.exp(a - m) + np.exp(b - m) - np.exp(-m))
            out = np.exp(-lse / theta)
            out = np.where((u <= 0.0) | (v <= 0.0), 0.0, out)
        elif code == FRANK:
            arg = np.expm1(-theta * u) * np.expm1(-theta * v) / np.expm1(-theta)
            # log1p is accurate away from -1; near the upper corner use the split form
            split = -(_frank_log_den(theta, u, v) - _log_abs_expm1(-theta)) / theta
            out = np.where(arg > -0.5, -np.log1p(arg) / theta, split)
        elif code == GUMBEL:
            # (x^t + y^t)^(1/t) = x exp(softplus(t (ln y - ln x)) / t); no under/overflow
            x = -np.log(u)
            y = -np.log(v)
            big_a = x * np.exp(_softplus(theta * (np.log(y) - np.log(x))) / theta)
            big_a = np.where(x == 0.0, y, np.where(y == 0.0, x, big_a))
            out = np.exp(-big_a)
            out = np.where((u <= 0.0) | (v <= 0.0), 0.0, out)
        else:
            raise ValueError(f"unknown family code {code}")
    return np.clip(out, 0.0, 1.0)


def h_func(code, theta, u, v):
    """Conditional distribution dC/du at (u, v), increasing in v."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if code == INDEPENDENCE:
            out = v + 0.0 * u
        elif code == COMONOTONE:
            out = (v >= u).astype(float)
        elif code == CLAYTON:
            # (1 + u^t (v^-t - 1))^(-(1+t)/t), stable for large t
            z = np.exp(theta * np.log(u)) * np.expm1(-theta * np.log(v))
            out = np.exp(-(1.0 + theta) / theta * np.log1p(z))
        elif code == FRANK:
            out = 1.0 / (1.0 + np.exp(_frank_log_ratio(theta, u, v)))
            out = np.where(v >= 1.0, 1.0, np.where(v <= 0.0, 0.0, out))
        elif code == GUMBEL:
            x = -np.log(u)
            y = -np.log(v)
            sp = _softplus(theta * (np.log(y) - np.log(x)))
            big_a = x * np.exp(sp / theta)
            out = np.exp(-big_a + x + (1.0 / theta - 1.0) * sp)
            out = np.where(v >= 1.0, 1.0, np.where(v <= 0.0, 0.0, out))
        else:
            raise ValueError(f"unknown family code {code}")
    return np.clip(np.nan_to_num(out, nan=0.0), 0.0, 1.0)


def log_pdf(code, theta, u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if code == INDEPENDENCE:
            return np.zeros(np.broadcast(u, v).shape)
        if code == CLAYTON:
            a = -theta * np.log(u)
            b = -theta * np.log(v)
            m = np.maximum(a, b)
            lse = m + np.log(np.exp(a - m) + np.exp(b - m) - np.exp(-m))
            return (np.log1p(theta) - (theta + 1.0) * (np.log(u) + np.log(v))
                    - (2.0 + 1.0 / theta) * lse)
        if code == FRANK:
            return (np.log(-theta * np.expm1(-theta)) - theta * (u + v)
                    - 2.0 * _frank_log_den(theta, u, v))
        if code == GUMBEL:
            x = -np.log(u)
            y = -np.log(v)
            lx = np.log(x)
            ly = np.log(y)
            sp = _softplus(theta * (ly - lx))
            log_a = lx + sp / theta
            big_a = np.exp(log_a)
            return (-big_a + x + y + (theta - 1.0) * (lx + ly)
                    + (1.0 - 2.0 * theta) * log_a + np.log(big_a + theta - 1.0))
    raise ValueError(f"family code {code} has no density")
