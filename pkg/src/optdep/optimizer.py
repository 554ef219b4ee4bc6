"""Mean-dependency portfolio optimisation.

Both solvers minimise ``-w'r + alpha * w' Lambda w`` subject to ``sum(w) = 1``.
The closed form handles the budget constraint only; the box solver adds
bounds ``lower <= w <= upper`` and group-sum equalities.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.optimize import linprog, nnls

ACTIVE_TOL = 1e-11


class InfeasibleProblemError(ValueError):
    pass


class SingularMatrixError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class Group:
    indices: Tuple[int, ...]
    target: float


@dataclass
class QpProblem:
    expected_returns: np.ndarray
    lam: np.ndarray
    alpha: float
    lower: np.ndarray = None
    upper: np.ndarray = None
    groups: List[Group] = field(default_factory=list)

    def __post_init__(self):
        self.expected_returns = np.asarray(self.expected_returns, dtype=float).ravel()
        n = self.expected_returns.size
        self.lam = np.asarray(self.lam, dtype=float).reshape(n, n)
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        self.lower = np.zeros(n) if self.lower is None else np.broadcast_to(
            np.asarray(self.lower, dtype=float), (n,)).copy()
        self.upper = np.ones(n) if self.upper is None else np.broadcast_to(
            np.asarray(self.upper, dtype=float), (n,)).copy()
        self.groups = [g if isinstance(g, Group) else Group(tuple(g[0]), float(g[1]))
                       for g in self.groups]
        for g in self.groups:
            if any(i < 0 or i >= n for i in g.indices):
                raise ValueError(f"group indices out of range: {g.indices}")

    @property
    def n(self) -> int:
        return self.expected_returns.size

    def constraints(self):
        """Equality system ``A w = b`` (budget first, then groups)."""
        rows = [np.ones(self.n)]
        rhs = [1.0]
        for g in self.groups:
            r = np.zeros(self.n)
            r[list(g.indices)] = 1.0
            rows.append(r)
            rhs.append(g.target)
        return np.array(rows), np.array(rhs)

    def objective(self, w):
        w = np.asarray(w, dtype=float)
        return float(-w @ self.expected_returns + self.alpha * w @ self.lam @ w)


@dataclass
class PortfolioWeights:
    weights: np.ndarray
    gamma: Optional[float] = None
    kkt_residual: float = 0.0
    iterations: int = 0


def closed_form_weights(er, lam, alpha: float) -> PortfolioWeights:
    """Budget-constrained optimum ``w = Lambda^-1 (r - gamma 1) / (2 alpha)``.

    ``gamma = (1' Lambda^-1 r - 2 alpha) / (1' Lambda^-1 1)`` makes the
    weights sum to one.  Uses a Cholesky factorisation; raises
    ``SingularMatrixError`` when ``Lambda`` is not positive definite.
    """
    if not alpha > 0:
        raise ValueError("closed-form weights need alpha > 0")
    er = np.asarray(er, dtype=float).ravel()
    lam = np.asarray(lam, dtype=float)
    n = er.size
    try:
        factor = scipy.linalg.cho_factor(lam, lower=True, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(
            "dependency matrix is not positive definite; repair it with delta > 0 first") from exc
    ones = np.ones(n)
    x = scipy.linalg.cho_solve(factor, er)
    y = scipy.linalg.cho_solve(factor, ones)
    gamma = (x.sum() - 2.0 * alpha) / y.sum()
    w = (x - gamma * y) / (2.0 * alpha)
    stationarity = np.max(np.abs(-er + 2.0 * alpha * lam @ w + gamma))
    budget = abs(w.sum() - 1.0)
    return PortfolioWeights(w, float(gamma), float(max(stationarity, budget)))


def _independent_rows(a, b):
    # drop linearly dependent equality rows (e.g. a group spanning every asset)
    keep = []
    for i in range(a.shape[0]):
        trial = keep + [i]
        if np.linalg.matrix_rank(a[trial]) == len(trial):
            keep.append(i)
    return a[keep], b[keep]


def _check_feasible_arithmetic(p: QpProblem):
    if np.any(p.lower > p.upper):
        bad = np.flatnonzero(p.lower > p.upper).tolist()
        raise InfeasibleProblemError(f"lower bound exceeds upper bound at indices {bad}")
    if p.lower.sum() > 1.0 + 1e-12 or p.upper.sum() < 1.0 - 1e-12:
        raise InfeasibleProblemError(
            f"budget infeasible: sum(lower)={p.lower.sum():.6g}, sum(upper)={p.upper.sum():.6g}")
    for g in p.groups:
        idx = list(g.indices)
        lo, hi = p.lower[idx].sum(), p.upper[idx].sum()
        if g.target < lo - 1e-12 or g.target > hi + 1e-12:
            raise InfeasibleProblemError(
                f"group {g.indices} target {g.target} outside [{lo:.6g}, {hi:.6g}]")


def _initial_point(p, a, b):
    bounds = [(None if not np.isfinite(l) else l, None if not np.isfinite(u) else u)
              for l, u in zip(p.lower, p.upper)]
    res = linprog(np.zeros(p.n), A_eq=a, b_eq=b, bounds=bounds, method="highs")
    if res.status == 2:
        raise InfeasibleProblemError("constraint set is empty")
    if res.status != 0:
        raise RuntimeError(f"phase-1 feasibility solve failed: {res.message}")
    return np.clip(res.x, p.lower, p.upper)


def _free_full_row_rank(a, state, fixed):
    """Release bounds (in index order) until the free columns of ``a`` span its rows."""
    free = state == 0
    cur = np.linalg.matrix_rank(a[:, free]) if free.any() else 0
    for i in range(state.size):
        if cur >= a.shape[0]:
            break
        if free[i] or fixed[i]:
            continue
        trial = free.copy()
        trial[i] = True
        r = np.linalg.matrix_rank(a[:, trial])
        if r > cur:
            state[i] = 0
            free, cur = trial, r


def solve_box_qp(p: QpProblem, max_iter: Optional[int] = None) -> PortfolioWeights:
    """Primal active-set method for the bounded, equality-constrained convex QP.

    Bounds in the working set are held fixed; each iteration takes the
    minimising step of the reduced problem in the null space of the equality
    constraints over the free variables (or a zero-curvature descent ray when
    the reduced Hessian is singular), stopping at the first blocking bound.
    Bounds whose multipliers have the wrong sign are released one at a time.
    """
    _check_feasible_arithmetic(p)
    a_full, b_full = p.constraints()
    a, b = _independent_rows(a_full, b_full)
    n = p.n
    hess = 2.0 * p.alpha * p.lam
    c = -p.expected_returns
    lo, hi = p.lower, p.upper
    fixed = lo == hi

    w = _initial_point(p, a, b)
    at_lo = (np.abs(w - lo) <= ACTIVE_TOL * np.maximum(1.0, np.abs(lo))) & np.isfinite(lo)
    at_hi = (np.abs(w - hi) <= ACTIVE_TOL * np.maximum(1.0, np.abs(hi))) & np.isfinite(hi) & ~at_lo
    w[at_lo] = lo[at_lo]
    w[at_hi] = hi[at_hi]
    # working set: +1 at upper, -1 at lower, 0 free
    state = np.where(at_hi, 1, np.where(at_lo, -1, 0))
    state[fixed] = -1
    _free_full_row_rank(a, state, fixed)

    scale = max(1.0, float(np.max(np.abs(hess))) if n else 1.0, float(np.max(np.abs(c))) if n else 1.0)
    max_iter = max_iter or 50 * (n + 1)
    nu = np.zeros(a.shape[0])
    it = 0
    for it in range(1, max_iter + 1):
        g = hess @ w + c
        free = np.flatnonzero(state == 0)
        step = np.zeros(n)
        ray = False
        if free.size:
            a_f = a[:, free]
            z = scipy.linalg.null_space(a_f) if a_f.shape[0] else np.eye(free.size)
            if z.shape[1]:
                hr = z.T @ hess[np.ix_(free, free)] @ z
                gr = z.T @ g[free]
                ev, vecs = np.linalg.eigh(0.5 * (hr + hr.T))
                pos = ev > 1e-12 * scale
                r0 = vecs[:, ~pos].T @ gr
                if r0.size and np.linalg.norm(r0) > 1e-12 * scale:
                    step[free] = -z @ (vecs[:, ~pos] @ r0)
                    ray = True
                else:
                    coef = vecs[:, pos].T @ gr / ev[pos]
                    step[free] = -z @ (vecs[:, pos] @ coef)
        if not ray and np.max(np.abs(step), initial=0.0) <= 1e-13 * (1.0 + np.max(np.abs(w))):
            # stationary on the working set: check bound multipliers
            if free.size:
                nu = np.linalg.lstsq(a[:, free].T, -g[free], rcond=None)[0]
            else:
                nu = np.zeros(a.shape[0])
            s = g + a.T @ nu
            viol = np.zeros(n)
            lower_set = (state == -1) & ~fixed
            upper_set = (state == 1) & ~fixed
            viol[lower_set] = -s[lower_set]
            viol[upper_set] = s[upper_set]
            k = int(np.argmax(viol))
            if viol[k] <= 1e-11 * scale:
                break
            state[k] = 0
            continue
        # ratio test along the step
        t_max = np.inf if ray else 1.0
        block = -1
        for i in free:
            if step[i] < 0 and np.isfinite(lo[i]):
                t = (lo[i] - w[i]) / step[i]
            elif step[i] > 0 and np.isfinite(hi[i]):
                t = (hi[i] - w[i]) / step[i]
            else:
                continue
            if t < t_max:
                t_max, block = max(t, 0.0), i
        if not np.isfinite(t_max):
            raise ValueError("objective unbounded below on the feasible set")
        w = w + t_max * step
        if block >= 0:
            if step[block] < 0:
                w[block], state[block] = lo[block], -1
            else:
                w[block], state[block] = hi[block], 1
    else:
        raise RuntimeError(f"active-set solver did not converge in {max_iter} iterations")

    w = np.where(state == -1, lo, np.where(state == 1, hi, w))
    gamma = float(nu[0]) if nu.size else None
    return PortfolioWeights(w, gamma, kkt_residual(p, w), it)


def kkt_residual(p: QpProblem, w) -> float:
    """Max-norm of the stacked KKT residual of the box QP at ``w``.

    Multipliers are recovered by non-negative least squares over the
    equality constraints and the bounds active at ``w``.
    """
    w = np.asarray(w, dtype=float).ravel()
    if w.size != p.n:
        raise ValueError("dimension mismatch")
    a, b = p.constraints()
    feas = max(
        float(np.max(np.abs(a @ w - b))),
        float(np.max(np.maximum(p.lower - w, 0.0), initial=0.0)),
        float(np.max(np.maximum(w - p.upper, 0.0), initial=0.0)),
    )
    g = 2.0 * p.alpha * p.lam @ w - p.expected_returns
    act_lo = np.flatnonzero(np.abs(w - p.lower) <= 1e-8)
    act_hi = np.flatnonzero(np.abs(p.upper - w) <= 1e-8)
    cols = [a.T, -a.T]
    eye = np.eye(p.n)
    if act_lo.size:
        cols.append(-eye[:, act_lo])
    if act_hi.size:
        cols.append(eye[:, act_hi])
    m = np.hstack(cols)
    x, _ = nnls(m, -g, maxiter=50 * m.shape[1])
    stat = float(np.max(np.abs(m @ x + g)))
    k = a.shape[0]
    z = x[2 * k:]
    gaps = np.concatenate([w[act_lo] - p.lower[act_lo], p.upper[act_hi] - w[act_hi]])
    comp = float(np.max(np.abs(z * gaps), initial=0.0))
    return max(feas, stat, comp)


def groups_from_spec(specs: Sequence[dict], ids: Sequence[str]):
    """Translate ``{"members": [...], "target": x}`` entries into index groups.

    A member matches an option id exactly or as an underlier prefix (``"AAA"``
    matches ``"AAA:call:110"``).
    """
    groups = []
    for g in specs:
        members = list(g["members"])
        idx = tuple(i for i, oid in enumerate(ids)
                    if oid in members or oid.split(":", 1)[0] in members)
        groups.append(Group(idx, float(g["target"])))
    return groups
