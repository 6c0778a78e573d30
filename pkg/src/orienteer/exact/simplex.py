"""Dense bounded-variable primal simplex.

Solves ``max c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  lo <= x <= hi`` with
finite box bounds on every structural variable. Nonbasic variables sit at
either bound, so box constraints never become rows. Pricing is Dantzig's
largest reduced cost; after a run of degenerate pivots it switches to Bland's
smallest-index rule (entering and leaving) until progress resumes, which
rules out cycling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import LpStallError

FEAS_TOL = 1e-9
COST_TOL = 1e-9
PIVOT_TOL = 1e-9
DEGENERATE_RUN = 8


@dataclass
class LpResult:
    status: str  # "optimal" or "infeasible"
    objective: float
    x: np.ndarray | None
    iterations: int
    max_violation: float = 0.0


class _Tableau:
    def __init__(self, A, b, lo_b, hi_b, basis, rule):
        self.T = A.copy()
        self.xB = b.copy()
        self.lo = lo_b
        self.hi = hi_b
        self.basis = basis
        self.ncol = A.shape[1]
        self.is_basic = np.zeros(self.ncol, dtype=bool)
        self.is_basic[basis] = True
        self.at_upper = np.zeros(self.ncol, dtype=bool)
        self.rule = rule
        self.iterations = 0

    def reduced_costs(self, c):
        return c - c[self.basis] @ self.T

    def run(self, c, max_iter, stop=None):
        """Pivot until optimal; ``stop(self)`` may end the run early."""
        d = self.reduced_costs(c)
        span = self.hi - self.lo
        degenerate = 0
        while True:
            if stop is not None and stop(self):
                return d
            movable = ~self.is_basic & (span > 0)
            up = movable & ~self.at_upper & (d > COST_TOL)
            down = movable & self.at_upper & (d < -COST_TOL)
            eligible = up | down
            if not eligible.any():
                return d
            if self.iterations >= max_iter:
                raise LpStallError(f"simplex iteration cap {max_iter} reached")
            bland = self.rule == "bland" or degenerate >= DEGENERATE_RUN
            cand = np.flatnonzero(eligible)
            j = int(cand[0]) if bland else int(cand[np.argmax(np.abs(d[cand]))])
            delta = -1.0 if self.at_upper[j] else 1.0
            col = self.T[:, j].copy()
            alpha = delta * col
            bl, bh = self.lo[self.basis], self.hi[self.basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                t_low = np.where(alpha > PIVOT_TOL, (self.xB - bl) / alpha, np.inf)
                t_up = np.where(alpha < -PIVOT_TOL, (bh - self.xB) / -alpha, np.inf)
            ratios = np.maximum(np.minimum(t_low, t_up), 0.0)
            theta_row = ratios.min() if ratios.size else np.inf
            theta = min(theta_row, span[j])
            self.iterations += 1
            if not np.isfinite(theta):
                raise LpStallError("unbounded direction in a boxed LP")
            degenerate = degenerate + 1 if theta <= 1e-12 else 0
            if span[j] <= theta_row:
                self.xB -= delta * span[j] * col
                self.at_upper[j] = not self.at_upper[j]
                continue
            ties = np.flatnonzero(ratios <= theta_row + 1e-12)
            if bland:
                r = int(ties[np.argmin(np.asarray(self.basis)[ties])])
            else:
                r = int(ties[np.argmax(np.abs(alpha[ties]))])
            leaving = self.basis[r]
            entering_value = (self.hi[j] if self.at_upper[j] else self.lo[j]) + delta * theta
            self.xB -= delta * theta * col
            self.xB[r] = entering_value
            self.at_upper[leaving] = t_up[r] < t_low[r]
            self.is_basic[leaving] = False
            self.is_basic[j] = True
            self.at_upper[j] = False
            self.basis[r] = j
            row = self.T[r] / col[r]
            self.T -= np.outer(col, row)
            self.T[r] = row
            d = d - d[j] * row


def solve_lp(
    c,
    A_ub=None,
    b_ub=None,
    A_eq=None,
    b_eq=None,
    lo=None,
    hi=None,
    rule: str = "dantzig",
    max_iter: int | None = None,
) -> LpResult:
    """Maximize ``c.x`` over a boxed polyhedron.

    ``rule`` is ``"dantzig"`` (Bland only while degenerate) or ``"bland"``.
    """
    c = np.asarray(c, dtype=float)
    nv = c.size
    A_ub = np.zeros((0, nv)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, nv)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, nv)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, nv)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    lo = np.zeros(nv) if lo is None else np.asarray(lo, dtype=float)
    hi = np.ones(nv) if hi is None else np.asarray(hi, dtype=float)
    if np.any(lo > hi + FEAS_TOL):
        return LpResult("infeasible", -np.inf, None, 0)

    # substitute fixed variables and shift the rest to [0, hi - lo]
    fixed = hi - lo <= 0
    free = np.flatnonzero(~fixed)
    x_full = lo.copy()
    rhs_ub = b_ub - A_ub @ lo
    rhs_eq = b_eq - A_eq @ lo
    Au, Ae = A_ub[:, free], A_eq[:, free]
    span = hi[free] - lo[free]
    c_free = c[free]
    const = float(c @ lo)

    m_ub, m_eq, k = Au.shape[0], Ae.shape[0], free.size
    m = m_ub + m_eq
    if m == 0:
        x = np.where(c_free > 0, span, 0.0)
        x_full[free] += x
        return LpResult("optimal", const + float(c_free @ x), x_full, 0)

    # columns: structural | ub slacks | artificials
    flip = np.concatenate([rhs_ub < 0, rhs_eq < 0])
    need_art = np.concatenate([rhs_ub < 0, np.ones(m_eq, dtype=bool)])
    art_rows = np.flatnonzero(need_art)
    n_art = art_rows.size
    A = np.zeros((m, k + m_ub + n_art))
    A[:m_ub, :k] = Au
    A[m_ub:, :k] = Ae
    A[np.arange(m_ub), k + np.arange(m_ub)] = 1.0
    b = np.concatenate([rhs_ub, rhs_eq])
    A[flip] *= -1.0
    b[flip] *= -1.0
    A[art_rows, k + m_ub + np.arange(n_art)] = 1.0
    col_lo = np.zeros(A.shape[1])
    col_hi = np.concatenate([span, np.full(m_ub, np.inf), np.full(n_art, np.inf)])
    basis = []
    art_of = dict(zip(art_rows.tolist(), range(n_art)))
    for r in range(m):
        basis.append(k + m_ub + art_of[r] if r in art_of else k + r)

    cap = max_iter if max_iter is not None else 50 * (A.shape[1] + m)
    tab = _Tableau(A, b, col_lo, col_hi, basis, rule)
    art_cols = np.arange(k + m_ub, k + m_ub + n_art)
    if n_art:
        c1 = np.zeros(A.shape[1])
        c1[art_cols] = -1.0

        def feasible_now(t):
            return t.xB[[i for i, v in enumerate(t.basis) if v >= k + m_ub]].sum() <= FEAS_TOL

        tab.run(c1, cap, stop=feasible_now)
        if not feasible_now(tab):
            return LpResult("infeasible", -np.inf, None, tab.iterations)
        tab.hi = col_hi.copy()
        tab.hi[art_cols] = 0.0

    c2 = np.concatenate([c_free, np.zeros(m_ub + n_art)])
    tab.run(c2, cap)

    # recover x from the original rows for accuracy
    xs = np.where(tab.at_upper, tab.hi, 0.0)
    xs[tab.basis] = 0.0
    basis = np.asarray(tab.basis)
    try:
        xB = np.linalg.solve(A[:, basis], b - A @ xs)
    except np.linalg.LinAlgError:
        xB = tab.xB
    xs[basis] = xB
    lo_c, hi_c = tab.lo, tab.hi
    viol = float(max(np.max(lo_c - xs, initial=0.0), np.max(xs - hi_c, initial=0.0)))
    xs = np.clip(xs, lo_c, hi_c)
    x_full[free] += xs[:k]
    residual = max(
        float(np.max(A_ub @ x_full - b_ub, initial=0.0)),
        float(np.max(np.abs(A_eq @ x_full - b_eq), initial=0.0)),
    )
    return LpResult("optimal", const + float(c_free @ xs[:k]), x_full, tab.iterations, max(viol, residual))
