"""Bounded revised simplex on dense arrays.

The LP ``model`` is brought to ``min c x  s.t.  A x + s = b`` with one slack
per row whose bounds encode the relation (``<=``: s >= 0, ``>=``: s <= 0,
``=``: s = 0) plus one artificial column per row used only in phase 1.  The
basis inverse is kept explicitly and updated with rank-one eta steps, with a
fresh inverse every ``REFACTOR`` pivots.

Primal simplex uses Dantzig pricing and a Harris two-pass ratio test and
switches to Bland's rule after a run of degenerate pivots.  The dual simplex
is used to re-optimize after bound changes from a dual feasible basis, which
is what branch-and-bound children look like.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from ..exceptions import NumericalFailure
from .model import GE, LE, LinearModel, Status

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-9
PHASE1_TOL = 1e-7
REFACTOR = 64
DEGENERATE_RUN = 50
INVERSE_CACHE = 8


@dataclass
class Basis:
    """Warm start token: basic columns, nonbasic-at-upper flags, artificial signs."""

    basic: np.ndarray
    at_upper: np.ndarray
    art_sign: np.ndarray


@dataclass
class LPOutcome:
    status: Status
    x: np.ndarray | None
    y: np.ndarray | None       # duals of the min-form problem
    iterations: int
    basis: Basis | None


class SimplexLP:
    """Reusable simplex state for one constraint matrix.

    Bounds on the structural variables may be overridden per call, and the
    cost vector may be replaced with :meth:`set_costs`; both keep previously
    returned :class:`Basis` tokens valid.
    """

    def __init__(self, model: LinearModel, max_iter: int | None = None):
        A = model.matrix().toarray()
        m, n = A.shape
        self.m, self.n = m, n
        self.A = np.hstack([A, np.eye(m), np.eye(m)])
        self.b = np.asarray(model.rhs, dtype=np.float64)
        senses = np.asarray(model.senses, dtype=object)
        s_lo = np.where(senses == GE, -math.inf, 0.0)
        s_up = np.where(senses == LE, math.inf, 0.0)
        lo, up = model.bounds()
        self.base_lower = np.concatenate([lo, s_lo, np.zeros(m)])
        self.base_upper = np.concatenate([up, s_up, np.zeros(m)])
        self.art_sign = np.ones(m)
        # recent basis tokens -> (inverse, eta count); lets sibling nodes skip refactoring
        self._inverses: OrderedDict = OrderedDict()
        self.max_iter = max_iter if max_iter is not None else 50 * (m + n) + 1000
        self.set_costs(model)

    def set_costs(self, model: LinearModel) -> None:
        self.sign = -1.0 if model.sense == "max" else 1.0
        self.c = np.concatenate([self.sign * model.objective, np.zeros(2 * self.m)])

    # -- public entry ----------------------------------------------------------

    def solve(self, lower: np.ndarray | None = None, upper: np.ndarray | None = None,
              warm: Basis | None = None) -> LPOutcome:
        n, m = self.n, self.m
        self.lo = self.base_lower.copy()
        self.up = self.base_upper.copy()
        if lower is not None:
            self.lo[:n] = lower
        if upper is not None:
            self.up[:n] = upper
        self.iters = 0
        if np.any(self.lo > self.up):
            return LPOutcome(Status.INFEASIBLE, None, None, 0, None)
        if m == 0:
            return self._solve_unconstrained()

        status = None
        if warm is not None and len(warm.basic) == m:
            status = self._warm(warm)
        if status is None:
            status = self._cold()
        if status is Status.OPTIMAL:
            status = self._polish()
        if status is not Status.OPTIMAL:
            return LPOutcome(status, None, None, self.iters, None)
        y = self.c[self.basic] @ self.Binv
        basis = Basis(self.basic.copy(), self._at_upper(), self.art_sign.copy())
        self._inverses[id(basis)] = (basis, self.Binv.copy(), self.since_refactor)
        if len(self._inverses) > INVERSE_CACHE:
            self._inverses.popitem(last=False)
        return LPOutcome(Status.OPTIMAL, self.x[:n].copy(), y, self.iters, basis)

    # -- setup -----------------------------------------------------------------

    def _solve_unconstrained(self) -> LPOutcome:
        x = np.zeros(self.n)
        for j in range(self.n):
            cj, lo, up = self.c[j], self.lo[j], self.up[j]
            target = up if cj < 0 else lo
            if cj == 0:
                target = lo if math.isfinite(lo) else (up if math.isfinite(up) else 0.0)
            if not math.isfinite(target):
                return LPOutcome(Status.UNBOUNDED, None, None, 0, None)
            x[j] = target
        return LPOutcome(Status.OPTIMAL, x, np.zeros(0), 0, Basis(np.zeros(0, np.int64), np.zeros(self.n, bool), np.zeros(0)))

    def _nonbasic_value(self, j: int, at_upper: bool) -> float:
        lo, up = self.lo[j], self.up[j]
        if at_upper and math.isfinite(up):
            return up
        if math.isfinite(lo):
            return lo
        if math.isfinite(up):
            return up
        return 0.0

    def _at_upper(self) -> np.ndarray:
        return (~self.is_basic) & (self.x >= self.up) & (self.up > self.lo)

    def _set_basis(self, basic: np.ndarray) -> None:
        self.basic = np.asarray(basic, dtype=np.int64).copy()
        self.is_basic = np.zeros(self.A.shape[1], dtype=bool)
        self.is_basic[self.basic] = True

    def _refactor(self) -> None:
        B = self.A[:, self.basic]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure("singular basis matrix", Status.ITERATION_LIMIT) from exc
        if not np.all(np.isfinite(self.Binv)):
            raise NumericalFailure("basis inverse is not finite", Status.ITERATION_LIMIT)
        self.since_refactor = 0
        self._recompute_basics()

    def _recompute_basics(self) -> None:
        nb = ~self.is_basic
        rhs = self.b - self.A[:, nb] @ self.x[nb]
        self.x[self.basic] = self.Binv @ rhs

    def _cold(self) -> Status:
        n, m = self.n, self.m
        N = self.A.shape[1]
        self.x = np.zeros(N)
        for j in range(n + m):
            self.x[j] = self._nonbasic_value(j, False)
        resid = self.b - self.A[:, :n] @ self.x[:n]
        basic = np.empty(m, dtype=np.int64)
        need_phase1 = False
        for i in range(m):
            s = n + i
            lo, up = self.lo[s], self.up[s]
            if lo - FEAS_TOL <= resid[i] <= up + FEAS_TOL:
                basic[i] = s
                self.x[s] = resid[i]
            else:
                v = min(max(resid[i], lo), up)
                self.x[s] = v
                a = n + m + i
                self.art_sign[i] = 1.0 if resid[i] > v else -1.0
                self.A[i, a] = self.art_sign[i]
                self.x[a] = abs(resid[i] - v)
                self.up[a] = math.inf
                basic[i] = a
                need_phase1 = True
        self._set_basis(basic)
        self._refactor()
        if need_phase1:
            c1 = np.zeros(N)
            c1[n + m:] = np.where(self.up[n + m:] > 0, 1.0, 0.0)
            status = self._primal(c1)
            if status is not Status.OPTIMAL:
                return status
            if self.x[n + m:].sum() > PHASE1_TOL * max(1.0, np.abs(self.b).max(initial=0.0)):
                return Status.INFEASIBLE
            self.up[n + m:] = 0.0
            self.x[n + m:] = np.where(self.is_basic[n + m:], self.x[n + m:], 0.0)
        return self._primal(self.c)

    def _warm(self, warm: Basis) -> Status | None:
        n, m = self.n, self.m
        N = self.A.shape[1]
        self.art_sign = warm.art_sign.copy()
        self.A[np.arange(m), n + m + np.arange(m)] = self.art_sign
        self._set_basis(warm.basic)
        at_upper = np.zeros(N, dtype=bool)
        at_upper[:len(warm.at_upper)] = warm.at_upper[:N]
        lo_f, up_f = np.isfinite(self.lo), np.isfinite(self.up)
        x = np.where(at_upper & up_f, self.up, np.where(lo_f, self.lo, np.where(up_f, self.up, 0.0)))
        self.x = np.where(self.is_basic, 0.0, x)
        cached = self._inverses.get(id(warm))
        if cached is not None and cached[0] is warm:
            self._inverses.move_to_end(id(warm))
            self.Binv = cached[1].copy()
            self.since_refactor = cached[2]
            self._recompute_basics()
        else:
            try:
                self._refactor()
            except NumericalFailure:
                return None
        if self._max_primal_violation() <= FEAS_TOL:
            return self._primal(self.c)
        # Not primal feasible: repair dual feasibility by flipping boxed variables.
        d = self._reduced_costs(self.c)
        nb = ~self.is_basic & (self.up > self.lo)
        bad_lo = nb & (self.x < self.up) & (d < -OPT_TOL)   # wants to increase
        bad_up = nb & (self.x > self.lo) & (d > OPT_TOL)    # wants to decrease
        if np.any(bad_lo & ~np.isfinite(self.up)) or np.any(bad_up & ~np.isfinite(self.lo)):
            return None
        self.x[bad_lo] = self.up[bad_lo]
        self.x[bad_up] = self.lo[bad_up]
        if np.any(bad_lo | bad_up):
            self._recompute_basics()
        status = self._dual(self.c)
        if status is Status.ITERATION_LIMIT:
            return None
        if status is not Status.OPTIMAL:
            return status
        return self._primal(self.c)

    # -- iterations ------------------------------------------------------------

    def _reduced_costs(self, c: np.ndarray) -> np.ndarray:
        y = c[self.basic] @ self.Binv
        return c - y @ self.A

    def _max_primal_violation(self) -> float:
        xb = self.x[self.basic]
        lo, up = self.lo[self.basic], self.up[self.basic]
        return float(max(np.max(lo - xb, initial=0.0), np.max(xb - up, initial=0.0)))

    def _pivot(self, r: int, q: int, alpha: np.ndarray) -> None:
        Binv = self.Binv
        piv = alpha[r]
        Binv[r] /= piv
        col = alpha.copy()
        col[r] = 0.0
        Binv -= np.outer(col, Binv[r])
        self.is_basic[self.basic[r]] = False
        self.basic[r] = q
        self.is_basic[q] = True
        self.since_refactor += 1
        if self.since_refactor >= REFACTOR:
            self._refactor()

    def _primal(self, c: np.ndarray) -> Status:
        bland = False
        degenerate = 0
        while True:
            if self.iters >= self.max_iter:
                return Status.ITERATION_LIMIT
            d = self._reduced_costs(c)
            movable = ~self.is_basic & (self.up > self.lo)
            inc = movable & (self.x < self.up) & (d < -OPT_TOL)
            dec = movable & (self.x > self.lo) & (d > OPT_TOL)
            cand = inc | dec
            if not cand.any():
                return Status.OPTIMAL
            if bland:
                q = int(np.flatnonzero(cand)[0])
            else:
                q = int(np.argmax(np.where(cand, np.abs(d), -1.0)))
            delta = 1.0 if inc[q] else -1.0
            alpha = self.Binv @ self.A[:, q]
            g = delta * alpha
            xb = self.x[self.basic]
            lo_b, up_b = self.lo[self.basic], self.up[self.basic]
            down = (g > PIVOT_TOL) & np.isfinite(lo_b)
            upw = (g < -PIVOT_TOL) & np.isfinite(up_b)
            with np.errstate(divide="ignore", invalid="ignore"):
                slack = np.where(down, xb - lo_b, np.where(upw, up_b - xb, math.inf))
                gabs = np.abs(g)
                ratio = np.where(down | upw, np.maximum(slack, 0.0) / gabs, math.inf)
                loose = np.where(down | upw, (slack + FEAS_TOL) / gabs, math.inf)
            span = self.up[q] - self.lo[q]
            theta_max = loose.min(initial=math.inf)
            if not math.isfinite(theta_max) and not math.isfinite(span):
                return Status.UNBOUNDED
            self.iters += 1
            r = -1
            theta = math.inf
            if math.isfinite(theta_max):
                ok = ratio <= theta_max
                if bland:
                    best = ratio[ok].min()
                    tied = np.flatnonzero(ok & (ratio <= best))
                    r = int(tied[np.argmin(self.basic[tied])])
                else:
                    r = int(np.argmax(np.where(ok, gabs, -1.0)))
                theta = float(ratio[r])
            if span <= theta:
                # bound flip, the basis does not change
                self.x[q] += delta * span
                self.x[self.basic] -= span * g
                self.x[q] = self.up[q] if delta > 0 else self.lo[q]
                degenerate = 0
                continue
            self.x[q] += delta * theta
            self.x[self.basic] -= theta * g
            leaving = self.basic[r]
            self.x[leaving] = self.lo[leaving] if g[r] > 0 else self.up[leaving]
            self._pivot(r, q, alpha)
            if theta <= 1e-12:
                degenerate += 1
                if degenerate >= DEGENERATE_RUN:
                    bland = True
            else:
                degenerate = 0
                bland = False

    def _dual(self, c: np.ndarray) -> Status:
        while True:
            if self.iters >= self.max_iter:
                return Status.ITERATION_LIMIT
            xb = self.x[self.basic]
            lo_b, up_b = self.lo[self.basic], self.up[self.basic]
            below = lo_b - xb
            above = xb - up_b
            viol = np.maximum(below, above)
            r = int(np.argmax(viol))
            if viol[r] <= FEAS_TOL:
                return Status.OPTIMAL
            raise_up = below[r] > above[r]
            p = self.basic[r]
            target = lo_b[r] if raise_up else up_b[r]
            row = self.Binv[r] @ self.A
            d = self._reduced_costs(c)
            movable = ~self.is_basic & (self.up > self.lo)
            can_inc = movable & (self.x < self.up)
            can_dec = movable & (self.x > self.lo)
            if raise_up:
                cand = (can_inc & (row < -PIVOT_TOL)) | (can_dec & (row > PIVOT_TOL))
            else:
                cand = (can_inc & (row > PIVOT_TOL)) | (can_dec & (row < -PIVOT_TOL))
            if not cand.any():
                return Status.INFEASIBLE
            self.iters += 1
            dd = np.where(can_inc & ~can_dec, np.maximum(d, 0.0),
                          np.where(can_dec & ~can_inc, np.maximum(-d, 0.0), np.abs(d)))
            rabs = np.abs(row)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(cand, dd / rabs, math.inf)
                loose = np.where(cand, (dd + OPT_TOL) / rabs, math.inf)
            theta_max = loose.min()
            q = int(np.argmax(np.where(cand & (ratio <= theta_max), rabs, -1.0)))
            alpha = self.Binv @ self.A[:, q]
            if abs(alpha[r]) <= PIVOT_TOL:
                self._refactor()
                continue
            step = (self.x[p] - target) / alpha[r]
            self.x[q] += step
            self.x[self.basic] -= step * alpha
            self.x[p] = target
            self._pivot(r, q, alpha)

    def _accurate(self) -> bool:
        """Primal and dual residuals of the current inverse are at round-off level."""
        scale = 1.0 + np.abs(self.b).max(initial=0.0)
        if np.abs(self.A @ self.x - self.b).max(initial=0.0) > FEAS_TOL * scale:
            return False
        y = self.c[self.basic] @ self.Binv
        return np.abs(y @ self.A[:, self.basic] - self.c[self.basic]).max(initial=0.0) <= OPT_TOL

    def _polish(self) -> Status:
        """Re-check an optimal basis; refactor and re-optimize if round-off crept in."""
        for _ in range(5):
            if self._accurate():
                if self._max_primal_violation() <= FEAS_TOL:
                    return Status.OPTIMAL
            else:
                self._refactor()
            if self._max_primal_violation() > FEAS_TOL:
                status = self._dual(self.c)
                if status is not Status.OPTIMAL:
                    return status
            status = self._primal(self.c)
            if status is not Status.OPTIMAL:
                return status
        if self._accurate() and self._max_primal_violation() <= FEAS_TOL:
            return Status.OPTIMAL
        raise NumericalFailure("simplex could not restore feasibility after refactorization", Status.ITERATION_LIMIT)
