"""Numerical core of the joint MLE.

The MLE is computed on the cone criterion (log terms with
``F_{K+1} = F_+(inf) - F_+`` minus ``F_+(inf)``), whose maximizer over
unconstrained bounded nondecreasing tuples automatically has
``F_+(inf) = 1``.

Unknowns are the values of each ``F_k`` at the distinct times carrying a
cause-``k`` failure (the only places an optimal ``F_k`` needs to jump) plus
one shared tail mass ``tau`` placed beyond the last observation.

Two phases:

* block-coordinate iterative convex minorant (ICM) sweeps, each a diagonal
  Newton step solved by bounded isotonic regression and safeguarded by an
  Armijo line search;
* an active-set Newton method on the jump masses, which adds the most
  violating jump locations and drops masses that hit zero, and finishes
  the job to round-off precision.

The gradient of the criterion with respect to the mass at a candidate ``t``
of cause ``k`` is ``H_k(t) - beta``, the same quantity the certificate
inspects, and the gradient with respect to ``tau`` is ``-beta``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .isotonic import weighted_isotonic
from .model import Dataset

ARMIJO_SLOPE = 0.1
ARMIJO_FACTOR = 0.5


class ConvergenceError(RuntimeError):
    def __init__(self, message, best=None, violation=np.inf, iterations=0):
        super().__init__(message)
        self.best = best
        self.violation = violation
        self.iterations = iterations


@dataclass
class State:
    x: list  # per-cause values at candidate indices, nondecreasing
    tau: float


class Problem:
    def __init__(self, d: Dataset):
        self.d = d
        self.K = d.k_causes
        self.m = len(d.times)
        c = d.counts
        n = d.n
        self.cand = [np.nonzero(c[:, k] > 0)[0] for k in range(1, self.K + 1)]
        self.cw = [c[idx, k] / n for k, idx in zip(range(1, self.K + 1), self.cand)]
        self.surv = np.nonzero(c[:, 0] > 0)[0]
        self.sw = c[self.surv, 0] / n
        # number of cause-k candidates at or before each survival time
        self.pos = [np.searchsorted(idx, self.surv, side="right") for idx in self.cand]
        # survival times strictly before each candidate
        self.surv_before = [np.searchsorted(self.surv, idx, side="left") for idx in self.cand]
        self.active_causes = [k for k in range(self.K) if self.cand[k].size]

    # -- evaluation ---------------------------------------------------------

    def at_surv(self, k, xk):
        if xk.size == 0:
            return np.zeros(self.surv.size)
        return np.concatenate(([0.0], xk))[self.pos[k]]

    def surv_args(self, st: State):
        S = np.full(self.surv.size, st.tau)
        for k in self.active_causes:
            xk = st.x[k]
            S += xk[-1] - self.at_surv(k, xk)
        return S

    def objective(self, st: State, S=None) -> float:
        if S is None:
            S = self.surv_args(st)
        if np.any(S <= 0):
            return -np.inf
        total = float(np.dot(self.sw, np.log(S))) - st.tau
        for k in self.active_causes:
            xk = st.x[k]
            if xk[0] <= 0:
                return -np.inf
            total += float(np.dot(self.cw[k], np.log(xk))) - xk[-1]
        return total

    def beta(self, S) -> float:
        return 1.0 - float(np.sum(self.sw / S))

    def gradients(self, st: State, S=None):
        """``H_k - beta`` at every candidate of every cause, and ``beta``."""
        if S is None:
            S = self.surv_args(st)
        srec = self.sw / S
        tail = np.concatenate((np.cumsum(srec[::-1])[::-1], [0.0]))
        beta = 1.0 - float(np.sum(srec))
        out = []
        for k in range(self.K):
            if self.cand[k].size == 0:
                out.append(np.empty(0))
                continue
            crec = self.cw[k] / st.x[k]
            H = np.cumsum(crec[::-1])[::-1] - tail[self.surv_before[k]]
            out.append(H - beta)
        return out, beta

    def violation(self, st: State) -> float:
        """Largest breach of the optimality conditions at ``st``."""
        g, beta = self.gradients(st)
        worst = max(-beta, 0.0)
        for k in self.active_causes:
            gk = g[k]
            worst = max(worst, float(np.max(gk)))
            jumps = np.diff(np.concatenate(([0.0], st.x[k]))) > 0
            if np.any(jumps):
                worst = max(worst, float(np.max(np.abs(gk[jumps]))))
        if st.tau > 0:
            worst = max(worst, abs(beta))
        return worst

    # -- ICM phase ----------------------------------------------------------

    def icm_block(self, st: State, k: int, guard: float) -> tuple[State, bool]:
        """One diagonal-Newton isotonic step on cause ``k`` plus the tail."""
        xk = st.x[k]
        M = xk.size
        S = self.surv_args(st)
        z = np.concatenate((xk, [xk[-1] + st.tau]))
        srec = self.sw / S
        srec2 = self.sw / S**2
        pos = self.pos[k]
        grad = np.empty(M + 1)
        curv = np.empty(M + 1)
        grad[:M] = self.cw[k] / xk
        curv[:M] = self.cw[k] / xk**2
        # survival terms depend on z_{M+1} - z_{pos}
        inner = pos > 0
        grad[:M] -= np.bincount(pos[inner] - 1, srec[inner], minlength=M)
        curv[:M] += np.bincount(pos[inner] - 1, srec2[inner], minlength=M)
        grad[M] = float(np.sum(srec)) - 1.0
        curv[M] = float(np.sum(srec2))
        if self.surv.size == 0:
            # no survivors: the tail mass only costs, keep it at zero
            grad[M], curv[M] = 0.0, 1.0
        floor = 1e-12 * max(float(np.max(curv)), 1.0)
        curv = np.maximum(curv, floor)
        target = z + grad / curv
        if self.surv.size == 0:
            znew = weighted_isotonic(target[:M], curv[:M], lower=np.zeros(M))
            znew = np.append(znew, znew[-1])
        else:
            znew = weighted_isotonic(target, curv, lower=np.zeros(M + 1))
        direction = znew - z
        slope = float(np.dot(grad, direction))
        if slope <= 0:
            return st, False
        f0 = self.objective(st, S)
        step = 1.0
        for _ in range(60):
            zt = z + step * direction
            cand = self._with_block(st, k, zt)
            if self._interior(cand, guard):
                f1 = self.objective(cand)
                if f1 >= f0 + ARMIJO_SLOPE * step * slope:
                    return cand, True
            step *= ARMIJO_FACTOR
        return st, False

    def _with_block(self, st: State, k: int, z) -> State:
        x = list(st.x)
        x[k] = np.maximum.accumulate(z[:-1])
        tau = max(float(z[-1] - x[k][-1]), 0.0)
        return State(x, tau)

    def _interior(self, st: State, guard: float) -> bool:
        for k in self.active_causes:
            if st.x[k][0] < guard:
                return False
        if self.surv.size and np.min(self.surv_args(st)) < guard:
            return False
        return True

    # -- active-set Newton phase --------------------------------------------

    def newton(self, st: State, tol: float, max_iters: int):
        """Active-set Newton on the jump masses. Returns ``(state, iterations)``."""
        K = self.K
        act, mass = [], []
        for k in range(K):
            if self.cand[k].size == 0:
                act.append(np.empty(0, dtype=np.int64))
                mass.append(np.empty(0))
                continue
            inc = np.diff(np.concatenate(([0.0], st.x[k])))
            a = np.nonzero(inc > 0)[0]
            act.append(a)
            mass.append(inc[a])
        tau_active = st.tau > 0
        tau = st.tau if tau_active else 0.0
        add_tol = 0.01 * tol
        inner_tol = min(1e-3 * tol, 1e-12)
        single_add = False
        last_add_f = -np.inf
        it = 0
        cur = self._state_from_mass(act, mass, tau)
        fcur = self.objective(cur)
        while it < max_iters:
            it += 1
            g, beta = self.gradients(cur)
            gtau = -beta
            gS = [g[k][act[k]] for k in range(K)]
            inner_err = max([float(np.max(np.abs(x))) for x in gS if x.size]
                            + [abs(gtau) if tau_active else 0.0])
            if inner_err <= inner_tol:
                # several additions at once can stall; fall back to one at a time
                single_add = single_add or fcur <= last_add_f
                last_add_f = fcur
                added, tau_active = self._add_coordinates(g, gtau, act, mass, tau_active, add_tol, single_add)
                if not added:
                    return cur, it
                continue
            # Newton direction on the free set; zero masses pushed negative are frozen out
            while True:
                p = np.concatenate(mass + ([np.array([tau])] if tau_active else []))
                # masses at round-off level count as zero
                tiny = 1e-14 * max(float(np.sum(p)), 1.0)
                cols = [len(a) for a in act]
                grad = np.concatenate([g[k][act[k]] for k in range(K)] + ([np.array([gtau])] if tau_active else []))
                dirn = self._solve(self._neg_hessian(cur, act, tau_active), grad)
                blocked = (p <= tiny) & (dirn < 0)
                if not np.any(blocked):
                    break
                act, mass, tau_active = self._drop(act, mass, tau_active, ~blocked, cols)
                if not tau_active:
                    tau = 0.0
                cur = self._state_from_mass(act, mass, tau)
                fcur = self.objective(cur)
                g, beta = self.gradients(cur)
                gtau = -beta
            slope = float(np.dot(grad, dirn))
            if slope <= 0:
                dirn = np.where((p <= 0) & (grad < 0), 0.0, grad)
                slope = float(np.dot(grad, dirn))
            neg = dirn < 0
            ratios = np.full(p.size, np.inf)
            ratios[neg] = -p[neg] / dirn[neg]
            amax = float(np.min(ratios)) if np.any(neg) else np.inf
            step = min(1.0, amax)
            accepted = False
            flat = slope < 1e-14 * (1.0 + abs(fcur))
            for _ in range(80):
                pn = p + step * dirn
                if step == amax:
                    pn[ratios == amax] = 0.0
                pn = np.maximum(pn, 0.0)
                new_mass, new_tau = self._split(pn, cols, tau_active)
                trial = self._state_from_mass(act, new_mass, new_tau)
                fn = self.objective(trial)
                if fn > -np.inf and (fn >= fcur + ARMIJO_SLOPE * step * slope or flat):
                    accepted = True
                    break
                step *= ARMIJO_FACTOR
            if not accepted:
                return cur, it
            mass, tau = new_mass, new_tau
            keep = np.concatenate(mass + ([np.array([tau])] if tau_active else [])) > 0
            if not np.all(keep):
                act, mass, tau_active = self._drop(act, mass, tau_active, keep, cols)
            if not tau_active:
                tau = 0.0
            cur = self._state_from_mass(act, mass, tau)
            fcur = self.objective(cur)
        raise ConvergenceError("active-set Newton did not converge", cur, self.violation(cur), it)

    @staticmethod
    def _solve(Hm, grad):
        try:
            L = np.linalg.cholesky(Hm)
            return np.linalg.solve(L.T, np.linalg.solve(L, grad))
        except np.linalg.LinAlgError:
            ridge = 1e-12 * max(float(np.trace(Hm)), 1.0)
            return np.linalg.lstsq(Hm + ridge * np.eye(len(grad)), grad, rcond=None)[0]

    def _drop(self, act, mass, tau_active, keep, cols):
        start = 0
        for k, c in enumerate(cols):
            kk = keep[start:start + c]
            act[k] = act[k][kk]
            mass[k] = mass[k][kk]
            start += c
        if tau_active and not keep[start]:
            tau_active = False
        return act, mass, tau_active

    def _add_coordinates(self, g, gtau, act, mass, tau_active, add_tol, single):
        """Insert violating jump locations with zero mass; returns ``(added, tau_active)``."""
        picks = []  # (gradient, cause, index); cause -1 is the tail
        for k in self.active_causes:
            gk = g[k].copy()
            gk[act[k]] = -np.inf
            if not np.any(gk > add_tol):
                continue
            # best violator in each gap between active jumps
            edges = np.concatenate(([0], act[k], [gk.size]))
            for lo, hi in zip(edges[:-1], edges[1:]):
                if hi <= lo:
                    continue
                j = lo + int(np.argmax(gk[lo:hi]))
                if gk[j] > add_tol:
                    picks.append((float(gk[j]), k, j))
        if not tau_active and self.surv.size and gtau > add_tol:
            picks.append((gtau, -1, -1))
        if not picks:
            return False, tau_active
        if single:
            picks = [max(picks)]
        for _, k, j in picks:
            if k < 0:
                tau_active = True
                continue
            merged = np.append(act[k], j)
            order = np.argsort(merged, kind="stable")
            act[k] = merged[order]
            mass[k] = np.append(mass[k], 0.0)[order]
        return True, tau_active

    def _split(self, p, cols, tau_active):
        out = []
        start = 0
        for c in cols:
            out.append(p[start:start + c].copy())
            start += c
        tau = float(p[start]) if tau_active else 0.0
        return out, tau

    def _state_from_mass(self, act, mass, tau) -> State:
        x = []
        for k in range(self.K):
            M = self.cand[k].size
            if M == 0:
                x.append(np.empty(0))
                continue
            inc = np.zeros(M)
            inc[act[k]] = mass[k]
            x.append(np.cumsum(inc))
        return State(x, float(tau))

    def _neg_hessian(self, st: State, act, tau_active):
        """Negative Hessian of the criterion in the active mass coordinates."""
        S = self.surv_args(st)
        v = self.sw / S**2
        # V[q] = sum of survival curvature at distinct-time indices < q
        Vsurv = np.concatenate(([0.0], np.cumsum(v)))
        q_list = []
        blocks = []
        for k in range(self.K):
            a = act[k]
            if a.size == 0:
                continue
            w = self.cw[k] / st.x[k] ** 2
            Wtail = np.cumsum(w[::-1])[::-1]
            blocks.append((len(q_list), a.size, Wtail[a]))
            q_list.extend(self.surv_before[k][a].tolist())
        if tau_active:
            q_list.append(self.surv.size)
        q = np.array(q_list, dtype=np.int64)
        H = Vsurv[np.minimum.outer(q, q)]
        for start, size, Wt in blocks:
            idx = np.arange(size)
            H[start:start + size, start:start + size] += Wt[np.maximum.outer(idx, idx)]
        return H


def initial_state(p: Problem, naive_values, guard: float) -> State:
    """Naive estimate shrunk so the total stays below one, floored away from zero."""
    vals = [np.asarray(v, dtype=float) for v in naive_values]
    total = np.zeros(p.m)
    for k in range(p.K):
        total += vals[k]
    scale = (1 - 1e-6) / max(1.0, float(np.max(total)))
    x = []
    for k in range(p.K):
        if p.cand[k].size == 0:
            x.append(np.empty(0))
            continue
        xk = np.maximum(vals[k][p.cand[k]] * scale, guard)
        x.append(np.maximum.accumulate(xk))
    top = sum(float(xk[-1]) for xk in x if xk.size)
    if top >= 1.0:
        shrink = (1 - 1e-6) / top
        x = [xk * shrink for xk in x]
        top *= shrink
    tau = max(1.0 - top, 0.0) if p.surv.size else 0.0
    return State(x, tau)
