"""Likelihoods and the optimality certificate for the joint MLE.

For a candidate system ``F`` and data with distinct times ``u_1 < ... < u_m``
the certificate works with

    H_k(t) = (1/n) sum_{u_j >= t} [ c_kj / F_k(u_j) - c_0j / F_{K+1}(u_j) ],
    beta   = 1 - (1/n) sum_j c_0j / F_{K+1}(u_j),

where ``c_kj`` counts cause-``k`` failures and ``c_0j`` survivors at ``u_j``
and ``F_{K+1} = F_+(inf) - F_+``. ``F`` is the MLE exactly when
``H_k(t) <= beta`` for every ``t`` with equality at every jump of ``F_k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import Dataset, SubDistSystem, StepFn


class InfeasibleEstimateError(ValueError):
    """A likelihood term has a zero (or negative) argument."""


@dataclass(frozen=True)
class CauseReport:
    max_inequality_violation: float
    max_equality_gap: float
    worst_t: float
    prop26_max_violation: float
    prop26_integral: float


@dataclass(frozen=True)
class FenchelReport:
    beta: float
    per_cause: tuple[CauseReport, ...]
    passed: bool
    tol: float
    prop26_passed: bool = field(default=False)

    @property
    def max_violation(self) -> float:
        return max(max(c.max_inequality_violation, c.max_equality_gap) for c in self.per_cause)

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "passed": self.passed,
            "tol": self.tol,
            "prop26_passed": self.prop26_passed,
            "per_cause": [
                {
                    "max_inequality_violation": c.max_inequality_violation,
                    "max_equality_gap": c.max_equality_gap,
                    "worst_t": c.worst_t,
                    "prop26_max_violation": c.prop26_max_violation,
                    "prop26_integral": c.prop26_integral,
                }
                for c in self.per_cause
            ],
        }


def vnk(d: Dataset, k: int) -> StepFn:
    """Empirical sub-distribution ``V_nk``; ``k = K+1`` counts survivors."""
    if not 1 <= k <= d.k_causes + 1:
        raise ValueError(f"k must be in 1..{d.k_causes + 1}, got {k}")
    col = 0 if k == d.k_causes + 1 else k
    c = d.counts[:, col]
    keep = c > 0
    return StepFn(d.times[keep], np.cumsum(c[keep]) / d.n)


def _values(d: Dataset, F: SubDistSystem):
    """``F_k(u_j)`` (shape ``(K, m)``) and ``F_{K+1}(u_j)`` on the cone."""
    if F.K != d.k_causes:
        raise ValueError(f"system has {F.K} components, data has K={d.k_causes}")
    vals = F.eval(d.times)
    surv = F.total_at_infinity() - vals.sum(axis=0)
    return vals, surv


def _log_terms(d: Dataset, vals, surv):
    c = d.counts
    total = 0.0
    for k in range(1, d.k_causes + 1):
        m = c[:, k] > 0
        if np.any(vals[k - 1, m] <= 0):
            return -np.inf
        total += float(np.sum(c[m, k] * np.log(vals[k - 1, m])))
    m = c[:, 0] > 0
    if np.any(surv[m] <= 0):
        return -np.inf
    total += float(np.sum(c[m, 0] * np.log(surv[m])))
    return total / d.n


def loglik(d: Dataset, F: SubDistSystem) -> float:
    """Average log likelihood with survival probability ``1 - F_+(t)``."""
    vals = F.eval(d.times)
    if F.K != d.k_causes:
        raise ValueError(f"system has {F.K} components, data has K={d.k_causes}")
    return _log_terms(d, vals, 1.0 - vals.sum(axis=0))


def cone_loglik(d: Dataset, F: SubDistSystem) -> float:
    """Unconstrained criterion: log terms with ``F_{K+1} = F_+(inf) - F_+`` minus ``F_+(inf)``."""
    vals, surv = _values(d, F)
    return _log_terms(d, vals, surv) - F.total_at_infinity()


def _reciprocals(d: Dataset, vals, surv):
    c = d.counts
    K = d.k_causes
    cause = np.zeros((K, len(d.times)))
    for k in range(1, K + 1):
        m = c[:, k] > 0
        if np.any(vals[k - 1, m] <= 0):
            j = int(np.nonzero(m & (vals[k - 1] <= 0))[0][0])
            raise InfeasibleEstimateError(f"F_{k}({d.times[j]}) = 0 at a cause-{k} observation")
        cause[k - 1, m] = c[m, k] / vals[k - 1, m]
    m = c[:, 0] > 0
    if np.any(surv[m] <= 0):
        j = int(np.nonzero(m & (surv <= 0))[0][0])
        raise InfeasibleEstimateError(f"F_(K+1)({d.times[j]}) = 0 at a survival observation")
    survival = np.zeros(len(d.times))
    survival[m] = c[m, 0] / surv[m]
    return cause / d.n, survival / d.n


def _beta(survival_recip) -> float:
    return 1.0 - float(np.sum(survival_recip))


def beta_stat(d: Dataset, F: SubDistSystem) -> float:
    vals, surv = _values(d, F)
    _, srec = _reciprocals(d, vals, surv)
    return _beta(srec)


def h_process(d: Dataset, F: SubDistSystem) -> np.ndarray:
    """``H_k`` at every distinct time, shape ``(K, m)``; ``H_k = 0`` beyond ``T_(n)``."""
    vals, surv = _values(d, F)
    crec, srec = _reciprocals(d, vals, surv)
    return _rev_cumsum(crec - srec[None, :])


def _rev_cumsum(a):
    return np.cumsum(a[..., ::-1], axis=-1)[..., ::-1]


def h_at(d: Dataset, H: np.ndarray, t) -> np.ndarray:
    """Evaluate the left-continuous ``H`` (one row) at arbitrary points."""
    idx = np.searchsorted(d.times, np.asarray(t, dtype=float), side="left")
    return np.concatenate((H, [0.0]))[idx]


def fenchel_check(d: Dataset, F: SubDistSystem, tol: float = 1e-8) -> FenchelReport:
    """Check the optimality conditions for ``F`` on data ``d``.

    Inequalities are checked at every distinct time and just beyond
    ``T_(n)``; equalities at every jump of each component, plus a point
    beyond ``T_(n)`` when a component carries tail mass.
    """
    vals, surv = _values(d, F)
    crec, srec = _reciprocals(d, vals, surv)
    beta = _beta(srec)
    H = _rev_cumsum(crec - srec[None, :])
    # Eq. (7)-style left-hand side: forward cause part + backward survival part
    before = np.concatenate(([0.0], np.cumsum(srec)[:-1]))
    A = _rev_cumsum(crec) + before[None, :]
    total_srec = float(np.sum(srec))
    reports = []
    for k, comp in enumerate(F.components):
        ineq = H[k] - beta
        j = int(np.argmax(ineq))
        worst_val, worst_t = float(ineq[j]), float(d.times[j])
        if -beta > worst_val:
            worst_val, worst_t = -beta, float(np.inf)
        gaps = [0.0]
        gap_t = [float("nan")]
        p26_terms = []
        if comp.jump_times.size:
            jumps = comp.jump_times
            incs = comp.increments()
            Hj = h_at(d, H[k], jumps)
            gaps.extend(np.abs(Hj - beta).tolist())
            gap_t.extend(jumps.tolist())
            idx = np.searchsorted(d.times, jumps, side="left")
            Aj = np.concatenate((A[k], [total_srec]))[idx]
            p26_terms.extend(((Aj - 1.0) * incs).tolist())
        if comp.tail_mass > 0:
            gaps.append(abs(beta))
            gap_t.append(float(np.inf))
            p26_terms.append((total_srec - 1.0) * comp.tail_mass)
        g = int(np.argmax(gaps))
        max_gap = float(gaps[g])
        ineq_v = max(worst_val, 0.0)
        if max_gap > ineq_v:
            worst_t = gap_t[g]
        p26_viol = max(float(np.max(A[k] - 1.0)), total_srec - 1.0, 0.0)
        reports.append(CauseReport(ineq_v, max_gap, worst_t, p26_viol, float(np.sum(p26_terms))))
    passed = all(r.max_inequality_violation <= tol and r.max_equality_gap <= tol for r in reports)
    p26 = all(r.prop26_max_violation <= tol and abs(r.prop26_integral) <= tol for r in reports)
    return FenchelReport(beta, tuple(reports), passed, tol, p26)
