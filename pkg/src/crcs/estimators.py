"""The naive estimator, the joint MLE and a brute-force oracle for tiny data."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .certify import FenchelReport, fenchel_check, loglik
from .isotonic import CumSumDiagram, gcm_left_slopes
from .model import Dataset, StepFn, SubDistSystem
from ._solver import ConvergenceError, Problem, State, initial_state

__all__ = [
    "ConvergenceError",
    "MleResult",
    "NaiveResult",
    "brute_force_mle",
    "mle_estimate",
    "naive_estimate",
    "support_sets",
    "uniqueness_report",
]


@dataclass(frozen=True)
class NaiveResult:
    components: tuple[StepFn, ...]
    sum_violations: tuple[tuple[float, float], ...]

    @property
    def system(self) -> SubDistSystem:
        return SubDistSystem(self.components, sum_tolerance=None)


@dataclass(frozen=True)
class MleResult:
    system: SubDistSystem
    tail_mass_total: float
    tail_unique: bool
    loglik: float
    certificate: FenchelReport
    iterations: int

    @property
    def components(self) -> tuple[StepFn, ...]:
        return self.system.components


def _naive_values(d: Dataset) -> list[np.ndarray]:
    w = d.counts.sum(axis=1).astype(float)
    out = []
    for k in range(1, d.k_causes + 1):
        frac = d.counts[:, k] / w
        out.append(gcm_left_slopes(CumSumDiagram.from_weights(w, frac)))
    return out


def naive_estimate(d: Dataset) -> NaiveResult:
    """Separate current status MLE for each cause, ignoring the others."""
    vals = _naive_values(d)
    comps = tuple(StepFn.from_values(d.times, np.clip(v, 0.0, 1.0)) for v in vals)
    total = np.sum([c(d.times) for c in comps], axis=0)
    viol = tuple((float(t), float(s)) for t, s in zip(d.times, total) if s > 1.0)
    return NaiveResult(comps, viol)


def _split_tail(values_at_end: list[float], tail: float) -> list[float]:
    """Share the undetermined tail mass in proportion to each ``F_k(T_(n))``."""
    if tail <= 0:
        return [0.0] * len(values_at_end)
    w = np.asarray(values_at_end, dtype=float)
    if w.sum() <= 0:
        w = np.ones_like(w)
    return (tail * w / w.sum()).tolist()


def _build_system(p: Problem, st: State, sum_tolerance=1e-10):
    d = p.d
    ends = [float(st.x[k][-1]) if st.x[k].size else 0.0 for k in range(p.K)]
    tails = _split_tail(ends, st.tau)
    comps = []
    for k in range(p.K):
        if st.x[k].size == 0:
            comps.append(StepFn(tail_mass=tails[k]))
        else:
            comps.append(StepFn.from_values(d.times[p.cand[k]], st.x[k], tail_mass=tails[k]))
    return SubDistSystem(tuple(comps), sum_tolerance)


def mle_estimate(
    d: Dataset,
    fenchel_tol: float = 1e-8,
    max_iters: int = 10000,
    interior_guard: float = 1e-10,
    icm_sweeps: int = 3,
) -> MleResult:
    """Joint nonparametric MLE of the sub-distribution functions.

    Starts from the (rescaled) naive estimator, runs up to ``icm_sweeps``
    block ICM sweeps and finishes with an active-set Newton method. The
    result is only returned once its optimality certificate passes at
    ``fenchel_tol``; otherwise :class:`ConvergenceError` is raised with
    the best iterate attached.
    """
    p = Problem(d)
    st = initial_state(p, _naive_values(d), interior_guard)
    iterations = 0
    for _ in range(min(icm_sweeps, max_iters)):
        iterations += 1
        moved = False
        for k in p.active_causes:
            st, ok = p.icm_block(st, k, interior_guard)
            moved |= ok
        if not moved or p.violation(st) <= 0.01 * fenchel_tol:
            break
    try:
        st, newton_iters = p.newton(st, fenchel_tol, max(max_iters - iterations, 1))
    except ConvergenceError as err:
        best = _build_system(p, err.best, sum_tolerance=None)
        raise ConvergenceError(str(err), best, err.violation, iterations + err.iterations) from None
    iterations += newton_iters
    system = _build_system(p, st, sum_tolerance=None)
    cert = fenchel_check(d, system, fenchel_tol)
    if not cert.passed:
        raise ConvergenceError(
            f"optimality certificate failed (violation {cert.max_violation:.3g})",
            system, cert.max_violation, iterations,
        )
    system = SubDistSystem(system.components)
    tail_unique = not bool(d.counts[-1, 0] > 0)
    return MleResult(
        system=system,
        tail_mass_total=float(1.0 - sum(c.last_value for c in system.components)),
        tail_unique=tail_unique,
        loglik=loglik(d, system),
        certificate=cert,
        iterations=iterations,
    )


# -- uniqueness structure ----------------------------------------------------


def support_sets(d: Dataset) -> list[dict]:
    """Per cause: the times where the MLE is unique and the intervals that can carry mass.

    Intervals are ``(left, right, form)`` triples meaning ``(left, right]``;
    form ``"i"`` runs from a survival observation to the next cause-``k``
    observation with nothing relevant in between (``left = -inf`` when no
    relevant observation precedes), form ``"ii"`` is ``(T_(n), inf)`` and
    exists only when a survivor sits at ``T_(n)``.
    """
    c = d.counts
    out = []
    last_survivor = bool(c[-1, 0] > 0)
    for k in range(1, d.k_causes + 1):
        relevant = (c[:, k] + c[:, 0]) > 0
        T_k = np.unique(np.concatenate((d.times[relevant], [d.t_max])))
        idx = np.nonzero(relevant)[0]
        intervals = []
        prev = None
        for j in idx:
            if c[j, k] > 0:
                if prev is None:
                    intervals.append((-math.inf, float(d.times[j]), "i"))
                elif c[prev, 0] > 0:
                    intervals.append((float(d.times[prev]), float(d.times[j]), "i"))
            prev = j
        if last_survivor:
            intervals.append((d.t_max, math.inf, "ii"))
        out.append({"T": T_k, "intervals": intervals})
    return out


def uniqueness_report(d: Dataset, m: MleResult | None = None) -> dict:
    sets = support_sets(d)
    return {
        "unique_at": [s["T"] for s in sets],
        "infinity_unique": not bool(d.counts[-1, 0] > 0),
    }


# -- brute-force oracle ------------------------------------------------------


def _brute_objective(d: Dataset, V: np.ndarray) -> np.ndarray:
    """Average log likelihood for a batch of value arrays of shape ``(N, K, m)``."""
    c = d.counts
    total = np.zeros(V.shape[0])
    with np.errstate(divide="ignore", invalid="ignore"):
        for k in range(1, d.k_causes + 1):
            for j in np.nonzero(c[:, k])[0]:
                total += c[j, k] * np.log(V[:, k - 1, j])
        surv = 1.0 - V.sum(axis=1)
        for j in np.nonzero(c[:, 0])[0]:
            total += c[j, 0] * np.log(surv[:, j])
    total = np.where(np.isnan(total), -np.inf, total)
    return total / d.n


def _feasible(V: np.ndarray) -> np.ndarray:
    ok = np.all(V >= 0, axis=(1, 2)) & np.all(V <= 1, axis=(1, 2))
    ok &= np.all(np.diff(V, axis=2) >= 0, axis=(1, 2))
    ok &= V[:, :, -1].sum(axis=1) <= 1.0 + 1e-15
    return ok


def _score(d, V):
    f = _brute_objective(d, V)
    return np.where(_feasible(V), f, -np.inf)


def brute_force_mle(d: Dataset, resolution: float = 1e-3) -> SubDistSystem:
    """Lattice search over values at the distinct times, then local refinement.

    Independent of :func:`mle_estimate`: it maximizes the plain log
    likelihood over all values at all distinct times with the sum
    constraint imposed directly. Only for ``K * m <= 8``.
    """
    K, m = d.k_causes, len(d.times)
    dim = K * m
    if dim > 8:
        raise ValueError(f"instance too large for brute force: K*m = {dim} > 8")
    # coarsest lattice whose full enumeration stays small
    J = max(0, int(math.floor(math.log2(0.25 / resolution))))
    while True:
        pitch = resolution * 2**J
        L = int(math.floor(1.0 / pitch)) + 1
        if math.comb(L + m - 1, m) ** K <= 300_000 or J == 0:
            break
        J += 1
    levels = np.arange(L) * pitch
    seqs = np.array(list(itertools.combinations_with_replacement(levels, m)))
    grids = np.stack(np.meshgrid(*([np.arange(len(seqs))] * K), indexing="ij"), -1).reshape(-1, K)
    V = seqs[grids]  # (N, K, m)
    V = V[V[:, :, -1].sum(axis=1) <= 1.0 + 1e-12]
    f = _score(d, V)
    best = V[int(np.argmax(f))].copy()
    fbest = float(np.max(f))

    moves = np.array(list(itertools.product((-1.0, 0.0, 1.0), repeat=dim)))
    moves = moves[np.any(moves != 0, axis=1)].reshape(-1, K, m)

    def pattern(best, fbest, h, stop):
        while h >= stop:
            cand = best[None] + h * moves
            f = _score(d, cand)
            i = int(np.argmax(f))
            if f[i] > fbest:
                best, fbest = cand[i].copy(), float(f[i])
            else:
                h /= 2
        return best, fbest

    best, fbest = pattern(best, fbest, pitch / 2, resolution)
    best, fbest = _golden_sweeps(d, best, fbest)
    # below-lattice polish from pairwise-coupled moves that coordinate sweeps cannot make
    best, fbest = pattern(best, fbest, resolution / 2, 1e-10)
    best, fbest = _golden_sweeps(d, best, fbest)
    comps = tuple(StepFn.from_values(d.times, best[k]) for k in range(K))
    return SubDistSystem(comps)


def _golden_sweeps(d, V, fV, sweeps=50):
    K, m = V.shape
    g = (math.sqrt(5) - 1) / 2
    for _ in range(sweeps):
        start = fV
        for k in range(K):
            for j in range(m):
                lo = V[k, j - 1] if j > 0 else 0.0
                hi = V[k, j + 1] if j < m - 1 else 1.0 - (V[:, -1].sum() - V[k, -1])
                if hi <= lo:
                    continue

                def f(x):
                    W = V.copy()
                    W[k, j] = x
                    return float(_score(d, W[None])[0])

                a, b = lo, hi
                x1, x2 = b - g * (b - a), a + g * (b - a)
                f1, f2 = f(x1), f(x2)
                for _ in range(80):
                    if f1 < f2:
                        a, x1, f1 = x1, x2, f2
                        x2 = a + g * (b - a)
                        f2 = f(x2)
                    else:
                        b, x2, f2 = x2, x1, f1
                        x1 = b - g * (b - a)
                        f1 = f(x1)
                    if b - a < 1e-14:
                        break
                for x in (x1, x2, lo, hi):
                    fx = f(x)
                    if fx > fV:
                        V = V.copy()
                        V[k, j] = x
                        fV = fx
        if fV - start < 1e-15:
            break
    return V, fV
