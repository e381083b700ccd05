"""Seeded sampling, the local processes W_nk / S_nk, the v_n envelope and
the two-point minimax construction."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Dataset, dataset_from_arrays
from .truth import LocalTruth, TruthModel

D_CONSTANT = 2.0 ** (-5.0 / 3.0) * math.exp(-1.0 / 3.0)


def _uniforms(seed, n: int) -> np.ndarray:
    """``(n, 3)`` uniforms; row ``i`` depends only on ``seed`` and ``i``.

    Philox is counter based and fills the array in order, so a longer
    sample extends a shorter one with the same seed.
    """
    ss = np.random.SeedSequence(seed)
    gen = np.random.Generator(np.random.Philox(ss))
    return gen.random((n, 3))


def sample_dataset(tm: TruthModel, n: int, seed) -> Dataset:
    """Draw ``T ~ G``, the cause ``Y`` with ``P(Y = k) = p_k``, then ``X | Y``.

    ``seed`` is an int or a sequence of ints (e.g. ``(base_seed, rep)``).
    """
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    u = _uniforms(seed, int(n))
    T = tm.G.ppf(u[:, 0])
    cum = np.cumsum(tm.cause_probs)
    Y = np.searchsorted(cum, u[:, 1], side="right") + 1  # K+1: never fails
    status = np.zeros(int(n), dtype=np.int64)
    for k, shape in enumerate(tm.cause_shapes, start=1):
        sel = Y == k
        X = shape.ppf(u[sel, 2])
        status[sel] = np.where(X <= T[sel], k, 0)
    return dataset_from_arrays(T, status, tm.K)


def sample_from_system(F, G, n: int, seed) -> Dataset:
    """Draw ``T ~ G`` and the status from the multinomial law with cells ``F_k(T)``.

    Used for truths that are not of the ``p_k * cdf`` form, such as the
    perturbed systems of :func:`minimax_perturbation`.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    u = _uniforms(seed, int(n))
    T = G.ppf(u[:, 0])
    cum = np.cumsum(np.asarray(F.eval(T)).reshape(F.K, -1), axis=0)
    # status k when u lands in the k-th cell, survival beyond F_+(T)
    k = (u[:, 1][None, :] >= cum).sum(axis=0) + 1
    status = np.where(k <= F.K, k, 0)
    return dataset_from_arrays(T, status, F.K)


def w_s_processes(d: Dataset, tm: TruthModel, lt: LocalTruth, t: float) -> dict:
    """Empirical ``W_nk(t)``, ``W_n+(t)`` and ``S_nk(t) = a_k W_nk + a_{K+1} W_n+``."""
    keep = d.times <= t
    F0 = np.asarray(tm.eval(d.times[keep])).reshape(d.k_causes, -1)
    cnt = d.counts[keep]
    m = cnt.sum(axis=1)
    W = np.array([(cnt[:, k] - m * F0[k - 1]).sum() / d.n for k in range(1, d.k_causes + 1)])
    W_plus = float(W.sum())
    a = lt.a
    S = np.array([a[k] * W[k] + a[-1] * W_plus for k in range(d.k_causes)])
    return {"W": W, "W_plus": W_plus, "S": S}


def vn_envelope(n: int, t, beta: float = 0.5):
    """``n^(-1/3)`` within ``n^(-1/3)`` of zero, ``n^(-(1-beta)/3) |t|^beta`` outside."""
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    t = np.abs(np.asarray(t, dtype=float))
    h = n ** (-1.0 / 3.0)
    out = np.where(t <= h, h, n ** (-(1.0 - beta) / 3.0) * t**beta)
    return out if out.ndim else float(out)


def uniform_rate_statistic(estimate, tm: TruthModel, t0: float, r: float, n: int, beta: float = 0.5) -> float:
    """``sup |F_n+(t) - F_0+(t)| / v_n(t - t0)`` over ``[t0 - r, t0 + r]``.

    Evaluated at both one-sided limits of every jump of the estimate in the
    window and on a 512-point grid; with ``F_0+`` monotone this catches the
    supremum of the numerator on each flat stretch.
    """
    lo, hi = t0 - r, t0 + r
    grid = np.linspace(lo, hi, 512)
    bp = np.asarray(estimate.breakpoints(), dtype=float)
    bp = bp[(bp >= lo) & (bp <= hi)]
    pts = np.concatenate((grid, bp))
    right = np.asarray(estimate.eval(pts)).reshape(estimate.K, -1).sum(axis=0)
    vals = [np.abs(right - tm.f_plus(pts)) / vn_envelope(n, pts - t0, beta)]
    if bp.size:
        left = np.asarray(estimate.left_eval(bp)).reshape(estimate.K, -1).sum(axis=0)
        vals.append(np.abs(left - tm.f_plus(bp)) / vn_envelope(n, bp - t0, beta))
    return float(np.max(np.concatenate(vals)))


@dataclass(frozen=True)
class PerturbedTruth:
    """``F_0`` with cause ``k`` flattened on ``[t0 - h, t0)`` and ``[t0, t0 + h)``."""

    base: TruthModel
    k: int
    t0: float
    h: float

    @property
    def K(self) -> int:
        return self.base.K

    @property
    def G(self):
        return self.base.G

    def eval(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.array(self.base.eval(t), dtype=float)
        comp = self._component
        low = (t >= self.t0 - self.h) & (t < self.t0)
        high = (t >= self.t0) & (t < self.t0 + self.h)
        out[self.k - 1] = np.where(low, comp(self.t0 - self.h), np.where(high, comp(self.t0 + self.h), out[self.k - 1]))
        return out

    def left_eval(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.array(self.base.eval(t), dtype=float)
        comp = self._component
        low = (t > self.t0 - self.h) & (t <= self.t0)
        high = (t > self.t0) & (t <= self.t0 + self.h)
        out[self.k - 1] = np.where(low, comp(self.t0 - self.h), np.where(high, comp(self.t0 + self.h), out[self.k - 1]))
        return out

    def _component(self, t) -> float:
        return float(self.base.cause_probs[self.k - 1] * self.base.cause_shapes[self.k - 1].cdf(t))

    def breakpoints(self) -> np.ndarray:
        return np.array([self.t0 - self.h, self.t0, self.t0 + self.h])

    def total_at_infinity(self) -> float:
        return self.base.total_at_infinity()

    def f_plus(self, t):
        return self.eval(t).sum(axis=0)


def minimax_perturbation(tm: TruthModel, k: int, c: float, n: int, t0: float) -> PerturbedTruth:
    if not 1 <= k <= tm.K:
        raise ValueError(f"k must be in 1..{tm.K}")
    if not c > 0:
        raise ValueError("c must be positive")
    return PerturbedTruth(tm, int(k), float(t0), float(c) * n ** (-1.0 / 3.0))


def _bracket(lt: LocalTruth, k: int, survival: float) -> float:
    return lt.g_at_t0 / lt.f0k_at_t0[k - 1] * (1.0 / lt.F0k_at_t0[k - 1] + 1.0 / survival)


def minimax_bound(lt: LocalTruth, k: int, r: int = 1) -> dict:
    """Asymptotic two-point lower bound for ``n^(r/3)`` times the risk at ``t0``.

    ``single_risk`` is the bound for the reduced data of cause ``k`` alone,
    which replaces ``1 - F_0+(t0)`` by ``1 - F_0k(t0)``.
    """
    if not 1 <= k <= lt.K:
        raise ValueError(f"k must be in 1..{lt.K}")
    if r < 1:
        raise ValueError("r must be >= 1")
    joint = D_CONSTANT**r * _bracket(lt, k, 1.0 - lt.F0plus_at_t0) ** (-r / 3.0)
    single = D_CONSTANT**r * _bracket(lt, k, 1.0 - lt.F0k_at_t0[k - 1]) ** (-r / 3.0)
    return {"d": D_CONSTANT, "bound": joint, "single_risk": single}


def optimal_c(lt: LocalTruth, k: int) -> float:
    """Window constant that maximizes the two-point bound to first order."""
    f = lt.f0k_at_t0[k - 1]
    B = 1.0 / lt.F0k_at_t0[k - 1] + 1.0 / (1.0 - lt.F0plus_at_t0)
    return (2.0 / (lt.g_at_t0 * f * f * B)) ** (1.0 / 3.0)


def two_point_risk(tm: TruthModel, k: int, c: float, n: int, t0: float, reps: int, seed: int,
                   estimator: str = "mle", r: int = 1) -> dict:
    """Monte Carlo risks of an estimator of ``F_0k(t0)`` under ``F_0`` and ``F_n^k``."""
    from .estimators import mle_estimate, naive_estimate
    from .truth import local_truth

    if reps < 1:
        raise ValueError("reps must be >= 1")
    if estimator not in ("mle", "naive"):
        raise ValueError(f"unknown estimator {estimator!r}")
    pert = minimax_perturbation(tm, k, c, n, t0)
    target0 = float(tm.eval(t0)[k - 1])
    target1 = float(pert.eval(t0)[k - 1])
    fit = mle_estimate if estimator == "mle" else naive_estimate
    e0, e1 = [], []
    for rep in range(reps):
        d0 = sample_dataset(tm, n, (seed, rep, 0))
        d1 = sample_from_system(pert, tm.G, n, (seed, rep, 1))
        u0 = float(fit(d0).components[k - 1](t0))
        u1 = float(fit(d1).components[k - 1](t0))
        e0.append(abs(u0 - target0) ** r)
        e1.append(abs(u1 - target1) ** r)
    risk0, risk1 = float(np.mean(e0)), float(np.mean(e1))
    mx = max(risk0, risk1)
    return {
        "risk_at_F0": risk0,
        "risk_at_Fnk": risk1,
        "max_risk": mx,
        "scaled_max_risk": n ** (r / 3.0) * mx,
        "bound": minimax_bound(local_truth(tm, t0), k, r)["bound"],
    }
