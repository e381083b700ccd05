"""Seeded Monte Carlo rate experiments.

Replication ``rep`` draws its data from the stream ``(base_seed, rep)``, so
the sample of size ``n`` is a prefix of the sample of size ``n' > n`` and
every estimator sees the same data. Replications can run in a process pool;
results are reduced in replication order, so the output does not depend on
the pool size.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .estimators import ConvergenceError, mle_estimate, naive_estimate
from .io import fmt
from .metrics import hellinger, lr_distance
from .simulation import sample_dataset, uniform_rate_statistic
from .truth import TruthModel, default_truth


@dataclass(frozen=True)
class RateConfig:
    tm: TruthModel = field(default_factory=default_truth)
    t0: float = 1.0
    n_grid: tuple[int, ...] = (500, 1000, 2000, 4000, 8000)
    reps: int = 100
    base_seed: int = 20240611
    estimators: tuple[str, ...] = ("mle", "naive")
    uniform_r: float = 0.5
    beta: float = 0.5

    def __post_init__(self):
        grid = tuple(int(n) for n in self.n_grid)
        object.__setattr__(self, "n_grid", grid)
        object.__setattr__(self, "estimators", tuple(self.estimators))
        if len(grid) < 3 or any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] < 1:
            raise ValueError("n_grid must be strictly increasing positive integers, length >= 3")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if not self.estimators or any(e not in ("mle", "naive") for e in self.estimators):
            raise ValueError("estimators must be drawn from {'mle', 'naive'}")
        lo, hi = self.tm.G.support
        if not lo < self.t0 < hi:
            raise ValueError("t0 must lie inside the support of G")

    def to_dict(self) -> dict:
        return {
            "truth": self.tm.to_dict(),
            "t0": self.t0,
            "n_grid": list(self.n_grid),
            "reps": self.reps,
            "base_seed": self.base_seed,
            "estimators": list(self.estimators),
            "uniform_r": self.uniform_r,
            "beta": self.beta,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "RateConfig":
        kw = {}
        if "truth" in obj:
            kw["tm"] = TruthModel.from_dict(obj["truth"])
        for key in ("t0", "uniform_r", "beta"):
            if key in obj:
                kw[key] = float(obj[key])
        for key in ("reps", "base_seed"):
            if key in obj:
                kw[key] = int(obj[key])
        if "n_grid" in obj:
            kw["n_grid"] = tuple(obj["n_grid"])
        if "estimators" in obj:
            kw["estimators"] = tuple(obj["estimators"])
        return cls(**kw)


def jump_spacing(comp, t0: float, support: tuple[float, float]) -> tuple[float, bool]:
    """``tau^+ - tau^-`` around ``t0``; flagged when one side falls back to the support edge."""
    jt = comp.jump_times
    below = jt[jt <= t0]
    above = jt[jt > t0]
    flagged = below.size == 0 or above.size == 0
    lo = below[-1] if below.size else support[0]
    hi = above[0] if above.size else support[1]
    return float(hi - lo), flagged


def local_sup(comp, target: float, t0: float, h: float) -> float:
    """``sup |F_k(t) - target|`` over ``[t0 - h, t0 + h]`` for a step function."""
    jt = comp.jump_times
    inside = jt[(jt > t0 - h) & (jt <= t0 + h)]
    pts = np.concatenate(([t0 - h, t0 + h], inside))
    vals = np.concatenate((comp(pts), comp.left_limit(inside)))
    return float(np.max(np.abs(vals - target)))


def replication_metrics(cfg: RateConfig, rep: int) -> dict:
    """All statistics for one replication across the ``n`` grid and estimators."""
    tm = cfg.tm
    F0_t0 = tm.eval(cfg.t0)
    out = {"failures": []}
    for n in cfg.n_grid:
        d = sample_dataset(tm, n, (cfg.base_seed, rep))
        for est in cfg.estimators:
            key = (n, est)
            try:
                system = mle_estimate(d).system if est == "mle" else naive_estimate(d).system
            except ConvergenceError as err:
                out["failures"].append((n, est, str(err)))
                continue
            row = {
                "hellinger": hellinger(system, tm, tm.G).value,
                "l1": lr_distance(system, tm, tm.G, 1).value,
                "l2": lr_distance(system, tm, tm.G, 2).value,
                "uniform": uniform_rate_statistic(system, tm, cfg.t0, cfg.uniform_r, n, cfg.beta),
            }
            h = n ** (-1.0 / 3.0)
            flags = 0
            for k, comp in enumerate(system.components, start=1):
                row[f"local_err_{k}"] = abs(float(comp(cfg.t0)) - float(F0_t0[k - 1]))
                spacing, flagged = jump_spacing(comp, cfg.t0, tm.G.support)
                row[f"spacing_{k}"] = spacing
                flags += flagged
                row[f"local_sup_{k}"] = local_sup(comp, float(F0_t0[k - 1]), cfg.t0, h)
            row["spacing_flags"] = flags
            out[key] = row
    return out


def _threads() -> int:
    env = os.environ.get("CRCS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"CRCS_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _run_reps(cfg: RateConfig, workers: int) -> list[dict]:
    if workers <= 1 or cfg.reps == 1:
        return [replication_metrics(cfg, rep) for rep in range(cfg.reps)]
    with ProcessPoolExecutor(max_workers=min(workers, cfg.reps)) as pool:
        return list(pool.map(replication_metrics, [cfg] * cfg.reps, range(cfg.reps)))


def ols_slope(x, y) -> float:
    x = np.log(np.asarray(x, dtype=float))
    y = np.log(np.asarray(y, dtype=float))
    if not np.all(np.isfinite(y)):
        return math.nan
    xc = x - x.mean()
    return float(np.sum(xc * (y - y.mean())) / np.sum(xc * xc))


@dataclass(frozen=True)
class RateTable:
    config: RateConfig
    rows: tuple[dict, ...]
    slopes: tuple[dict, ...]
    failures: tuple[tuple, ...]
    spacing_flags: int

    def median(self, metric: str) -> np.ndarray:
        return np.array([r["median"] for r in self.rows if r["metric"] == metric])

    def slope(self, metric: str) -> float:
        for s in self.slopes:
            if s["metric"] == metric:
                return s["slope"]
        raise KeyError(metric)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "metric", "q25", "median", "q75", "slope_rowid"])
        for r in self.rows:
            w.writerow([r["n"], r["metric"], fmt(r["q25"]), fmt(r["median"]), fmt(r["q75"]), r["slope_rowid"]])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "slopes": list(self.slopes),
            "failures": [{"n": n, "estimator": e, "message": m} for n, e, m in self.failures],
            "failure_count": len(self.failures),
            "spacing_flags": self.spacing_flags,
        }

    def slope_table(self) -> str:
        lines = [f"{'metric':<24} {'slope':>10}"]
        lines += [f"{s['metric']:<24} {s['slope']:>10.4f}" for s in self.slopes]
        return "\n".join(lines) + "\n"


def rate_experiment(cfg: RateConfig, workers: int | None = None) -> RateTable:
    """Medians and quartiles per ``n`` plus log-log OLS slopes of the medians."""
    results = _run_reps(cfg, _threads() if workers is None else workers)
    failures = tuple(f for res in results for f in res["failures"])
    names = ["hellinger", "l1", "l2", "uniform"]
    for k in range(1, cfg.tm.K + 1):
        names += [f"local_err_{k}", f"spacing_{k}", f"local_sup_{k}"]
    rows, slopes = [], []
    flags = 0
    for est in cfg.estimators:
        for name in names:
            metric = f"{est}/{name}"
            rowid = len(slopes)
            meds = []
            for n in cfg.n_grid:
                vals = np.array([res[(n, est)][name] for res in results if (n, est) in res])
                q25, med, q75 = (np.quantile(vals, [0.25, 0.5, 0.75]) if vals.size else (math.nan,) * 3)
                rows.append({"n": n, "metric": metric, "q25": float(q25), "median": float(med),
                             "q75": float(q75), "slope_rowid": rowid})
                meds.append(med)
            slopes.append({"rowid": rowid, "metric": metric, "slope": ols_slope(cfg.n_grid, meds)})
        flags += sum(res[(n, est)]["spacing_flags"] for res in results for n in cfg.n_grid if (n, est) in res)
    return RateTable(cfg, tuple(rows), tuple(slopes), failures, flags)
