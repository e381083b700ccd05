import numpy as np

from crcs.model import StepFn, SubDistSystem, dataset_from_arrays, validate_dataset
from crcs.truth import Exponential, TruncatedExponential, TruthModel, Uniform, Weibull


def random_dataset(rng, K, n, distinct=None, survival_bias=None):
    """Random rows; ``distinct`` caps the number of distinct times."""
    if distinct is None:
        times = rng.uniform(0, 2, n)
    else:
        grid = np.sort(rng.uniform(0, 2, distinct))
        times = np.concatenate([grid, rng.choice(grid, max(n - distinct, 0))])[:n]
    p = None
    if survival_bias is not None:
        p = np.full(K + 1, (1 - survival_bias) / K)
        p[0] = survival_bias
    status = rng.choice(K + 1, size=times.size, p=p)
    return dataset_from_arrays(times, status, K)


def tiny_dataset(rng, K_max=2, m_max=4):
    """``K <= K_max`` and at most ``m_max`` distinct times with ``K * m <= 8``."""
    K = int(rng.integers(1, K_max + 1))
    m = int(rng.integers(1, min(m_max, 8 // K) + 1))
    grid = np.arange(1, m + 1, dtype=float)
    extra = rng.choice(grid, int(rng.integers(0, 6)))
    times = np.concatenate([grid, extra])
    status = rng.integers(0, K + 1, times.size)
    return validate_dataset(list(zip(times, status)), K)


def random_system(rng, times, K, strictly_positive=True):
    """Random feasible system with jumps at ``times`` and some tail mass."""
    m = len(times)
    inc = rng.dirichlet(np.ones(K * (m + 1) + 1)).reshape(-1)
    cells = inc[:-1].reshape(K, m + 1)
    if strictly_positive:
        cells = cells + 1e-3
        cells = cells / (cells.sum() + 1e-3)
    comps = []
    for k in range(K):
        vals = np.cumsum(cells[k, :m])
        comps.append(StepFn.from_values(times, vals, tail_mass=float(cells[k, m])))
    return SubDistSystem(tuple(comps))


def mix(a: SubDistSystem, b: SubDistSystem, eps: float) -> SubDistSystem:
    """``(1 - eps) a + eps b`` on the union of breakpoints."""
    pts = np.union1d(a.breakpoints(), b.breakpoints())
    comps = []
    for ca, cb in zip(a.components, b.components):
        vals = (1 - eps) * ca(pts) + eps * cb(pts)
        tail = (1 - eps) * ca.at_infinity + eps * cb.at_infinity - (vals[-1] if pts.size else 0.0)
        comps.append(StepFn.from_values(pts, vals, tail_mass=max(tail, 0.0)))
    return SubDistSystem(tuple(comps))


def random_triple(rng):
    """Random ``(F, F0, G)``: a step system against a step system or a truth model."""
    K = int(rng.integers(1, 4))
    a, b = sorted(rng.uniform(0, 3, 2))
    b += 0.1
    G = Uniform(a, b) if rng.integers(0, 2) else TruncatedExponential(float(rng.uniform(0.2, 3)), a, b)
    F = random_system(rng, np.sort(rng.uniform(a - 0.5, b + 0.5, int(rng.integers(1, 30)))), K)
    if rng.integers(0, 2):
        p = rng.dirichlet(np.ones(K + 1))[:K]
        shapes = [Exponential(float(rng.uniform(0.3, 3))) if rng.integers(0, 2)
                  else Weibull(float(rng.uniform(0.5, 3)), float(rng.uniform(0.5, 2))) for _ in range(K)]
        F0 = TruthModel(tuple(p), tuple(shapes), G)
    else:
        F0 = random_system(rng, np.sort(rng.uniform(a, b, int(rng.integers(1, 30)))), K)
    return F, F0, G


def discretize(system, x) -> SubDistSystem:
    """Sample an evaluable system on ``x`` into a validated step system."""
    vals = np.asarray(system.eval(x))
    return SubDistSystem(tuple(StepFn.from_values(x, v) for v in vals))
