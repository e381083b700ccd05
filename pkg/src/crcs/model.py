"""Core data types: observations, tie-aggregated datasets and step functions.

Status encoding: ``0`` means the unit was still alive at its inspection time,
``k >= 1`` means it had already failed from cause ``k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np


class DataError(ValueError):
    """Raised when raw observations cannot form a valid dataset."""


class ConstraintError(ValueError):
    """Raised when a system of sub-distribution functions sums above one."""

    def __init__(self, message: str, witness: float):
        super().__init__(message)
        self.witness = witness


@dataclass(frozen=True)
class Observation:
    time: float
    status: int


@dataclass(frozen=True, eq=False)
class Dataset:
    """Current status observations with ``K`` competing causes.

    ``times`` holds the strictly increasing distinct inspection times and
    ``counts[j, s]`` the number of units inspected at ``times[j]`` with
    status ``s`` (column 0 is survival).
    """

    k_causes: int
    obs: tuple[Observation, ...]
    times: np.ndarray
    counts: np.ndarray

    @property
    def n(self) -> int:
        return len(self.obs)

    @property
    def t_max(self) -> float:
        return float(self.times[-1])

    @property
    def distinct(self) -> list[tuple[float, tuple[int, ...]]]:
        return [(float(t), tuple(int(c) for c in row)) for t, row in zip(self.times, self.counts)]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.k_causes == other.k_causes and self.obs == other.obs

    def __hash__(self):
        return hash((self.k_causes, self.obs))


def validate_dataset(raw: Iterable[Sequence], K: int) -> Dataset:
    """Sort, check and tie-aggregate raw ``(time, status)`` rows."""
    if int(K) != K or K < 1:
        raise DataError(f"number of causes must be a positive integer, got {K!r}")
    K = int(K)
    rows = []
    for i, row in enumerate(raw):
        try:
            t, s = row
        except (TypeError, ValueError):
            raise DataError(f"row {i}: expected (time, status), got {row!r}") from None
        t = float(t)
        if not math.isfinite(t):
            raise DataError(f"row {i}: non-finite time {t!r}")
        if isinstance(s, float) and not s.is_integer():
            raise DataError(f"row {i}: status must be an integer, got {s!r}")
        s = int(s)
        if not 0 <= s <= K:
            raise DataError(f"row {i}: status out of range: {s} not in 0..{K}")
        rows.append(Observation(t, s))
    if not rows:
        raise DataError("dataset is empty")
    rows.sort(key=lambda o: (o.time, o.status))
    t_arr = np.array([o.time for o in rows])
    s_arr = np.array([o.status for o in rows])
    times, inverse = np.unique(t_arr, return_inverse=True)
    counts = np.zeros((len(times), K + 1), dtype=np.int64)
    np.add.at(counts, (inverse, s_arr), 1)
    return Dataset(K, tuple(rows), times, counts)


def dataset_from_arrays(times, statuses, K: int) -> Dataset:
    """Fast path for simulated data (no per-row Python validation beyond ranges)."""
    t_arr = np.asarray(times, dtype=float)
    s_arr = np.asarray(statuses, dtype=np.int64)
    if t_arr.size == 0:
        raise DataError("dataset is empty")
    if not np.all(np.isfinite(t_arr)):
        raise DataError("non-finite time")
    if s_arr.min() < 0 or s_arr.max() > K:
        raise DataError("status out of range")
    order = np.lexsort((s_arr, t_arr))
    t_arr, s_arr = t_arr[order], s_arr[order]
    times, inverse = np.unique(t_arr, return_inverse=True)
    counts = np.zeros((len(times), K + 1), dtype=np.int64)
    np.add.at(counts, (inverse, s_arr), 1)
    obs = tuple(Observation(float(t), int(s)) for t, s in zip(t_arr, s_arr))
    return Dataset(int(K), obs, times, counts)


@dataclass(frozen=True, eq=False)
class StepFn:
    """Right-continuous nondecreasing step function.

    Takes ``baseline`` before ``jump_times[0]``, ``jump_values[j]`` on
    ``[jump_times[j], jump_times[j+1])`` and carries ``tail_mass`` somewhere
    beyond the last jump, so ``F(inf) = jump_values[-1] + tail_mass``.
    """

    jump_times: np.ndarray = field(default_factory=lambda: np.empty(0))
    jump_values: np.ndarray = field(default_factory=lambda: np.empty(0))
    baseline: float = 0.0
    tail_mass: float = 0.0

    def __post_init__(self):
        jt = np.asarray(self.jump_times, dtype=float).reshape(-1)
        jv = np.asarray(self.jump_values, dtype=float).reshape(-1)
        object.__setattr__(self, "jump_times", jt)
        object.__setattr__(self, "jump_values", jv)
        if jt.shape != jv.shape:
            raise ValueError("jump_times and jump_values differ in length")
        if jt.size and (np.any(np.diff(jt) <= 0) or not np.all(np.isfinite(jt))):
            raise ValueError("jump times must be finite and strictly increasing")
        if jv.size and np.any(np.diff(jv) <= 0):
            raise ValueError("jump values must be strictly increasing")
        if self.baseline < 0 or self.tail_mass < 0:
            raise ValueError("baseline and tail_mass must be nonnegative")
        if jv.size and self.baseline > jv[0]:
            raise ValueError("baseline exceeds first jump value")

    @classmethod
    def from_values(cls, times, values, tail_mass: float = 0.0, baseline: float = 0.0) -> "StepFn":
        """Build from values on a grid, keeping only the points where the value rises."""
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        prev = np.concatenate(([baseline], values[:-1]))
        keep = values > prev
        return cls(times[keep], values[keep], baseline, float(tail_mass))

    @property
    def last_value(self) -> float:
        return float(self.jump_values[-1]) if self.jump_values.size else float(self.baseline)

    @property
    def at_infinity(self) -> float:
        return self.last_value + self.tail_mass

    def __call__(self, t):
        return step_eval(self, t)

    def left_limit(self, t):
        """``F(t-)``."""
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.jump_times, t, side="left")
        vals = np.concatenate(([self.baseline], self.jump_values))[idx]
        vals = np.where(np.isposinf(t), self.at_infinity, vals)
        return vals if vals.ndim else float(vals)

    def increments(self) -> np.ndarray:
        return np.diff(np.concatenate(([self.baseline], self.jump_values)))

    def __eq__(self, other):
        if not isinstance(other, StepFn):
            return NotImplemented
        return (np.array_equal(self.jump_times, other.jump_times)
                and np.array_equal(self.jump_values, other.jump_values)
                and self.baseline == other.baseline and self.tail_mass == other.tail_mass)

    __hash__ = None


def step_eval(f: StepFn, t):
    """Evaluate ``f`` at ``t`` (scalar or array); ``+inf`` gives ``F(inf)``."""
    t = np.asarray(t, dtype=float)
    idx = np.searchsorted(f.jump_times, t, side="right")
    vals = np.concatenate(([f.baseline], f.jump_values))[idx]
    vals = np.where(np.isposinf(t), f.at_infinity, vals)
    return vals if vals.ndim else float(vals)


@dataclass(frozen=True, eq=False)
class SubDistSystem:
    """``K`` sub-distribution functions with pointwise sum at most one.

    Pass ``sum_tolerance=None`` to drop the sum constraint (the cone of
    bounded nondecreasing functions used by the likelihood characterization).
    """

    components: tuple[StepFn, ...]
    sum_tolerance: float | None = 1e-10

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise ValueError("a system needs at least one component")
        if self.sum_tolerance is not None:
            _check_sum(self)

    @property
    def K(self) -> int:
        return len(self.components)

    def eval(self, t) -> np.ndarray:
        """Component values, shape ``(K,) + shape(t)``."""
        return np.array([step_eval(c, t) for c in self.components], dtype=float)

    def left_eval(self, t) -> np.ndarray:
        return np.array([c.left_limit(t) for c in self.components], dtype=float)

    def breakpoints(self) -> np.ndarray:
        pts = [c.jump_times for c in self.components]
        return np.unique(np.concatenate(pts)) if pts else np.empty(0)

    def total_at_infinity(self) -> float:
        return float(sum(c.at_infinity for c in self.components))

    def __eq__(self, other):
        if not isinstance(other, SubDistSystem):
            return NotImplemented
        return self.components == other.components

    __hash__ = None


def _sum_step(s: SubDistSystem) -> StepFn:
    pts = s.breakpoints()
    vals = s.eval(pts).sum(axis=0) if pts.size else np.empty(0)
    base = float(sum(c.baseline for c in s.components))
    tail = s.total_at_infinity() - (float(vals[-1]) if pts.size else base)
    keep = vals > np.concatenate(([base], vals[:-1]))
    return StepFn(pts[keep], vals[keep], base, max(tail, 0.0))


def _check_sum(s: SubDistSystem) -> None:
    tol = s.sum_tolerance
    total = s.total_at_infinity()
    if total > 1 + tol:
        pts = s.breakpoints()
        vals = s.eval(pts).sum(axis=0) if pts.size else np.empty(0)
        over = np.nonzero(vals > 1 + tol)[0]
        witness = float(pts[over[0]]) if over.size else math.inf
        shown = float(vals[over[0]]) if over.size else total
        raise ConstraintError(f"sum of components is {shown:.6g} > 1 at t={witness}", witness)


def system_sum(s: SubDistSystem) -> tuple[StepFn, Callable]:
    """Return ``F_+`` as a step function and ``F_{K+1}(t) = F_+(inf) - F_+(t)``."""
    if s.sum_tolerance is not None:
        _check_sum(s)
    f_plus = _sum_step(s)
    total = s.total_at_infinity()

    def f_survival(t):
        return total - step_eval(f_plus, t)

    return f_plus, f_survival
