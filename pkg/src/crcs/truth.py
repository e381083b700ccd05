"""Parametric ground truths: cause shapes, the inspection-time law G and the model."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Exponential:
    rate: float

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ValueError(f"exponential rate must be positive and finite, got {self.rate}")

    def cdf(self, t):
        t = np.maximum(np.asarray(t, dtype=float), 0.0)
        return -np.expm1(-self.rate * t)

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0, self.rate * np.exp(-self.rate * np.maximum(t, 0.0)), 0.0)

    def ppf(self, u):
        return -np.log1p(-np.asarray(u, dtype=float)) / self.rate

    def to_dict(self) -> dict:
        return {"family": "exponential", "rate": self.rate}


@dataclass(frozen=True)
class Weibull:
    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise ValueError("weibull shape and scale must be positive")

    def cdf(self, t):
        t = np.maximum(np.asarray(t, dtype=float), 0.0)
        return -np.expm1(-((t / self.scale) ** self.shape))

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        z = np.maximum(t, 0.0) / self.scale
        with np.errstate(divide="ignore", invalid="ignore"):
            dens = self.shape / self.scale * z ** (self.shape - 1) * np.exp(-(z**self.shape))
        return np.where(t > 0, dens, 0.0)

    def ppf(self, u):
        return self.scale * (-np.log1p(-np.asarray(u, dtype=float))) ** (1.0 / self.shape)

    def to_dict(self) -> dict:
        return {"family": "weibull", "shape": self.shape, "scale": self.scale}


@dataclass(frozen=True)
class Uniform:
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a < self.b):
            raise ValueError(f"uniform needs finite a < b, got ({self.a}, {self.b})")

    @property
    def support(self) -> tuple[float, float]:
        return (self.a, self.b)

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where((t >= self.a) & (t <= self.b), 1.0 / (self.b - self.a), 0.0)

    def cdf(self, t):
        return np.clip((np.asarray(t, dtype=float) - self.a) / (self.b - self.a), 0.0, 1.0)

    def ppf(self, u):
        return self.a + np.asarray(u, dtype=float) * (self.b - self.a)

    def to_dict(self) -> dict:
        return {"family": "uniform", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class TruncatedExponential:
    """Exponential(rate) conditioned on ``[a, b]``."""

    rate: float
    a: float
    b: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("rate must be positive")
        if not (math.isfinite(self.a) and math.isfinite(self.b) and 0 <= self.a < self.b):
            raise ValueError(f"truncation needs finite 0 <= a < b, got ({self.a}, {self.b})")

    @property
    def support(self) -> tuple[float, float]:
        return (self.a, self.b)

    @property
    def _mass(self) -> float:
        return -math.expm1(-self.rate * (self.b - self.a))

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t >= self.a) & (t <= self.b)
        return np.where(inside, self.rate * np.exp(-self.rate * (t - self.a)) / self._mass, 0.0)

    def cdf(self, t):
        t = np.clip(np.asarray(t, dtype=float), self.a, self.b)
        return -np.expm1(-self.rate * (t - self.a)) / self._mass

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        return self.a - np.log1p(-u * self._mass) / self.rate

    def to_dict(self) -> dict:
        return {"family": "truncated_exponential", "rate": self.rate, "a": self.a, "b": self.b}


def shape_from_dict(obj: dict):
    fam = obj.get("family")
    if fam == "exponential":
        return Exponential(float(obj["rate"]))
    if fam == "weibull":
        return Weibull(float(obj["shape"]), float(obj["scale"]))
    raise ValueError(f"unknown cause shape family {fam!r}")


def g_from_dict(obj: dict):
    fam = obj.get("family")
    if fam == "uniform":
        return Uniform(float(obj["a"]), float(obj["b"]))
    if fam in ("truncated_exponential", "exponential"):
        return TruncatedExponential(float(obj["rate"]), float(obj["a"]), float(obj["b"]))
    raise ValueError(f"unknown G family {fam!r}")


@dataclass(frozen=True)
class TruthModel:
    """``F_0k(t) = p_k * shape_k.cdf(t)`` with inspection times drawn from ``G``.

    Behaves like an evaluable system (``K``, ``eval``, ``breakpoints``) so
    it can be passed wherever a fitted system is expected.
    """

    cause_probs: tuple[float, ...]
    cause_shapes: tuple
    G: object

    def __post_init__(self):
        p = tuple(float(x) for x in self.cause_probs)
        object.__setattr__(self, "cause_probs", p)
        object.__setattr__(self, "cause_shapes", tuple(self.cause_shapes))
        if not p:
            raise ValueError("need at least one cause")
        if len(p) != len(self.cause_shapes):
            raise ValueError("cause_probs and cause_shapes differ in length")
        if any(not (x > 0) for x in p) or sum(p) > 1 + 1e-12:
            raise ValueError(f"cause probabilities must be positive with sum <= 1, got {p}")

    @property
    def K(self) -> int:
        return len(self.cause_probs)

    def eval(self, t) -> np.ndarray:
        return np.array([p * s.cdf(t) for p, s in zip(self.cause_probs, self.cause_shapes)])

    def density(self, t) -> np.ndarray:
        return np.array([p * s.pdf(t) for p, s in zip(self.cause_probs, self.cause_shapes)])

    def f_plus(self, t):
        return self.eval(t).sum(axis=0)

    def breakpoints(self) -> np.ndarray:
        return np.empty(0)

    def total_at_infinity(self) -> float:
        return float(sum(self.cause_probs))

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "cause_probs": list(self.cause_probs),
            "cause_shapes": [s.to_dict() for s in self.cause_shapes],
            "G": self.G.to_dict(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "TruthModel":
        tm = cls(
            tuple(obj["cause_probs"]),
            tuple(shape_from_dict(s) for s in obj["cause_shapes"]),
            g_from_dict(obj["G"]),
        )
        if "K" in obj and int(obj["K"]) != tm.K:
            raise ValueError(f"K={obj['K']} but {tm.K} causes given")
        return tm


def default_truth() -> TruthModel:
    """Two exponential(1) causes with probability 1/2 each, ``G`` uniform on (0, 2)."""
    return TruthModel((0.5, 0.5), (Exponential(1.0), Exponential(1.0)), Uniform(0.0, 2.0))


@dataclass(frozen=True)
class LocalTruth:
    t0: float
    F0k_at_t0: tuple[float, ...]
    f0k_at_t0: tuple[float, ...]
    F0plus_at_t0: float
    g_at_t0: float

    def __post_init__(self):
        if self.g_at_t0 <= 0:
            raise ValueError("g(t0) must be positive")
        if any(f <= 0 for f in self.f0k_at_t0) or any(F <= 0 for F in self.F0k_at_t0):
            raise ValueError("F_0k(t0) and f_0k(t0) must be positive")
        if not self.F0plus_at_t0 < 1:
            raise ValueError("F_0+(t0) must be below one")

    @property
    def K(self) -> int:
        return len(self.F0k_at_t0)

    @property
    def a(self) -> tuple[float, ...]:
        """``(a_1, ..., a_K, a_{K+1})``."""
        return tuple(1.0 / F for F in self.F0k_at_t0) + (1.0 / (1.0 - self.F0plus_at_t0),)


def local_truth(tm: TruthModel, t0: float) -> LocalTruth:
    F = tm.eval(t0)
    f = tm.density(t0)
    if np.any(F >= np.asarray(tm.cause_probs)):
        raise ValueError("need F_0k(t0) < F_0k(inf) for every cause")
    return LocalTruth(
        float(t0), tuple(map(float, F)), tuple(map(float, f)), float(F.sum()), float(tm.G.pdf(t0))
    )
