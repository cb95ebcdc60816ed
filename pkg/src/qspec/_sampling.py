"""Quadrature specs, sharded seeded sampling and ordered reductions.

Monte Carlo budgets are split into fixed-size shards.  Shard ``i`` draws from
``default_rng(seed + i)`` and reductions run in shard order, so a result
depends only on (seed, budget) and never on how many threads evaluated it.
"""

from __future__ import annotations

import enum
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

SHARD_SIZE = 1 << 16


class Method(str, enum.Enum):
    MONTE_CARLO = "mc"
    TENSOR_GRID = "tensor"


@dataclass(frozen=True)
class QuadratureSpec:
    """How to integrate: Monte Carlo with ``budget`` samples, or a tensor
    rule with ``budget`` points per axis."""

    method: Method = Method.MONTE_CARLO
    budget: int = 100_000
    seed: int = 0
    want_error: bool = True

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if int(self.budget) < 1:
            raise ValueError(f"quadrature budget must be >= 1, got {self.budget}")
        object.__setattr__(self, "budget", int(self.budget))
        object.__setattr__(self, "seed", int(self.seed))

    @classmethod
    def mc(cls, budget, seed=0, want_error=True):
        return cls(Method.MONTE_CARLO, budget, seed, want_error)

    @classmethod
    def tensor(cls, points_per_axis):
        return cls(Method.TENSOR_GRID, points_per_axis, 0, False)

    def with_seed(self, seed):
        return QuadratureSpec(self.method, self.budget, seed, self.want_error)

    def to_dict(self):
        return {"method": self.method.value, "budget": self.budget, "seed": self.seed,
                "want_error": self.want_error}


def thread_count():
    """Worker cap from QSPEC_THREADS (default 1)."""
    raw = os.environ.get("QSPEC_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def shard_sizes(budget):
    full, rest = divmod(budget, SHARD_SIZE)
    sizes = [SHARD_SIZE] * full
    if rest:
        sizes.append(rest)
    return sizes


def map_ordered(fn, items):
    """``[fn(x) for x in items]`` on up to :func:`thread_count` threads."""
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def shard_rng(seed, index):
    return np.random.default_rng(seed + index)


@dataclass
class Moments:
    """Count, mean and centred second moment of a sample (Chan et al. merge)."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def of(cls, values):
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            return cls()
        mu = float(values.mean())
        return cls(values.size, mu, float(((values - mu) ** 2).sum()))

    def merge(self, other):
        if other.count == 0:
            return self
        if self.count == 0:
            return Moments(other.count, other.mean, other.m2)
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / n
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / n
        return Moments(n, mean, m2)

    @property
    def variance(self):
        return self.m2 / (self.count - 1) if self.count > 1 else 0.0


def reduce_moments(parts):
    total = Moments()
    for part in parts:
        total = total.merge(part)
    return total


@dataclass(frozen=True)
class IntegralResult:
    value: float
    std_error: float | None = None
    samples_used: int = 0

    def upper(self, sigmas=3.0):
        return self.value + sigmas * (self.std_error or 0.0)

    def lower(self, sigmas=3.0):
        return self.value - sigmas * (self.std_error or 0.0)

    def to_dict(self):
        return {"value": self.value, "std_error": self.std_error, "samples_used": self.samples_used}
