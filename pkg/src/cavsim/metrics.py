"""Efficiency and fairness metrics for shared-resource allocations.

Pure functions quantifying how well a set of resources is used (power,
knee efficiency) and how evenly it is shared (fairness index, max-min
fair allocations across arbitrary resource/user path graphs). Everything
here is stateless and safe to call concurrently.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "SweepPoint",
    "ResourceGraph",
    "OptimalAllocation",
    "fairness_index",
    "power",
    "efficiency",
    "knee_from_sweep",
    "max_min_fair_allocation",
    "global_fairness",
]


def fairness_index(values: Iterable[float]) -> float:
    """Fairness of an allocation vector: (sum x)^2 / (n * sum x^2).

    Equals 1.0 iff all elements are equal and positive; bounded below by
    1/n, attained when a single element carries everything. Scale
    invariant, so the vector may be raw throughputs or normalized ratios.

    Raises ValueError for an empty or all-zero vector (the index is 0/0
    there and refusing beats inventing a value).
    """
    x = np.asarray(list(values) if not isinstance(values, np.ndarray) else values,
                   dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("fairness_index needs a non-empty 1-d vector")
    if np.any(x < 0.0):
        raise ValueError("allocations must be non-negative")
    top = float(x.max())
    if top == 0.0:
        raise ValueError("fairness is undefined for an all-zero vector")
    # normalize first: the index is scale-free and this keeps extreme
    # magnitudes away from overflow/underflow
    y = x / top
    total = float(y.sum())
    return total * total / (x.size * float(np.dot(y, y)))


def power(throughput: float, response_time: float, alpha: float = 1.0) -> float:
    """Resource power: throughput**alpha / response_time.

    alpha > 1 weights throughput more heavily, alpha < 1 weights delay;
    the default of 1 treats them evenly.
    """
    if response_time <= 0.0:
        raise ValueError(f"response_time must be positive, got {response_time}")
    if throughput < 0.0:
        raise ValueError(f"throughput must be non-negative, got {throughput}")
    if alpha <= 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return throughput**alpha / response_time


def efficiency(current_power: float, knee_power: float) -> float:
    """Ratio of current power to power at the knee; 1.0 means the
    resource operates exactly at its most efficient point."""
    if knee_power <= 0.0:
        raise ValueError(f"knee_power must be positive, got {knee_power}")
    if current_power < 0.0:
        raise ValueError(f"current_power must be non-negative, got {current_power}")
    return current_power / knee_power


@dataclass(frozen=True)
class SweepPoint:
    """One fixed-window measurement: the window plus the steady-state
    throughput (packets per unit time) and response time it produced."""

    window: int
    throughput: float
    response_time: float

    def power(self, alpha: float = 1.0) -> float:
        return power(self.throughput, self.response_time, alpha)


def knee_from_sweep(points: Sequence[SweepPoint], alpha: float = 1.0) -> tuple[int, float]:
    """Locate the knee of a fixed-window sweep.

    Returns (window, power) for the point of maximum power. Ties go to
    the smaller window: at equal power the smaller window has the lower
    response time. The result does not depend on the ordering of the
    input points.
    """
    pts = list(points)
    if not pts:
        raise ValueError("knee_from_sweep needs at least one sweep point")
    best = min(pts, key=lambda p: (-p.power(alpha), p.window))
    return best.window, best.power(alpha)


@dataclass(frozen=True)
class ResourceGraph:
    """Knee capacities per resource and the ordered resource list each
    user's traffic crosses. Users are identified by position."""

    resource_capacities: Mapping[str, float]
    user_paths: Sequence[Sequence[str]]

    def __post_init__(self):
        caps = dict(self.resource_capacities)
        paths = tuple(tuple(p) for p in self.user_paths)
        object.__setattr__(self, "resource_capacities", caps)
        object.__setattr__(self, "user_paths", paths)
        for name, cap in caps.items():
            if cap <= 0.0:
                raise ValueError(f"capacity of {name!r} must be positive, got {cap}")
        for i, path in enumerate(paths):
            if not path:
                raise ValueError(f"user {i} has an empty path")
            for r in path:
                if r not in caps:
                    raise ValueError(f"user {i} path references unknown resource {r!r}")

    @property
    def n_users(self) -> int:
        return len(self.user_paths)


@dataclass(frozen=True)
class OptimalAllocation:
    """Max-min fair allocation: per-user rates plus the resource whose
    capacity freezes each user (None when a demand cap binds first)."""

    allocations: np.ndarray
    bottleneck_of_user: tuple[str | None, ...]


def max_min_fair_allocation(
    graph: ResourceGraph,
    demands: Sequence[float] | None = None,
) -> OptimalAllocation:
    """Progressive water-filling over a resource/path graph.

    All users' rates rise together from zero. A resource saturates when
    the common level reaches (remaining capacity / unsatisfied users on
    it); its users freeze at that level. A user with a demand cap
    freezes at the cap instead. The result is max-min fair: no user's
    allocation can be raised without lowering that of a user with an
    equal or smaller allocation.
    """
    n = graph.n_users
    if demands is not None:
        demands = [float(d) for d in demands]
        if len(demands) != n:
            raise ValueError(f"expected {n} demands, got {len(demands)}")
        if any(d < 0.0 for d in demands):
            raise ValueError("demands must be non-negative")

    users_on: dict[str, set[int]] = {r: set() for r in graph.resource_capacities}
    for i, path in enumerate(graph.user_paths):
        for r in path:
            users_on[r].add(i)

    remaining = dict(graph.resource_capacities)
    alloc = np.zeros(n)
    bottleneck: list[str | None] = [None] * n
    unsat = set(range(n))

    while unsat:
        # Next event while raising the common level: a resource saturates
        # or a demand cap is reached, whichever comes first.
        level_r: dict[str, float] = {}
        for r, cap in remaining.items():
            k = len(users_on[r] & unsat)
            if k:
                level_r[r] = cap / k
        best_resource = min(level_r, key=lambda r: (level_r[r], r))
        level = level_r[best_resource]
        capped = None
        if demands is not None:
            for i in sorted(unsat):
                if demands[i] <= level:
                    level, capped = demands[i], i
                    break

        if capped is not None:
            frozen = {capped}
        else:
            frozen = users_on[best_resource] & unsat
            for i in frozen:
                bottleneck[i] = best_resource
        for i in frozen:
            alloc[i] = level
            for r in graph.user_paths[i]:
                remaining[r] -= level
        unsat -= frozen

    return OptimalAllocation(allocations=alloc, bottleneck_of_user=tuple(bottleneck))


def global_fairness(actual: Iterable[float], optimal) -> float:
    """Fairness of an actual allocation against the max-min optimum:
    the fairness index of the ratios actual_i / optimal_i."""
    opt = np.asarray(getattr(optimal, "allocations", optimal), dtype=float)
    act = np.asarray(list(actual) if not isinstance(actual, np.ndarray) else actual,
                     dtype=float)
    if act.shape != opt.shape:
        raise ValueError(f"shape mismatch: actual {act.shape} vs optimal {opt.shape}")
    if np.any(opt <= 0.0):
        raise ValueError("every optimal allocation must be positive")
    return fairness_index(act / opt)
