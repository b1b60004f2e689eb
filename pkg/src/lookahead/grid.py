"""Discretised parameter and design spaces, and distributions over them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import entr

from .errors import ConfigurationError, ContractViolation

NORMALIZATION_TOL = 1e-12


@dataclass(frozen=True)
class AxisSpec:
    """A linearly spaced axis with inclusive endpoints."""

    name: str
    lo: float
    hi: float
    count: int

    def __post_init__(self):
        if not self.name:
            raise ConfigurationError("axis name must be non-empty")
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)):
            raise ConfigurationError(f"axis {self.name!r}: bounds must be finite")
        if not self.lo < self.hi:
            raise ConfigurationError(
                f"axis {self.name!r}: lo ({self.lo}) must be < hi ({self.hi})")
        if int(self.count) != self.count or self.count < 2:
            raise ConfigurationError(
                f"axis {self.name!r}: count must be an integer >= 2, got {self.count}")

    @property
    def points(self) -> np.ndarray:
        i = np.arange(self.count, dtype=float)
        return self.lo + i * (self.hi - self.lo) / (self.count - 1)


@dataclass(frozen=True)
class ParameterGrid:
    axes: tuple[AxisSpec, ...]
    points: np.ndarray = field(repr=False, compare=False)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.axes)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def lower(self) -> np.ndarray:
        return np.array([a.lo for a in self.axes])

    @property
    def upper(self) -> np.ndarray:
        return np.array([a.hi for a in self.axes])


@dataclass(frozen=True)
class DesignGrid:
    axis: AxisSpec
    points: np.ndarray = field(repr=False, compare=False)

    @classmethod
    def from_axis(cls, axis: AxisSpec) -> "DesignGrid":
        pts = axis.points
        pts.setflags(write=False)
        return cls(axis, pts)

    @property
    def size(self) -> int:
        return self.points.shape[0]


def build_grid(axes: Sequence[AxisSpec]) -> ParameterGrid:
    """Cartesian product of the axes, flattened in row-major axis order.

    The last axis varies fastest, so point ``i`` of a two-axis grid has
    coordinates ``(ax0[i // n1], ax1[i % n1])``.
    """
    axes = tuple(axes)
    if not axes:
        raise ConfigurationError("a parameter grid needs at least one axis")
    for a in axes:
        if not isinstance(a, AxisSpec):
            raise ConfigurationError(f"expected AxisSpec, got {type(a).__name__}")
    mesh = np.meshgrid(*[a.points for a in axes], indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    points.setflags(write=False)
    return ParameterGrid(axes, points)


def uniform_prior(grid: ParameterGrid) -> np.ndarray:
    n = grid.size
    if n == 0:
        raise ContractViolation("grid is empty")
    return np.full(n, 1.0 / n)


def check_distribution(weights, tol: float = NORMALIZATION_TOL) -> np.ndarray:
    """Return ``weights`` as a float array, raising if it is not a distribution."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ContractViolation("distribution must be a non-empty vector")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ContractViolation("distribution weights must be finite and >= 0")
    total = w.sum()
    if abs(total - 1.0) > tol:
        raise ContractViolation(f"distribution sums to {total!r}, not 1")
    return w


def entropy(weights) -> float:
    """Shannon entropy in nats, with 0 ln 0 = 0."""
    w = check_distribution(weights)
    return float(entr(w).sum())


def posterior_mean(weights, grid: ParameterGrid) -> np.ndarray:
    w = check_distribution(weights)
    if w.size != grid.size:
        raise ContractViolation(
            f"distribution has {w.size} weights but grid has {grid.size} points")
    mean = w @ grid.points
    # rounding can push a point-mass mean a hair outside the box
    return np.clip(mean, grid.lower, grid.upper)


def range_width(curve) -> float:
    c = np.asarray(curve, dtype=float)
    if c.size == 0:
        raise ContractViolation("range_width of an empty curve")
    return float(c.max() - c.min())
