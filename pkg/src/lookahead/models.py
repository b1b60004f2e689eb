"""Likelihood families p(y | theta, d) for the three simulated observers."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.special import erfc
from scipy.stats import binom

from .errors import ConfigurationError, ContractViolation, DomainError
from .grid import DesignGrid, ParameterGrid

_SQRT2 = math.sqrt(2.0)
_PROB_TOL = 1e-12


class ModelKind(str, enum.Enum):
    GAP_ACCEPTANCE = "gap_acceptance"
    VISUAL_PSYCHOMETRIC = "visual_psychometric"
    MEMORY_RETENTION = "memory_retention"


PARAMETER_NAMES = {
    ModelKind.GAP_ACCEPTANCE: ("T_cr", "sigma"),
    ModelKind.VISUAL_PSYCHOMETRIC: ("s", "b"),
    ModelKind.MEMORY_RETENTION: ("a", "b"),
}


def std_normal_cdf(x):
    """Phi(x) through erfc, accurate in both tails."""
    return 0.5 * erfc(-np.asarray(x, dtype=float) / _SQRT2)


@dataclass(frozen=True)
class ResponseModel:
    """One of the three observer models.

    ``word_count`` is only meaningful for memory retention, where the
    response is the number of words recalled out of ``word_count``.
    """

    kind: ModelKind
    word_count: int = 15

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if self.kind is ModelKind.MEMORY_RETENTION:
            if int(self.word_count) != self.word_count or self.word_count < 1:
                raise ConfigurationError(
                    f"word_count must be a positive integer, got {self.word_count}")

    @property
    def parameter_names(self) -> tuple[str, ...]:
        return PARAMETER_NAMES[self.kind]

    @property
    def outcomes(self) -> np.ndarray:
        if self.kind is ModelKind.MEMORY_RETENTION:
            return np.arange(self.word_count + 1)
        return np.arange(2)

    @property
    def n_outcomes(self) -> int:
        return self.outcomes.size

    def canonical(self, theta) -> tuple[float, float]:
        """Accept a mapping by name or a sequence in canonical order."""
        names = self.parameter_names
        if isinstance(theta, Mapping):
            try:
                return tuple(float(theta[n]) for n in names)
            except KeyError as exc:
                raise ContractViolation(f"missing parameter {exc.args[0]!r}") from None
        vals = tuple(float(v) for v in theta)
        if len(vals) != len(names):
            raise ContractViolation(
                f"{self.kind.value} expects {len(names)} parameters, got {len(vals)}")
        return vals


def _success_array(model: ResponseModel, p1, p2, d) -> np.ndarray:
    """Vectorised success probability; arguments broadcast together."""
    p1, p2, d = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (p1, p2, d)))
    if model.kind is ModelKind.GAP_ACCEPTANCE:
        t_cr, sigma = p1, p2
        if np.any(sigma <= 0):
            raise DomainError("sigma must be > 0")
        return std_normal_cdf((d - t_cr) / sigma)
    if model.kind is ModelKind.VISUAL_PSYCHOMETRIC:
        s, b = p1, p2
        with np.errstate(over="ignore"):
            arg = np.power(10.0, np.power(10.0, s) * (d - b))
        return std_normal_cdf(arg)
    a, b = p1, p2
    p = a * np.exp(-b * d)
    if np.any(~np.isfinite(p)) or np.any(p < -_PROB_TOL) or np.any(p > 1 + _PROB_TOL):
        raise DomainError("a*exp(-b*d) must lie in [0, 1]")
    return np.clip(p, 0.0, 1.0)


def success_probability(model: ResponseModel, theta, d: float) -> float:
    p1, p2 = model.canonical(theta)
    return float(_success_array(model, p1, p2, d))


def _pmf_from_success(model: ResponseModel, p: np.ndarray) -> np.ndarray:
    """Response pmf along a new trailing axis."""
    p = np.asarray(p, dtype=float)
    if model.kind is ModelKind.MEMORY_RETENTION:
        y = model.outcomes
        return binom.pmf(y, model.word_count, p[..., None])
    return np.stack([1.0 - p, p], axis=-1)


def _check_response(model: ResponseModel, y) -> int:
    if int(y) != y or not 0 <= y < model.n_outcomes:
        raise ContractViolation(
            f"response {y!r} outside response space 0..{model.n_outcomes - 1}")
    return int(y)


def likelihood(model: ResponseModel, theta, d: float, y: int) -> float:
    y = _check_response(model, y)
    return float(response_pmf(model, theta, d)[y])


def response_pmf(model: ResponseModel, theta, d: float) -> np.ndarray:
    p = success_probability(model, theta, d)
    return _pmf_from_success(model, np.array(p))


def _canonical_columns(model: ResponseModel, grid: ParameterGrid) -> Sequence[np.ndarray]:
    names = grid.names
    if sorted(names) != sorted(model.parameter_names):
        raise ConfigurationError(
            f"{model.kind.value} needs parameters {model.parameter_names}, grid has {names}")
    return [grid.points[:, names.index(n)] for n in model.parameter_names]


def likelihood_tensor(model: ResponseModel, grid: ParameterGrid,
                      designs: DesignGrid) -> np.ndarray:
    """Table of p(y | theta_i, d_j) with shape (n_theta, n_design, n_outcomes)."""
    p1, p2 = _canonical_columns(model, grid)
    d = designs.points
    try:
        p = _success_array(model, p1[:, None], p2[:, None], d[None, :])
    except DomainError as exc:
        # locate the first offending grid cell for the message
        for i in range(grid.size):
            for j in range(d.size):
                try:
                    _success_array(model, p1[i], p2[i], d[j])
                except DomainError:
                    raise DomainError(f"{exc} (theta index {i}, design index {j})") from None
        raise
    table = _pmf_from_success(model, p)
    table.setflags(write=False)
    return table
