"""Simulated observers, replication campaigns and per-trial metrics."""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from .diagnostics import Decomposition, stats_from_decomposition
from .engine import DesignProblem, HorizonSpec, bayes_update, bellman_solve, myopic_design, \
    solve_lookahead, step_ahead_design
from .errors import ConfigurationError, DomainError, ImpossibleObservationError
from .grid import AxisSpec, DesignGrid, ParameterGrid, build_grid, entropy, posterior_mean, \
    range_width, uniform_prior
from .models import ResponseModel, _pmf_from_success, _success_array


class Strategy(str, enum.Enum):
    MYOPIC = "myopic"
    GLOBAL_T_STEP = "global_t_step"
    T_STEP_AHEAD = "t_step_ahead"


@dataclass(frozen=True)
class ExperimentConfig:
    model: ResponseModel
    parameter_axes: tuple[AxisSpec, ...]
    design_axis: AxisSpec
    true_params: tuple[float, ...]
    trials: int
    replications: int
    strategy: Strategy = Strategy.MYOPIC
    horizon: HorizonSpec = HorizonSpec()
    seed: int = 0
    diagnostics_enabled: bool = False
    diagnostics_replications: int = 1

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        object.__setattr__(self, "parameter_axes", tuple(self.parameter_axes))
        object.__setattr__(self, "true_params", tuple(float(v) for v in self.true_params))
        names = tuple(a.name for a in self.parameter_axes)
        if sorted(names) != sorted(self.model.parameter_names):
            raise ConfigurationError(
                f"{self.model.kind.value} needs parameters {self.model.parameter_names}, "
                f"got {names}")
        if len(self.true_params) != len(names):
            raise ConfigurationError("true_params must give one value per parameter axis")
        if not all(math.isfinite(v) for v in self.true_params):
            raise ConfigurationError("true_params must be finite")
        for key in ("trials", "replications", "diagnostics_replications"):
            v = getattr(self, key)
            if int(v) != v or v < 1:
                raise ConfigurationError(f"{key} must be a positive integer, got {v}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")
        if self.strategy is Strategy.MYOPIC and self.horizon.T != 1:
            raise ConfigurationError("the myopic strategy requires horizon T = 1")
        try:
            self.true_pmf()
        except DomainError as exc:
            raise ConfigurationError(f"true_params: {exc}") from None

    def grid(self) -> ParameterGrid:
        return build_grid(self.parameter_axes)

    def design_grid(self) -> DesignGrid:
        return DesignGrid.from_axis(self.design_axis)

    def problem(self) -> DesignProblem:
        return DesignProblem.from_model(self.model, self.grid(), self.design_grid())

    def true_canonical(self) -> tuple[float, float]:
        names = [a.name for a in self.parameter_axes]
        return self.model.canonical(dict(zip(names, self.true_params)))

    def true_pmf(self) -> np.ndarray:
        """Response pmf of the simulated observer at each design, shape (D, Y)."""
        p1, p2 = self.true_canonical()
        p = _success_array(self.model, p1, p2, self.design_axis.points)
        return _pmf_from_success(self.model, p)


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    design: float
    response: int
    posterior_entropy: float
    posterior_mean: tuple[float, ...]


@dataclass
class ReplicationResult:
    """Trajectory of one replication; arrays are indexed by trial - 1."""

    index: int
    design_index: np.ndarray
    design: np.ndarray
    response: np.ndarray
    posterior_entropy: np.ndarray
    posterior_mean: np.ndarray
    immediate: Optional[np.ndarray] = None
    expected_next: Optional[np.ndarray] = None
    ud: Optional[np.ndarray] = None
    rd: Optional[np.ndarray] = None
    degenerate: Optional[np.ndarray] = None

    @property
    def records(self) -> list[TrialRecord]:
        return [TrialRecord(t + 1, float(self.design[t]), int(self.response[t]),
                            float(self.posterior_entropy[t]),
                            tuple(float(v) for v in self.posterior_mean[t]))
                for t in range(len(self.design))]


def simulate_response(pmf: np.ndarray, u: float) -> int:
    """Inverse-CDF draw from ``pmf`` using a uniform variate ``u`` in [0, 1)."""
    cdf = np.cumsum(pmf)
    return int(min(np.searchsorted(cdf, u, side="right"), len(pmf) - 1))


def replication_uniforms(seed: int, index: int, trials: int) -> np.ndarray:
    """Trial t of replication ``index`` always consumes element t of this stream."""
    return np.random.default_rng(np.random.SeedSequence([seed, index])).random(trials)


def run_replication(config: ExperimentConfig, index: int,
                    problem: Optional[DesignProblem] = None,
                    diagnostics: Optional[bool] = None,
                    designs: Optional[Sequence[int]] = None) -> ReplicationResult:
    """One simulated experiment from the uniform prior.

    ``designs`` optionally restricts the design grid to the given indices;
    recorded design indices then refer to the restricted grid.
    """
    if problem is None:
        problem = config.problem()
    if diagnostics is None:
        diagnostics = config.diagnostics_enabled and index < config.diagnostics_replications
    grid = config.grid()
    dpoints = config.design_axis.points
    true_pmf = config.true_pmf()
    if designs is not None:
        designs = np.asarray(designs, dtype=np.intp)
        problem = DesignProblem(problem.tensor[:, designs])
        dpoints, true_pmf = dpoints[designs], true_pmf[designs]
    uniforms = replication_uniforms(config.seed, index, config.trials)
    strategy, horizon = config.strategy, config.horizon
    T = horizon.T

    n, D = config.trials, problem.n_designs
    d_idx = np.zeros(n, dtype=np.intp)
    resp = np.zeros(n, dtype=np.intp)
    ent = np.zeros(n)
    means = np.zeros((n, len(config.parameter_axes)))
    if diagnostics:
        imm, nxt = np.zeros((n, D)), np.zeros((n, D))
        ud, rd = np.zeros(n), np.zeros(n)
        degenerate = np.zeros(n, dtype=bool)

    q = uniform_prior(grid)
    node = None
    y = None
    for t in range(n):
        dec = None
        if diagnostics:
            sol = solve_lookahead(q, problem, HorizonSpec(2, 1.0))
            dec = Decomposition(sol.immediate, sol.continuation)
            stats = stats_from_decomposition(dec)
            imm[t], nxt[t] = dec.immediate, dec.expected_next
            ud[t], rd[t], degenerate[t] = stats.ud, stats.rd, stats.degenerate

        if strategy is Strategy.MYOPIC or (strategy is Strategy.T_STEP_AHEAD and T == 1):
            d = myopic_design(q, problem)
        elif strategy is Strategy.T_STEP_AHEAD:
            if dec is not None and T == 2 and horizon.gamma == 1.0:
                d = sol.tree.design
            else:
                d = step_ahead_design(q, problem, horizon)
        else:
            if t % T == 0:
                node = bellman_solve(q, problem, horizon)
            else:
                node = node.children[y]
            d = node.design

        y = simulate_response(true_pmf[d], uniforms[t])
        try:
            q = bayes_update(q, d, y, problem)
        except ImpossibleObservationError as exc:
            raise ImpossibleObservationError(
                f"replication {index}, trial {t + 1}: {exc}") from None
        d_idx[t], resp[t] = d, y
        ent[t] = entropy(q)
        means[t] = posterior_mean(q, grid)

    result = ReplicationResult(index, d_idx, dpoints[d_idx], resp, ent, means)
    if diagnostics:
        result.immediate, result.expected_next = imm, nxt
        result.ud, result.rd, result.degenerate = ud, rd, degenerate
    return result


@dataclass
class MetricsTable:
    """Per-trial aggregates over replications; diagnostics fields may be None."""

    parameter_names: tuple[str, ...]
    design_points: np.ndarray
    initial_entropy: float
    mse: np.ndarray
    info_gain: np.ndarray
    ud_mean: Optional[np.ndarray] = None
    rd_mean: Optional[np.ndarray] = None
    width_immediate: Optional[np.ndarray] = None
    width_next: Optional[np.ndarray] = None
    mean_immediate: Optional[np.ndarray] = None
    mean_next: Optional[np.ndarray] = None
    ud_min: Optional[float] = None
    degenerate_count: int = 0
    replications: int = 0
    diagnostics_replications: int = 0

    @property
    def trials(self) -> int:
        return len(self.info_gain)

    @property
    def has_diagnostics(self) -> bool:
        return self.ud_mean is not None


def _fsum_mean(stack: np.ndarray) -> np.ndarray:
    """Mean over axis 0 using exactly rounded summation."""
    flat = stack.reshape(stack.shape[0], -1)
    out = np.array([math.fsum(flat[:, j]) for j in range(flat.shape[1])]) / stack.shape[0]
    return out.reshape(stack.shape[1:])


def aggregate(config: ExperimentConfig, results: Sequence[ReplicationResult]) -> MetricsTable:
    results = sorted(results, key=lambda r: r.index)
    truth = np.asarray(config.true_params)
    sq_err = np.stack([(r.posterior_mean - truth) ** 2 for r in results])
    mean_entropy = _fsum_mean(np.stack([r.posterior_entropy for r in results]))
    h0 = math.log(config.grid().size)
    table = MetricsTable(
        parameter_names=tuple(a.name for a in config.parameter_axes),
        design_points=config.design_axis.points,
        initial_entropy=h0,
        mse=_fsum_mean(sq_err),
        info_gain=h0 - mean_entropy,
        replications=len(results),
    )
    diag = [r for r in results if r.ud is not None]
    if diag:
        table.mean_immediate = _fsum_mean(np.stack([r.immediate for r in diag]))
        table.mean_next = _fsum_mean(np.stack([r.expected_next for r in diag]))
        table.ud_mean = _fsum_mean(np.stack([r.ud for r in diag]))
        table.rd_mean = _fsum_mean(np.stack([r.rd for r in diag]))
        table.width_immediate = np.array([range_width(c) for c in table.mean_immediate])
        table.width_next = np.array([range_width(c) for c in table.mean_next])
        table.ud_min = float(min(r.ud.min() for r in diag))
        table.degenerate_count = int(sum(r.degenerate.sum() for r in diag))
        table.diagnostics_replications = len(diag)
    return table


_worker_state: dict = {}


def _init_worker(config: ExperimentConfig):
    threadpool_limits(1)
    _worker_state["config"] = config
    _worker_state["problem"] = config.problem()


def _worker_run(index: int) -> ReplicationResult:
    return run_replication(_worker_state["config"], index, _worker_state["problem"])


def run_replications(config: ExperimentConfig, workers: int = 1) -> list[ReplicationResult]:
    """All replications of ``config``, in index order.

    BLAS is pinned to one thread in both the serial and the pooled path so
    results do not depend on how the work was split.
    """
    indices = range(config.replications)
    if workers <= 1:
        problem = config.problem()
        with threadpool_limits(1):
            return [run_replication(config, i, problem) for i in indices]
    chunk = max(1, config.replications // (4 * workers))
    with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(config,)) as pool:
        return list(pool.map(_worker_run, indices, chunksize=chunk))


def run_campaign(config: ExperimentConfig, workers: int = 1) -> MetricsTable:
    return aggregate(config, run_replications(config, workers))


def _comparison_key(config: ExperimentConfig):
    return replace(config, strategy=Strategy.MYOPIC, horizon=HorizonSpec(1, 1.0),
                   diagnostics_enabled=False, diagnostics_replications=1)


def compare_strategies(configs: Sequence[ExperimentConfig],
                       workers: int = 1) -> list[MetricsTable]:
    """Run several campaigns that differ only in strategy/horizon, same seed."""
    configs = list(configs)
    if not configs:
        return []
    key = _comparison_key(configs[0])
    for c in configs[1:]:
        if _comparison_key(c) != key:
            raise ConfigurationError(
                "compared configurations must share model, grids, truth, trials, "
                "replications and seed")
    return [run_campaign(c, workers) for c in configs]


def strategy_variants(config: ExperimentConfig, T: int = 2) -> list[ExperimentConfig]:
    """The three approaches compared throughout: myopic, T-step ahead, global T-step."""
    h = HorizonSpec(T, config.horizon.gamma)
    return [
        replace(config, strategy=Strategy.MYOPIC, horizon=HorizonSpec(1, config.horizon.gamma)),
        replace(config, strategy=Strategy.T_STEP_AHEAD, horizon=h),
        replace(config, strategy=Strategy.GLOBAL_T_STEP, horizon=h),
    ]
