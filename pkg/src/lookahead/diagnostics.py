"""Two-trial utility decomposition, UD/RD statistics and a brute-force policy oracle."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .engine import DesignProblem, HorizonSpec, _check_prior, solve_lookahead
from .errors import ResourceLimitError

ORACLE_POLICY_LIMIT = 2_000_000


@dataclass(frozen=True)
class Decomposition:
    """Per-design utility now and expected best utility on the following trial."""

    immediate: np.ndarray
    expected_next: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.immediate + self.expected_next

    @property
    def global_design(self) -> int:
        return int(np.argmax(self.total))

    @property
    def myopic_design(self) -> int:
        return int(np.argmax(self.immediate))


@dataclass(frozen=True)
class UtilityStats:
    ud: float
    rd: float
    myopic_max: float
    global_value: float
    degenerate: bool = False


def two_trial_decomposition(prior, problem: DesignProblem) -> Decomposition:
    sol = solve_lookahead(prior, problem, HorizonSpec(2, 1.0))
    return Decomposition(sol.immediate, sol.continuation)


def stats_from_decomposition(dec: Decomposition) -> UtilityStats:
    """UD and RD of a decomposition.

    The myopic two-step total is the greedy first design's utility plus the
    expected best utility after observing its response, so both totals
    average over the same response distribution.
    """
    total = dec.total
    g = dec.global_design
    m = dec.myopic_design
    global_value = float(total[g])
    myopic_max = float(dec.immediate[m])
    ud = global_value - float(total[m])
    if myopic_max <= 0.0:
        return UtilityStats(ud, 0.0, myopic_max, global_value, degenerate=True)
    return UtilityStats(ud, ud / myopic_max, myopic_max, global_value)


def utility_difference(prior, problem: DesignProblem) -> UtilityStats:
    return stats_from_decomposition(two_trial_decomposition(prior, problem))


# Everything below is deliberately naive: it shares no code with the batched
# solver so that it can serve as an independent check on it.

def _direct_mi(w: np.ndarray, lik: np.ndarray) -> float:
    """Double sum over theta and y of p(y|theta) p(theta) ln[p(y|theta) / p(y)].

    ``lik`` has shape (n_theta, n_outcomes) for a single design.
    """
    total = 0.0
    n_theta, n_y = lik.shape
    for y in range(n_y):
        marg = math.fsum(w[i] * lik[i, y] for i in range(n_theta))
        if marg <= 0.0:
            continue
        for i in range(n_theta):
            joint = w[i] * lik[i, y]
            if joint > 0.0:
                total += joint * math.log(lik[i, y] / marg)
    return total


def _direct_update(w: np.ndarray, lik_y: np.ndarray):
    post = w * lik_y
    z = post.sum()
    return post / z, z


def _rollout(w, L, assign, history, depth, T, gamma):
    d = assign[history]
    value = _direct_mi(w, L[:, d, :])
    if depth + 1 == T:
        return value
    cont = 0.0
    for y in range(L.shape[2]):
        post, z = _direct_update(w, L[:, d, y])
        if z <= 0.0:
            continue
        cont += z * _rollout(post, L, assign, history + (y,), depth + 1, T, gamma)
    return value + gamma * cont


def brute_force_policy_oracle(prior, problem: DesignProblem, horizon: HorizonSpec,
                              policy_limit: int = ORACLE_POLICY_LIMIT) -> float:
    """Best expected cumulative MI over every response-contingent policy.

    A policy assigns one design to each response history shorter than T,
    so there are |D| ** (sum_k<T |Y|^k) of them; each is scored by an exact
    forward rollout over all response paths.
    """
    w = _check_prior(prior, problem)
    L = problem.tensor
    D, Y = problem.n_designs, problem.n_outcomes
    T, gamma = horizon.T, horizon.gamma
    histories = [h for k in range(T) for h in itertools.product(range(Y), repeat=k)]
    n_policies = D ** len(histories)
    if n_policies > policy_limit:
        raise ResourceLimitError(
            f"{n_policies} policies to enumerate, oracle limit is {policy_limit}")
    best = -math.inf
    for designs in itertools.product(range(D), repeat=len(histories)):
        assign = dict(zip(histories, designs))
        best = max(best, _rollout(w, L, assign, (), 0, T, gamma))
    return best


def greedy_rollout_value(prior, problem: DesignProblem, horizon: HorizonSpec) -> float:
    """Expected cumulative MI of always choosing the myopic design, T trials deep."""
    w = _check_prior(prior, problem)
    L = problem.tensor

    def go(w, depth):
        mis = [_direct_mi(w, L[:, d, :]) for d in range(L.shape[1])]
        d = int(np.argmax(mis))
        if depth + 1 == horizon.T:
            return mis[d]
        cont = 0.0
        for y in range(L.shape[2]):
            post, z = _direct_update(w, L[:, d, y])
            if z > 0.0:
                cont += z * go(post, depth + 1)
        return mis[d] + horizon.gamma * cont

    return go(w, 0)


def random_instances(count: int, seed: int = 0, max_theta: int = 4, max_designs: int = 3,
                     horizons=(2, 3)):
    """Small random binary-response problems with random priors and likelihoods."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        n = int(rng.integers(2, max_theta + 1))
        d = int(rng.integers(1, max_designs + 1))
        p = rng.random((n, d))
        problem = DesignProblem(np.stack([1.0 - p, p], axis=2))
        prior = rng.dirichlet(np.ones(n))
        out.append((prior, problem, HorizonSpec(int(horizons[i % len(horizons)]), 1.0)))
    return out


def oracle_battery(count: int = 100, seed: int = 0) -> float:
    """Largest |Bellman value - brute-force value| over ``count`` random instances."""
    worst = 0.0
    for prior, problem, horizon in random_instances(count, seed):
        v = solve_lookahead(prior, problem, horizon).value
        worst = max(worst, abs(v - brute_force_policy_oracle(prior, problem, horizon)))
    return worst
