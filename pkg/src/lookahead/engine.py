"""Mutual-information utilities, Bayes updates and exact finite-horizon lookahead.

Everything here works on a :class:`DesignProblem`, the precomputed
likelihood table p(y | theta, d) for one grid/design/model combination.
Batches of beliefs are handled as 2-D arrays whose rows are (possibly
unnormalised) weight vectors over the parameter grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import entr

from .errors import ConfigurationError, ContractViolation, ImpossibleObservationError, \
    ResourceLimitError
from .grid import DesignGrid, ParameterGrid, check_distribution
from .models import ResponseModel, likelihood_tensor

DEFAULT_NODE_BUDGET = 10 ** 7
# Weights and likelihoods below this are zeroed in the batched views. Their
# contributions are far below double resolution of any utility, and leaving
# them in produces subnormal intermediates that slow BLAS several-fold.
FLUSH_BELOW = 1e-150
# rows x columns of scratch per chunk in the batched solver
_CHUNK_ELEMENTS = 2_000_000


@dataclass(frozen=True)
class HorizonSpec:
    T: int = 1
    gamma: float = 1.0

    def __post_init__(self):
        if int(self.T) != self.T or self.T < 1:
            raise ConfigurationError(f"horizon T must be an integer >= 1, got {self.T}")
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigurationError(f"discount must lie in (0, 1], got {self.gamma}")


@dataclass(frozen=True, eq=False)
class DesignProblem:
    """Likelihood table with shape (n_theta, n_design, n_outcomes) and derived views."""

    tensor: np.ndarray
    flat: np.ndarray = field(init=False, repr=False)
    flat_t: np.ndarray = field(init=False, repr=False)
    cond_entropy: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        L = np.asarray(self.tensor, dtype=float)
        if L.ndim != 3 or 0 in L.shape:
            raise ContractViolation("likelihood tensor must have shape (theta, design, outcome)")
        if np.any(L < 0) or np.any(np.abs(L.sum(axis=2) - 1.0) > 1e-12):
            raise ContractViolation("every (theta, design) slice must be a pmf over outcomes")
        L = np.array(L, copy=True)
        L.setflags(write=False)
        n, d, y = L.shape
        flat = np.where(L < FLUSH_BELOW, 0.0, L).reshape(n, d * y)
        flat_t = np.ascontiguousarray(flat.T)
        h = entr(L).sum(axis=2)
        for a in (flat, flat_t, h):
            a.setflags(write=False)
        object.__setattr__(self, "tensor", L)
        object.__setattr__(self, "flat", flat)
        object.__setattr__(self, "flat_t", flat_t)
        object.__setattr__(self, "cond_entropy", h)

    @classmethod
    def from_model(cls, model: ResponseModel, grid: ParameterGrid,
                   designs: DesignGrid) -> "DesignProblem":
        return cls(likelihood_tensor(model, grid, designs))

    @property
    def n_theta(self) -> int:
        return self.tensor.shape[0]

    @property
    def n_designs(self) -> int:
        return self.tensor.shape[1]

    @property
    def n_outcomes(self) -> int:
        return self.tensor.shape[2]

    def restrict(self, mask: np.ndarray) -> "DesignProblem":
        """Sub-problem on the grid points selected by ``mask``, reusing derived views."""
        sub = object.__new__(DesignProblem)
        object.__setattr__(sub, "tensor", self.tensor[mask])
        object.__setattr__(sub, "flat", self.flat[mask])
        object.__setattr__(sub, "flat_t", np.ascontiguousarray(self.flat_t[:, mask]))
        object.__setattr__(sub, "cond_entropy", self.cond_entropy[mask])
        return sub


def _check_prior(prior, problem: DesignProblem) -> np.ndarray:
    w = check_distribution(prior)
    if w.size != problem.n_theta:
        raise ContractViolation(
            f"prior has {w.size} weights but the problem has {problem.n_theta} grid points")
    return w


def _check_design(d, problem: DesignProblem) -> int:
    if int(d) != d or not 0 <= d < problem.n_designs:
        raise ContractViolation(f"design index {d!r} outside 0..{problem.n_designs - 1}")
    return int(d)


def batch_utilities(problem: DesignProblem, beliefs: np.ndarray):
    """MI of every design for each normalised belief row.

    Returns ``(utilities, predictive)`` with shapes (B, D) and (B, D, Y).
    Uses I = H(Y) - E_theta H(Y | theta), which is the same double sum
    regrouped so only B*D*Y logarithms are needed.
    """
    pred = (beliefs @ problem.flat).reshape(len(beliefs), problem.n_designs, problem.n_outcomes)
    u = entr(pred).sum(axis=2) - beliefs @ problem.cond_entropy
    return u, pred


def predictive_pmf(prior, d: int, problem: DesignProblem) -> np.ndarray:
    w = _check_prior(prior, problem)
    d = _check_design(d, problem)
    return w @ problem.tensor[:, d, :]


def mutual_information(prior, d: int, problem: DesignProblem) -> float:
    w = _check_prior(prior, problem)
    d = _check_design(d, problem)
    u, _ = batch_utilities(problem, w[None, :])
    return float(u[0, d])


def bayes_update(prior, d: int, y: int, problem: DesignProblem) -> np.ndarray:
    w = _check_prior(prior, problem)
    d = _check_design(d, problem)
    if int(y) != y or not 0 <= y < problem.n_outcomes:
        raise ContractViolation(f"response {y!r} outside 0..{problem.n_outcomes - 1}")
    post = w * problem.tensor[:, d, int(y)]
    evidence = post.sum()
    if evidence <= 0.0:
        raise ImpossibleObservationError(
            f"response {y} at design {d} has zero probability under the current belief")
    return post / evidence


def utility_curve(prior, problem: DesignProblem) -> np.ndarray:
    w = _check_prior(prior, problem)
    u, _ = batch_utilities(problem, w[None, :])
    return u[0]


def myopic_design(prior, problem: DesignProblem) -> int:
    """Index of the most informative design; ties go to the lowest index."""
    return int(np.argmax(utility_curve(prior, problem)))


@dataclass
class PolicyTree:
    """Response-contingent plan. ``children`` is empty at the last decision."""

    design: int
    value: float
    children: dict[int, "PolicyTree"] = field(default_factory=dict)

    @property
    def depth(self) -> int:
        if not self.children:
            return 1
        return 1 + max(c.depth for c in self.children.values())

    def node_count(self) -> int:
        return 1 + sum(c.node_count() for c in self.children.values())


@dataclass
class LookaheadSolution:
    """Root-level byproducts of a Bellman solve.

    ``immediate[d]`` is the MI of design d now; ``continuation[d]`` is the
    undiscounted expected optimal value of the remaining T-1 trials after
    running d. The root value is ``max(immediate + gamma * continuation)``.
    """

    tree: PolicyTree
    immediate: np.ndarray
    continuation: np.ndarray
    gamma: float

    @property
    def totals(self) -> np.ndarray:
        return self.immediate + self.gamma * self.continuation

    @property
    def value(self) -> float:
        return self.tree.value


def belief_node_count(problem: DesignProblem, T: int) -> int:
    """Beliefs visited by exhaustive enumeration: sum over depth k < T of (|D||Y|)^k."""
    branching = problem.n_designs * problem.n_outcomes
    return sum(branching ** k for k in range(T))


def _index_tuples(n: int, k: int) -> np.ndarray:
    if k == 0:
        return np.zeros((1, 0), dtype=np.intp)
    return np.indices((n,) * k).reshape(k, -1).T.astype(np.intp)


def _evaluate_states(problem: DesignProblem, prior: np.ndarray, tuples: np.ndarray, reducer):
    """Apply ``reducer(u, pred, rows)`` to the normalised belief of every history.

    A history is a tuple of flat (design, outcome) branch indices; its belief
    is prior * prod of the matching likelihood columns. Histories with zero
    probability are skipped and keep value 0 and design 0.
    """
    n_states = len(tuples)
    values = np.zeros(n_states)
    designs = np.zeros(n_states, dtype=np.intp)
    step = max(1, _CHUNK_ELEMENTS // max(problem.n_theta, problem.n_designs * problem.n_outcomes))
    for start in range(0, n_states, step):
        rows = np.arange(start, min(start + step, n_states))
        w = np.broadcast_to(prior, (len(rows), prior.size)).copy()
        for m in range(tuples.shape[1]):
            w *= problem.flat_t[tuples[rows, m]]
        mass = w.sum(axis=1)
        ok = mass > 0.0
        if not ok.any():
            continue
        rows, w = rows[ok], w[ok] / mass[ok, None]
        w[w < FLUSH_BELOW] = 0.0
        u, pred = batch_utilities(problem, w)
        totals = reducer(u, pred, rows)
        designs[rows] = np.argmax(totals, axis=1)
        values[rows] = totals[np.arange(len(rows)), designs[rows]]
    return values, designs


def solve_lookahead(prior, problem: DesignProblem, horizon: HorizonSpec,
                    node_budget: int = DEFAULT_NODE_BUDGET) -> LookaheadSolution:
    """Exact backward induction over every design x response branch to depth T.

    Beliefs at the last decision depend only on the multiset of past
    observations (Bayes updates commute), so the deepest level is evaluated
    once per multiset and scattered back to every ordering.
    """
    w = _check_prior(prior, problem)
    T, gamma = horizon.T, horizon.gamma
    nodes = belief_node_count(problem, T)
    if nodes > node_budget:
        raise ResourceLimitError(
            f"exact {T}-step lookahead needs {nodes} belief nodes, budget is {node_budget}")
    support = w >= FLUSH_BELOW
    if support.sum() * 2 <= support.size:
        # only worth the copy when most of the grid is already excluded
        problem = problem.restrict(support)
        w = w[support]
    else:
        w = np.where(support, w, 0.0)
    n_branch = problem.n_designs * problem.n_outcomes
    D, Y = problem.n_designs, problem.n_outcomes

    values: list = [None] * T
    choices: list = [None] * T

    leaf = T - 1
    tuples = _index_tuples(n_branch, leaf)
    if leaf >= 2:
        canon, inverse = np.unique(np.sort(tuples, axis=1), axis=0, return_inverse=True)
        inverse = inverse.ravel()
    else:
        canon, inverse = tuples, None
    root_u = None

    def leaf_reducer(u, pred, rows):
        return u

    v, c = _evaluate_states(problem, w, canon, leaf_reducer)
    if inverse is not None:
        v, c = v[inverse], c[inverse]
    values[leaf], choices[leaf] = v, c

    root_parts = {}
    for level in range(leaf - 1, -1, -1):
        child = values[level + 1].reshape(-1, D, Y)

        def reducer(u, pred, rows, child=child, level=level):
            cont = np.einsum("bdy,bdy->bd", pred, child[rows])
            if level == 0:
                root_parts["u"], root_parts["cont"] = u[0].copy(), cont[0].copy()
            return u + gamma * cont

        values[level], choices[level] = _evaluate_states(
            problem, w, _index_tuples(n_branch, level), reducer)

    if leaf == 0:
        u, _ = batch_utilities(problem, w[None, :])
        root_parts["u"], root_parts["cont"] = u[0], np.zeros(D)

    def build(level: int, idx: int) -> PolicyTree:
        d = int(choices[level][idx])
        node = PolicyTree(design=d, value=float(values[level][idx]))
        if level < leaf:
            base = idx * n_branch + d * Y
            node.children = {y: build(level + 1, base + y) for y in range(Y)}
        return node

    return LookaheadSolution(build(0, 0), root_parts["u"], root_parts["cont"], gamma)


def bellman_solve(prior, problem: DesignProblem, horizon: HorizonSpec,
                  node_budget: int = DEFAULT_NODE_BUDGET) -> PolicyTree:
    return solve_lookahead(prior, problem, horizon, node_budget).tree


def policy_walk(tree: PolicyTree, observed) -> list[int]:
    """Designs along the branch selected by ``observed`` responses."""
    observed = list(observed)
    node, seq = tree, [tree.design]
    for y in observed:
        if not node.children:
            raise ContractViolation("more observations than the policy horizon allows")
        if y not in node.children:
            raise ContractViolation(f"response {y!r} outside the response space")
        node = node.children[y]
        seq.append(node.design)
    return seq


def step_ahead_design(prior, problem: DesignProblem, horizon: HorizonSpec,
                      node_budget: int = DEFAULT_NODE_BUDGET) -> int:
    if horizon.T == 1:
        return myopic_design(prior, problem)
    return bellman_solve(prior, problem, horizon, node_budget).design
