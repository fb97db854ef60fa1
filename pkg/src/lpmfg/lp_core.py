"""Occupation-measure linear program for optimal stopping over a scenario tree.

The decision variables are conditional occupation vectors per time and tree
node: ``mu_t(u)`` (mass stopping at t) and ``m_t(u)`` (mass still active),
each a nonnegative vector over the state grid.  One equality row per
(t, node, state) enforces the forward balance

    p_t(u) * (mu_t(u)(x) + m_t(u)(x))
        = [t = 0] m0*(x)
        + p_{t-1}(u-) * pi_U(u-; u) * sum_{x-} pi_X(x-; x) m_{t-1}(u-)(x-),

where ``u-`` is the node's parent and ``p_t(u)`` the node probability.  The
maximum of a linear reward over this polytope equals the optimal-stopping
value, which is computed independently by backward dynamic programming and
used as an oracle for the LP route.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize, sparse

from .scenario_tree import CommonNoiseTree
from .state_chains import GridChain

MASS_CLAMP = 1e-12

__all__ = [
    "OccupationPair",
    "MeanFieldProfile",
    "RewardTables",
    "StoppingRule",
    "VariableIndex",
    "LPProblem",
    "assemble_constraints",
    "set_objective",
    "evaluate_gamma",
    "best_response_dp",
    "best_response_lp",
    "forward_occupation",
    "constraint_residual",
    "occupation_vector",
    "clamp_small_negatives",
    "write_problem",
    "read_primal",
    "load_external_solution",
]


@dataclass
class OccupationPair:
    """Conditional occupation measures of one population.

    ``m[t]`` has shape (nodes at t, states) for t < T; ``mu[t]`` likewise for
    t <= T.  Entries are conditional masses given the node, so a fully active
    population has ``sum(m[t][u]) == 1`` for every node.
    """

    m: list[np.ndarray]
    mu: list[np.ndarray]

    @property
    def horizon(self) -> int:
        return len(self.mu) - 1

    @property
    def n_states(self) -> int:
        return self.mu[0].shape[1]

    def copy(self) -> "OccupationPair":
        return OccupationPair([a.copy() for a in self.m], [a.copy() for a in self.mu])

    def total_stop_mass(self, tree: CommonNoiseTree) -> float:
        """Probability-weighted mass over all stopping events; 1 for any feasible pair."""
        return float(
            sum(tree.probs[t] @ self.mu[t].sum(axis=1) for t in range(self.horizon + 1))
        )

    def flow_residual(self, tree: CommonNoiseTree) -> float:
        """Largest violation of the per-node identity active + stopped-so-far = 1."""
        worst = 0.0
        stopped = self.mu[0].sum(axis=1)
        for t in range(self.horizon + 1):
            if t > 0:
                stopped = stopped[tree.parents[t]] + self.mu[t].sum(axis=1)
            active = self.m[t].sum(axis=1) if t < self.horizon else 0.0
            worst = max(worst, float(np.max(np.abs(active + stopped - 1.0))))
        return worst


@dataclass
class MeanFieldProfile:
    """Occupation pairs of the two interacting populations."""

    conventional: OccupationPair
    renewable: OccupationPair

    def copy(self) -> "MeanFieldProfile":
        return MeanFieldProfile(self.conventional.copy(), self.renewable.copy())


@dataclass
class RewardTables:
    """Per-(t, node, state) running rewards and per-t stopping rewards.

    ``prices`` optionally records the (peak, offpeak) pair backing each
    running-reward slice.
    """

    f: list[np.ndarray]
    g: np.ndarray
    prices: list[np.ndarray] | None = None


@dataclass
class StoppingRule:
    """Stop/continue decision per (t, node, state); everything stops at the horizon."""

    stop: list[np.ndarray]

    def __post_init__(self) -> None:
        self.stop = [np.asarray(a, dtype=bool) for a in self.stop]
        self.stop[-1] = np.ones_like(self.stop[-1], dtype=bool)

    @property
    def horizon(self) -> int:
        return len(self.stop) - 1


class VariableIndex:
    """Column layout of the LP: all mu blocks time-major, then all m blocks.

    Rows are numbered like the mu blocks (one equality per (t, node, state)).
    """

    def __init__(self, sizes: list[int], n_states: int):
        self.sizes = list(sizes)
        self.n_states = n_states
        self.horizon = len(sizes) - 1
        blocks = [n * n_states for n in sizes]
        self.mu_offsets = np.concatenate([[0], np.cumsum(blocks)])
        n_mu = int(self.mu_offsets[-1])
        self.m_offsets = n_mu + np.concatenate([[0], np.cumsum(blocks[:-1])])
        self.n_rows = n_mu
        self.n_vars = int(self.m_offsets[-1])

    def mu_block(self, t: int) -> slice:
        return slice(int(self.mu_offsets[t]), int(self.mu_offsets[t + 1]))

    def m_block(self, t: int) -> slice:
        return slice(int(self.m_offsets[t]), int(self.m_offsets[t + 1]))

    def mu_col(self, t: int, u: int, x: int) -> int:
        return int(self.mu_offsets[t]) + u * self.n_states + x

    def m_col(self, t: int, u: int, x: int) -> int:
        return int(self.m_offsets[t]) + u * self.n_states + x

    def row(self, t: int, u: int, x: int) -> int:
        return self.mu_col(t, u, x)


@dataclass
class LPProblem:
    """Equality-form LP ``max c @ x  s.t.  a @ x = b, x >= 0``."""

    a: sparse.csr_matrix
    b: np.ndarray
    c: np.ndarray
    index: VariableIndex


def assemble_constraints(
    chain: GridChain, tree: CommonNoiseTree, var_limit: int = 10_000_000
) -> LPProblem:
    """Build the balance constraints for one population; the objective starts at zero."""
    sizes = tree.sizes
    n_states = chain.n_states
    horizon = tree.horizon
    index = VariableIndex(sizes, n_states)
    if index.n_vars > var_limit:
        raise ValueError(f"LP too large: {index.n_vars} variables exceed the limit {var_limit}")

    p_mat = chain.transition
    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    data: list[np.ndarray] = []
    for t in range(horizon + 1):
        n_t = sizes[t]
        block_rows = np.arange(index.mu_offsets[t], index.mu_offsets[t + 1])
        node_p = np.repeat(tree.probs[t], n_states)
        rows.append(block_rows)
        cols.append(block_rows)  # mu columns share the row numbering
        data.append(node_p)
        if t < horizon:
            rows.append(block_rows)
            cols.append(np.arange(index.m_offsets[t], index.m_offsets[t + 1]))
            data.append(node_p)
        if t > 0:
            parents = tree.parents[t]
            kern = tree.kernels[t][parents, np.arange(n_t)]
            coef = tree.probs[t - 1][parents] * kern
            # inflow: row (t, u, x) gets -coef(u) * pi_X(x_prev; x) on m_{t-1}(parent, x_prev)
            r = np.repeat(block_rows, n_states)
            x_prev = np.tile(np.arange(n_states), n_t * n_states)
            u_rep = np.repeat(np.arange(n_t), n_states * n_states)
            x_cur = np.tile(np.repeat(np.arange(n_states), n_states), n_t)
            c_idx = index.m_offsets[t - 1] + parents[u_rep] * n_states + x_prev
            d = -np.repeat(coef, n_states * n_states) * p_mat[x_prev, x_cur]
            rows.append(r)
            cols.append(c_idx)
            data.append(d)

    a = sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(index.n_rows, index.n_vars),
    ).tocsr()
    b = np.zeros(index.n_rows)
    b[index.mu_block(0)] = chain.initial
    return LPProblem(a=a, b=b, c=np.zeros(index.n_vars), index=index)


def set_objective(problem: LPProblem, tables: RewardTables, tree: CommonNoiseTree) -> None:
    """Load the probability-weighted reward coefficients into the problem."""
    index = problem.index
    for t in range(index.horizon + 1):
        node_p = np.repeat(tree.probs[t], index.n_states)
        problem.c[index.mu_block(t)] = node_p * tables.g[t]
        if t < index.horizon:
            problem.c[index.m_block(t)] = node_p * tables.f[t].ravel()


def evaluate_gamma(tables: RewardTables, occ: OccupationPair, tree: CommonNoiseTree) -> float:
    """Linear reward of an occupation pair under fixed reward tables."""
    total = 0.0
    for t in range(occ.horizon):
        total += float(tree.probs[t] @ (tables.f[t] * occ.m[t]).sum(axis=1))
    for t in range(occ.horizon + 1):
        total += float(tables.g[t] * (tree.probs[t] @ occ.mu[t].sum(axis=1)))
    return total


def best_response_dp(
    tables: RewardTables,
    chain: GridChain,
    tree: CommonNoiseTree,
    stop_on_tie: bool = True,
) -> tuple[float, StoppingRule]:
    """Backward recursion on the product (state, node) chain.

    Stops where the stopping reward attains the maximum; with
    ``stop_on_tie`` the rule stops on exact ties, matching the earliest
    optimal stopping time.
    """
    horizon = tree.horizon
    p_t = chain.transition.T
    values = np.full((tree.sizes[horizon], chain.n_states), tables.g[horizon])
    stop: list[np.ndarray | None] = [None] * (horizon + 1)
    stop[horizon] = np.ones_like(values, dtype=bool)
    for t in range(horizon - 1, -1, -1):
        cont = tables.f[t] + tree.kernels[t + 1] @ (values @ p_t)
        g_t = tables.g[t]
        stop[t] = (g_t >= cont) if stop_on_tie else (g_t > cont)
        values = np.maximum(cont, g_t)
    value = float(chain.initial @ values[0])
    return value, StoppingRule(stop)


def forward_occupation(
    rule: StoppingRule, chain: GridChain, tree: CommonNoiseTree
) -> OccupationPair:
    """Propagate conditional active mass through the tree under a stopping rule.

    The tree kernel cancels from conditional masses, so each node inherits its
    parent's active mass pushed one step through the state chain.
    """
    horizon = tree.horizon
    m: list[np.ndarray] = []
    mu: list[np.ndarray] = []
    active = np.tile(chain.initial, (1, 1))
    for t in range(horizon + 1):
        stopping = np.where(rule.stop[t], active, 0.0)
        staying = active - stopping
        mu.append(stopping)
        if t < horizon:
            m.append(staying)
            active = (staying @ chain.transition)[tree.parents[t + 1]]
    return OccupationPair(m=m, mu=mu)


def occupation_vector(problem: LPProblem, occ: OccupationPair) -> np.ndarray:
    """Flatten an occupation pair into the problem's variable layout."""
    x = np.zeros(problem.index.n_vars)
    for t in range(occ.horizon + 1):
        x[problem.index.mu_block(t)] = occ.mu[t].ravel()
        if t < occ.horizon:
            x[problem.index.m_block(t)] = occ.m[t].ravel()
    return x


def constraint_residual(problem: LPProblem, occ: OccupationPair) -> float:
    """Largest absolute violation of the balance rows by an occupation pair."""
    return float(np.max(np.abs(problem.a @ occupation_vector(problem, occ) - problem.b)))


def clamp_small_negatives(arr: np.ndarray, tol: float = MASS_CLAMP) -> np.ndarray:
    """Zero out tiny negative masses; anything more negative is an error."""
    low = arr.min() if arr.size else 0.0
    if low < -tol:
        raise ValueError(f"occupation mass {low} below -{tol}")
    return np.where(arr < 0.0, 0.0, arr)


def _extract_occupation(problem: LPProblem, x: np.ndarray) -> OccupationPair:
    index = problem.index
    n_s = index.n_states
    mu = [
        clamp_small_negatives(x[index.mu_block(t)].reshape(index.sizes[t], n_s))
        for t in range(index.horizon + 1)
    ]
    m = [
        clamp_small_negatives(x[index.m_block(t)].reshape(index.sizes[t], n_s))
        for t in range(index.horizon)
    ]
    return OccupationPair(m=m, mu=mu)


def best_response_lp(problem: LPProblem) -> tuple[float, OccupationPair]:
    """Solve the assembled LP with a simplex backend, returning an optimal vertex."""
    res = optimize.linprog(
        -problem.c,
        A_eq=problem.a,
        b_eq=problem.b,
        bounds=(0.0, None),
        method="highs-ds",
        options={
            "primal_feasibility_tolerance": 1e-11,
            "dual_feasibility_tolerance": 1e-11,
        },
    )
    if res.status != 0:
        raise RuntimeError(
            f"LP best response failed (status {res.status}): {res.message}; "
            "the feasible set is nonempty by construction, so this indicates an assembly bug"
        )
    return float(problem.c @ res.x), _extract_occupation(problem, res.x)


def write_problem(problem: LPProblem, directory: str | Path) -> dict[str, Path]:
    """Write the LP in the plain-text interchange layout.

    ``constraints.txt`` holds one ``row col coef`` triplet per line (0-based),
    ``rhs.txt`` and ``objective.txt`` one value per line.  The objective is to
    be maximized subject to the equality rows and nonnegative variables.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "constraints": directory / "constraints.txt",
        "rhs": directory / "rhs.txt",
        "objective": directory / "objective.txt",
    }
    coo = problem.a.tocoo()
    with open(paths["constraints"], "w", encoding="utf-8") as fh:
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{int(r)} {int(c)} {float(v)!r}\n")
    np.savetxt(paths["rhs"], problem.b)
    np.savetxt(paths["objective"], problem.c)
    return paths


def read_primal(path: str | Path, n_vars: int) -> np.ndarray:
    """Read a whitespace-separated primal vector produced by an external solver."""
    x = np.loadtxt(path).ravel()
    if x.size != n_vars:
        raise ValueError(f"primal vector has {x.size} entries, expected {n_vars}")
    return x


def load_external_solution(
    problem: LPProblem, path: str | Path, feas_tol: float = 1e-7
) -> tuple[float, OccupationPair]:
    """Validate and unpack an externally computed primal solution."""
    x = read_primal(path, problem.index.n_vars)
    residual = float(np.max(np.abs(problem.a @ x - problem.b)))
    if residual > feas_tol:
        raise ValueError(f"external solution violates constraints by {residual}")
    return float(problem.c @ x), _extract_occupation(problem, x)
