"""Carbon-price scenario tree: common noise with a hidden regime.

The carbon price moves on a fixed grid and can jump one level up at each
adjustment date; jump frequencies depend on an unobserved scenario.  Realized
price histories therefore carry information about the scenario, and each
history is materialized as a tree node holding its unconditional probability,
the Bayesian posterior over scenarios, and the transition probabilities to its
children.  Away from adjustment dates, and at the top of the grid, the price
does not move and nodes have a single child.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

PROB_ATOL = 1e-12

__all__ = [
    "ScenarioSpec",
    "TrajectoryNode",
    "CommonNoiseTree",
    "build_tree",
    "path_probability",
    "posterior",
    "carbon_at",
    "tree_to_dict",
    "dump_tree",
]


@dataclass(frozen=True)
class ScenarioSpec:
    """Hidden-regime carbon price process on a finite grid.

    ``stay_prob[s][j]`` is the probability that, under scenario ``s``, the
    price stays at its current level at the ``j``-th adjustment date (it jumps
    to the next grid level otherwise).  At the top grid level the price stays
    with probability 1.
    """

    carbon_grid: tuple[float, ...]
    z0: float
    scenarios: tuple[str, ...]
    prior: tuple[float, ...]
    adjustment_dates: tuple[int, ...]
    stay_prob: tuple[tuple[float, ...], ...]
    horizon: int

    def __post_init__(self) -> None:
        if not self.carbon_grid:
            raise ValueError("carbon grid is empty")
        if not self.scenarios:
            raise ValueError("scenario set is empty")
        if any(b <= a for a, b in zip(self.carbon_grid, self.carbon_grid[1:])):
            raise ValueError("carbon grid must be strictly increasing")
        if self.z0 not in self.carbon_grid:
            raise ValueError("z0 must be a carbon grid level")
        if len(self.prior) != len(self.scenarios):
            raise ValueError("prior length does not match scenario count")
        if any(p < 0 for p in self.prior):
            raise ValueError("prior has negative entries")
        if abs(sum(self.prior) - 1.0) > PROB_ATOL:
            raise ValueError("prior does not sum to 1")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if any(b <= a for a, b in zip(self.adjustment_dates, self.adjustment_dates[1:])):
            raise ValueError("adjustment dates must be strictly increasing")
        for t in self.adjustment_dates:
            if t < 1 or t >= self.horizon:
                raise ValueError(f"adjustment date {t} outside [1, horizon)")
        if len(self.stay_prob) != len(self.scenarios):
            raise ValueError("stay_prob needs one row per scenario")
        for row in self.stay_prob:
            if len(row) != len(self.adjustment_dates):
                raise ValueError("stay_prob rows must match adjustment dates")
            if any(not 0.0 <= p <= 1.0 for p in row):
                raise ValueError("stay probabilities must lie in [0, 1]")

    @property
    def n_scenarios(self) -> int:
        return len(self.scenarios)

    def level_index(self, z: float) -> int:
        try:
            return self.carbon_grid.index(z)
        except ValueError:
            raise ValueError(f"{z!r} is not a carbon grid level") from None

    def step_probability(self, t: int, scenario: int, z_from: float, z_to: float) -> float:
        """Single-step kernel: probability that the price moves z_from -> z_to into time t."""
        if t not in self.adjustment_dates:
            return 1.0 if z_to == z_from else 0.0
        i = self.level_index(z_from)
        if i == len(self.carbon_grid) - 1:
            return 1.0 if z_to == z_from else 0.0
        p = self.stay_prob[scenario][self.adjustment_dates.index(t)]
        if z_to == z_from:
            return p
        if z_to == self.carbon_grid[i + 1]:
            return 1.0 - p
        return 0.0


@dataclass
class TrajectoryNode:
    """One realized carbon-price history, with filtering state.

    ``word`` records the stay/jump outcomes at the adjustment dates reached so
    far ('s'/'j'), which identifies the node within its time slice.
    ``children`` holds ``(index within the next time slice, transition
    probability)`` pairs.
    """

    time: int
    path: tuple[float, ...]
    prob: float
    posterior: tuple[float, ...]
    word: str
    parent: int | None
    children: list[tuple[int, float]] = field(default_factory=list)

    @property
    def level(self) -> float:
        return self.path[-1]

    @property
    def node_id(self) -> str:
        return self.word or "-"

    def carbon_at(self, s: int) -> float:
        if s < 0 or s > self.time:
            raise ValueError(f"time {s} outside the node history [0, {self.time}]")
        return self.path[s]


def carbon_at(node: TrajectoryNode, s: int) -> float:
    """Carbon level at time ``s`` along the history encoded by ``node``."""
    return node.carbon_at(s)


@dataclass
class CommonNoiseTree:
    """All positive-probability carbon histories, one slice per time index.

    ``probs[t]``, ``parents[t]`` and ``z[t]`` are per-slice arrays;
    ``kernels[t]`` is the (n_{t-1} x n_t) matrix of transition probabilities
    from slice t-1 to slice t.  Immutable after construction.
    """

    spec: ScenarioSpec
    levels: list[list[TrajectoryNode]]
    probs: list[np.ndarray]
    parents: list[np.ndarray | None]
    kernels: list[np.ndarray | None]
    z: list[np.ndarray]
    _ancestor_cache: dict[tuple[int, int], np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def horizon(self) -> int:
        return self.spec.horizon

    @property
    def sizes(self) -> list[int]:
        return [len(level) for level in self.levels]

    def node(self, t: int, i: int) -> TrajectoryNode:
        return self.levels[t][i]

    def find_index(self, t: int, word: str) -> int:
        for i, node in enumerate(self.levels[t]):
            if node.word == word:
                return i
        raise KeyError(f"no node with word {word!r} at time {t}")

    def leaf(self, word: str) -> TrajectoryNode:
        return self.levels[self.horizon][self.find_index(self.horizon, word)]

    def ancestors(self, t: int, s: int) -> np.ndarray:
        """Index of each time-t node's ancestor at time s <= t."""
        if s > t:
            raise ValueError("ancestor time must not exceed node time")
        key = (t, s)
        if key not in self._ancestor_cache:
            idx = np.arange(len(self.levels[t]))
            for tau in range(t, s, -1):
                idx = self.parents[tau][idx]
            self._ancestor_cache[key] = idx
        return self._ancestor_cache[key]


def build_tree(spec: ScenarioSpec) -> CommonNoiseTree:
    """Expand the history tree with exact Bayes updates, pruning zero-probability branches."""
    root = TrajectoryNode(0, (spec.z0,), 1.0, spec.prior, "", None)
    levels = [[root]]
    for t in range(1, spec.horizon + 1):
        branching = t in spec.adjustment_dates
        nxt: list[TrajectoryNode] = []
        for i, node in enumerate(levels[-1]):
            post = np.asarray(node.posterior)
            i_lvl = spec.level_index(node.level)
            candidates = [node.level]
            if i_lvl + 1 < len(spec.carbon_grid):
                candidates.append(spec.carbon_grid[i_lvl + 1])
            for z_to in candidates:
                w = post * np.array(
                    [spec.step_probability(t, s, node.level, z_to) for s in range(spec.n_scenarios)]
                )
                q = float(w.sum())
                if q == 0.0:
                    continue
                suffix = ("s" if z_to == node.level else "j") if branching else ""
                child = TrajectoryNode(
                    time=t,
                    path=node.path + (z_to,),
                    prob=node.prob * q,
                    posterior=tuple(w / q),
                    word=node.word + suffix,
                    parent=i,
                )
                node.children.append((len(nxt), q))
                nxt.append(child)
        levels.append(nxt)

    probs = [np.array([n.prob for n in level]) for level in levels]
    z = [np.array([n.level for n in level]) for level in levels]
    parents: list[np.ndarray | None] = [None]
    kernels: list[np.ndarray | None] = [None]
    for t in range(1, spec.horizon + 1):
        parents.append(np.array([n.parent for n in levels[t]], dtype=int))
        k = np.zeros((len(levels[t - 1]), len(levels[t])))
        for i, node in enumerate(levels[t - 1]):
            for j, q in node.children:
                k[i, j] = q
        kernels.append(k)
    return CommonNoiseTree(spec=spec, levels=levels, probs=probs, parents=parents, kernels=kernels, z=z)


def path_probability(spec: ScenarioSpec, path: tuple[float, ...]) -> float:
    """Unconditional probability of observing the given carbon history.

    Marginalizes the per-scenario product of step kernels over the prior.
    Unreachable (but well-formed) paths return 0.
    """
    if not path:
        raise ValueError("path is empty")
    if path[0] != spec.z0:
        raise ValueError("path must start at z0")
    if len(path) > spec.horizon + 1:
        raise ValueError("path longer than the horizon")
    if any(level not in spec.carbon_grid for level in path):
        return 0.0
    total = 0.0
    for s in range(spec.n_scenarios):
        w = spec.prior[s]
        for k in range(1, len(path)):
            if w == 0.0:
                break
            w *= spec.step_probability(k, s, path[k - 1], path[k])
        total += w
    return total


def posterior(spec: ScenarioSpec, path: tuple[float, ...]) -> tuple[float, ...]:
    """Posterior scenario distribution given an observed carbon history."""
    if not path:
        raise ValueError("path is empty")
    if path[0] != spec.z0:
        raise ValueError("path must start at z0")
    weights = []
    for s in range(spec.n_scenarios):
        w = spec.prior[s]
        for k in range(1, len(path)):
            if w == 0.0:
                break
            w *= spec.step_probability(k, s, path[k - 1], path[k])
        weights.append(w)
    total = sum(weights)
    if total == 0.0:
        raise ValueError("posterior undefined on a zero-probability path")
    return tuple(w / total for w in weights)


def tree_to_dict(tree: CommonNoiseTree) -> dict:
    """JSON-friendly dump of the tree (node ids, paths, probabilities, posteriors, children)."""
    nodes = []
    for t, level in enumerate(tree.levels):
        for node in level:
            nodes.append(
                {
                    "time": t,
                    "id": node.node_id,
                    "path": list(node.path),
                    "prob": node.prob,
                    "posterior": list(node.posterior),
                    "children": [
                        {"id": tree.levels[t + 1][j].node_id, "prob": q} for j, q in node.children
                    ],
                }
            )
    return {"horizon": tree.horizon, "nodes": nodes}


def dump_tree(tree: CommonNoiseTree, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(tree_to_dict(tree), fh, indent=2)
        fh.write("\n")
