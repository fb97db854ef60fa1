"""Independent brute-force oracles for the solver tests.

Everything here enumerates joint trajectories of (state chain, tree path)
explicitly and never calls the backward-recursion or LP code paths it is used
to check.
"""

from __future__ import annotations

import itertools

import numpy as np

from lpmfg.scenario_tree import CommonNoiseTree, ScenarioSpec, build_tree
from lpmfg.state_chains import GridChain


def make_chain(rng: np.random.Generator, n_states: int = 3) -> GridChain:
    """Random dense row-stochastic chain on an arbitrary grid."""
    transition = rng.uniform(0.1, 1.0, size=(n_states, n_states))
    transition /= transition.sum(axis=1, keepdims=True)
    initial = rng.uniform(0.1, 1.0, size=n_states)
    initial /= initial.sum()
    return GridChain(grid=np.arange(n_states, dtype=float), transition=transition, initial=initial)


def make_tree(horizon: int, dates: tuple[int, ...], stay: float = 0.5) -> CommonNoiseTree:
    spec = ScenarioSpec(
        carbon_grid=tuple(float(i) for i in range(len(dates) + 1)),
        z0=0.0,
        scenarios=("only",),
        prior=(1.0,),
        adjustment_dates=dates,
        stay_prob=((stay,) * len(dates),),
        horizon=horizon,
    )
    return build_tree(spec)


def random_tables(rng: np.random.Generator, tree: CommonNoiseTree, n_states: int):
    from lpmfg.lp_core import RewardTables

    f = [rng.uniform(-1.0, 1.0, size=(n, n_states)) for n in tree.sizes[:-1]]
    g = rng.uniform(-1.0, 1.0, size=tree.horizon + 1)
    return RewardTables(f=f, g=g)


def tree_paths(tree: CommonNoiseTree) -> list[tuple[list[int], float]]:
    """All root-to-leaf node index sequences with their probabilities."""
    horizon = tree.horizon
    paths = []
    for leaf_idx, leaf in enumerate(tree.levels[horizon]):
        seq = [leaf_idx]
        for t in range(horizon, 0, -1):
            seq.append(int(tree.parents[t][seq[-1]]))
        seq.reverse()
        paths.append((seq, leaf.prob))
    return paths


def joint_paths(chain: GridChain, tree: CommonNoiseTree):
    """All (state sequence, node sequence, probability) triples."""
    horizon = tree.horizon
    n_states = chain.n_states
    out = []
    for states in itertools.product(range(n_states), repeat=horizon + 1):
        p_states = chain.initial[states[0]]
        for a, b in zip(states, states[1:]):
            p_states *= chain.transition[a, b]
        if p_states == 0.0:
            continue
        for nodes, p_nodes in tree_paths(tree):
            out.append((states, nodes, p_states * p_nodes))
    return out


class RuleEnumerator:
    """Vectorized evaluation of every pure Markovian stopping rule.

    Decisions are indexed by (t < T, node, state); a rule is the bit pattern of
    its stop decisions, and everything stops at the horizon.
    """

    def __init__(self, chain: GridChain, tree: CommonNoiseTree):
        self.chain = chain
        self.tree = tree
        self.horizon = tree.horizon
        self.n_states = chain.n_states
        self.offsets = []
        count = 0
        for t in range(self.horizon):
            self.offsets.append(count)
            count += tree.sizes[t] * self.n_states
        self.n_decisions = count
        if count > 22:
            raise ValueError(f"{2**count} rules is too many to enumerate")
        n_rules = 2**count
        self.bits = (
            (np.arange(n_rules)[:, None] >> np.arange(count)[None, :]) & 1
        ).astype(bool)

    def decision(self, t: int, node: int, state: int) -> int:
        return self.offsets[t] + node * self.n_states + state

    def values(self, tables) -> np.ndarray:
        """Objective of every rule, by explicit trajectory enumeration."""
        n_rules = self.bits.shape[0]
        totals = np.zeros(n_rules)
        for states, nodes, prob in joint_paths(self.chain, self.tree):
            cols = [
                self.decision(t, nodes[t], states[t]) for t in range(self.horizon)
            ]
            stop_flags = np.hstack(
                [self.bits[:, cols], np.ones((n_rules, 1), dtype=bool)]
            )
            tau = np.argmax(stop_flags, axis=1)
            running = np.concatenate(
                [[0.0], np.cumsum([tables.f[t][nodes[t], states[t]] for t in range(self.horizon)])]
            )
            totals += prob * (running[tau] + tables.g[tau])
        return totals

    def best_value(self, tables) -> float:
        return float(self.values(tables).max())

    def rule_value(self, tables, rule) -> float:
        """Objective of one StoppingRule via the same trajectory enumeration."""
        bits = np.zeros(self.n_decisions, dtype=bool)
        for t in range(self.horizon):
            for u in range(self.tree.sizes[t]):
                for x in range(self.n_states):
                    bits[self.decision(t, u, x)] = rule.stop[t][u, x]
        total = 0.0
        for states, nodes, prob in joint_paths(self.chain, self.tree):
            tau = self.horizon
            running = 0.0
            for t in range(self.horizon):
                if bits[self.decision(t, nodes[t], states[t])]:
                    tau = t
                    break
                running += tables.f[t][nodes[t], states[t]]
            total += prob * (running + tables.g[tau])
        return total


def random_rule(rng: np.random.Generator, chain: GridChain, tree: CommonNoiseTree):
    from lpmfg.lp_core import StoppingRule

    stop = [
        rng.random((tree.sizes[t], chain.n_states)) < 0.5 for t in range(tree.horizon + 1)
    ]
    return StoppingRule(stop)
