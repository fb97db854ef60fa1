"""Fictitious play over occupation measures with running Cesàro averaging.

Each iteration computes both populations' best responses against the same
averaged profile, then folds the responses into the average with weights
l/(l+1) and 1/(l+1).  The recorded exploitability at index l is that of the
profile after l updates (index 0 is the supplied initial profile).
"""

from __future__ import annotations

import sys
import time
from dataclasses import dataclass, field

import numpy as np

from .lp_core import (
    LPProblem,
    MeanFieldProfile,
    OccupationPair,
    assemble_constraints,
    best_response_dp,
    best_response_lp,
    constraint_residual,
    evaluate_gamma,
    forward_occupation,
    set_objective,
)
from .model import POPULATIONS, ElectricityModel

FEASIBILITY_TOL = 1e-9

__all__ = ["FPState", "lpfp", "average", "average_profile", "check_divergence"]


@dataclass
class FPState:
    """Averaged profile and per-iteration diagnostics of one fictitious-play run."""

    iterate: int
    profile: MeanFieldProfile
    exploitability_history: list[tuple[float, float]] = field(default_factory=list)
    value_history: list[tuple[float, float]] = field(default_factory=list)
    gamma_history: list[tuple[float, float]] = field(default_factory=list)
    residual_history: list[float] = field(default_factory=list)
    flow_history: list[float] = field(default_factory=list)
    mass_history: list[float] = field(default_factory=list)
    runtime_seconds: float = 0.0

    def history_rows(self) -> list[tuple]:
        """(iteration, eps_conventional, eps_renewable, gamma_conventional, gamma_renewable,
        best_response_value_conventional, best_response_value_renewable) per iteration."""
        return [
            (i, e[0], e[1], g[0], g[1], v[0], v[1])
            for i, (e, g, v) in enumerate(
                zip(self.exploitability_history, self.gamma_history, self.value_history)
            )
        ]


def average(old: OccupationPair, new: OccupationPair, ell: int) -> OccupationPair:
    """Convex combination with weights ell/(ell+1) and 1/(ell+1)."""
    w_old = ell / (ell + 1.0)
    w_new = 1.0 / (ell + 1.0)
    return OccupationPair(
        m=[w_old * a + w_new * b for a, b in zip(old.m, new.m)],
        mu=[w_old * a + w_new * b for a, b in zip(old.mu, new.mu)],
    )


def average_profile(old: MeanFieldProfile, new: MeanFieldProfile, ell: int) -> MeanFieldProfile:
    return MeanFieldProfile(
        conventional=average(old.conventional, new.conventional, ell),
        renewable=average(old.renewable, new.renewable, ell),
    )


def check_divergence(series: list[float], window: int = 20, factor: float = 10.0) -> None:
    """Abort when exploitability grows by more than ``factor`` over ``window`` iterations."""
    if len(series) > window and series[-1] > factor * series[-1 - window]:
        raise RuntimeError(
            f"exploitability rose from {series[-1 - window]:.6g} to {series[-1]:.6g} "
            f"over {window} iterations: stale reward tables or solver failure"
        )


def lpfp(
    model: ElectricityModel,
    n_iter: int,
    solver: str = "dp",
    initial: str | MeanFieldProfile = "never_stop",
    cross_check_every: int = 10,
    early_exit_rel: float | None = None,
    lp_var_limit: int = 10_000_000,
    validate: bool = True,
    verbose: bool = False,
) -> FPState:
    """Run fictitious play for ``n_iter`` iterations.

    ``solver`` picks the best-response route: "dp" (backward recursion, the
    default) or "lp" (simplex on the occupation polytope).  With the dp route
    the lp value is recomputed every ``cross_check_every`` iterations and the
    two must agree; with the lp route the dp value is checked every iteration.
    ``early_exit_rel`` stops once both exploitabilities fall below that
    fraction of the initial maximum.
    """
    if solver not in ("dp", "lp"):
        raise ValueError(f"unknown solver {solver!r}")
    started = time.perf_counter()
    profile = model.initial_profile(initial) if isinstance(initial, str) else initial.copy()
    problems: dict[str, LPProblem] = {}

    def problem_for(population: str) -> LPProblem:
        if population not in problems:
            problems[population] = assemble_constraints(
                model.chain(population), model.tree, var_limit=lp_var_limit
            )
        return problems[population]

    state = FPState(iterate=0, profile=profile)
    max_series: list[float] = []
    initial_max: float | None = None
    for ell in range(n_iter):
        prices = model.price_tables(profile)
        responses: dict[str, OccupationPair] = {}
        eps_pair = []
        gamma_pair = []
        value_pair = []
        for population in POPULATIONS:
            tables = model.reward_tables(profile, population, prices=prices)
            chain = model.chain(population)
            dp_value, rule = best_response_dp(tables, chain, model.tree)
            lp_requested = solver == "lp" or (
                cross_check_every and ell % cross_check_every == 0
            )
            if lp_requested:
                problem = problem_for(population)
                set_objective(problem, tables, model.tree)
                lp_value, lp_occ = best_response_lp(problem)
                if abs(lp_value - dp_value) > 1e-7 * max(1.0, abs(dp_value)):
                    raise RuntimeError(
                        f"lp/dp best-response mismatch for {population} at iteration {ell}: "
                        f"{lp_value} vs {dp_value}"
                    )
            if solver == "lp":
                value, response = lp_value, lp_occ
            else:
                value, response = dp_value, forward_occupation(rule, chain, model.tree)
            own = getattr(profile, population)
            own_value = evaluate_gamma(tables, own, model.tree)
            eps = value - own_value
            if eps < -1e-9:
                raise RuntimeError(
                    f"negative exploitability {eps} for {population} at iteration {ell}"
                )
            responses[population] = response
            eps_pair.append(eps)
            gamma_pair.append(own_value)
            value_pair.append(value)

        state.exploitability_history.append((eps_pair[0], eps_pair[1]))
        state.gamma_history.append((gamma_pair[0], gamma_pair[1]))
        state.value_history.append((value_pair[0], value_pair[1]))
        max_series.append(max(eps_pair))
        if initial_max is None:
            initial_max = max_series[0]
        check_divergence(max_series)
        if verbose and ell % 10 == 0:
            print(
                f"iter {ell:5d}  eps_c {eps_pair[0]:.6g}  eps_r {eps_pair[1]:.6g}",
                file=sys.stderr,
            )

        profile = average_profile(profile, MeanFieldProfile(**responses), ell)
        state.iterate = ell + 1
        state.profile = profile
        if validate:
            residual = max(
                constraint_residual(problem_for(population), getattr(profile, population))
                for population in POPULATIONS
            )
            state.residual_history.append(residual)
            state.flow_history.append(
                max(getattr(profile, p).flow_residual(model.tree) for p in POPULATIONS)
            )
            state.mass_history.append(
                max(
                    abs(getattr(profile, p).total_stop_mass(model.tree) - 1.0)
                    for p in POPULATIONS
                )
            )
            if residual > FEASIBILITY_TOL:
                raise RuntimeError(
                    f"averaged profile violates constraints by {residual} at iteration {ell}"
                )
        if early_exit_rel is not None and max(eps_pair) < early_exit_rel * initial_max:
            break

    state.runtime_seconds = time.perf_counter() - started
    return state
