"""Experiment orchestration and emission of plot-ready data files.

``run_experiment`` builds the model from a configuration, runs fictitious
play, and collects per-(time, node) installed capacities and prices together
with the exploitability series.  ``deterministic_baseline`` runs the same
pipeline on a single-path carbon trajectory.  ``emit`` writes CSV/JSON files
with fixed column order; emitting the same report twice produces byte
identical files.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .config import RunConfig, config_hash, to_json
from .fictitious_play import FPState, lpfp
from .lp_core import MeanFieldProfile
from .model import ElectricityModel, build_model

__all__ = [
    "RunReport",
    "run_experiment",
    "deterministic_baseline",
    "min_path",
    "max_path",
    "emit",
]


@dataclass
class RunReport:
    """Equilibrium quantities of one experiment."""

    config: RunConfig
    words: list[list[str]]
    probs: list[np.ndarray]
    conventional_gw: list[np.ndarray]
    renewable_gw: list[np.ndarray]
    prices: list[np.ndarray]
    exploitability: list[tuple[float, float]]
    gammas: list[tuple[float, float]]
    values: list[tuple[float, float]]
    profile: MeanFieldProfile
    metadata: dict = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return len(self.words) - 1

    @property
    def min_word(self) -> str:
        return "s" * len(self.config.adjustment_dates)

    @property
    def max_word(self) -> str:
        return "j" * len(self.config.adjustment_dates)

    def expectation(self, series: str) -> np.ndarray:
        """Probability-weighted curve over nodes, one value per time index."""
        data = getattr(self, series)
        return np.array([float(p @ v) for p, v in zip(self.probs, data)])

    def conditional(self, series: str, leaf: str) -> np.ndarray:
        """Curve along the ancestors of a designated leaf ('min', 'max' or a word)."""
        word = {"min": self.min_word, "max": self.max_word}.get(leaf, leaf)
        data = getattr(self, series)
        out = []
        for t in range(self.horizon + 1):
            matches = [i for i, w in enumerate(self.words[t]) if word.startswith(w)]
            if len(matches) != 1:
                raise KeyError(f"no unique ancestor of leaf {word!r} at time {t}")
            out.append(data[t][matches[0]])
        return np.array(out)


def _capacities(model: ElectricityModel, profile: MeanFieldProfile) -> tuple[list, list]:
    """Installed GW per (t, node): active conventional mass, entered renewable mass."""
    supply = model.supply
    conv, ren = [], []
    horizon = model.horizon
    for t in range(horizon + 1):
        if t < horizon:
            active = profile.conventional.m[t].sum(axis=1)
            not_entered = profile.renewable.m[t].sum(axis=1)
        else:
            active = profile.conventional.mu[t].sum(axis=1)
            not_entered = profile.renewable.mu[t].sum(axis=1)
        conv.append(supply.conventional_capacity * active)
        ren.append(
            supply.renewable_base_capacity
            + supply.renewable_new_capacity * (1.0 - not_entered)
        )
    return conv, ren


def run_experiment(config: RunConfig, verbose: bool = False) -> RunReport:
    """Build the model, run fictitious play, and collect report quantities."""
    started = time.perf_counter()
    model = build_model(config)
    state: FPState = lpfp(
        model,
        config.n_iterations,
        solver=config.solver,
        initial=config.initial_profile,
        cross_check_every=config.cross_check_every,
        lp_var_limit=config.lp_var_limit,
        verbose=verbose,
    )
    profile = state.profile
    conv, ren = _capacities(model, profile)
    prices = model.price_tables(profile)
    words = [[node.word for node in level] for level in model.tree.levels]
    metadata = {
        "config_hash": config_hash(config),
        "iterations": state.iterate,
        "solver": config.solver,
        "seed": config.seed,
        "runtime_seconds": round(time.perf_counter() - started, 3),
        "fp_runtime_seconds": round(state.runtime_seconds, 3),
        "final_exploitability": list(state.exploitability_history[-1]),
        "max_constraint_residual": max(state.residual_history, default=0.0),
        "max_flow_residual": max(state.flow_history, default=0.0),
        "max_mass_error": max(state.mass_history, default=0.0),
    }
    return RunReport(
        config=config,
        words=words,
        probs=model.tree.probs,
        conventional_gw=conv,
        renewable_gw=ren,
        prices=prices,
        exploitability=state.exploitability_history,
        gammas=state.gamma_history,
        values=state.value_history,
        profile=profile,
        metadata=metadata,
    )


def min_path(config: RunConfig) -> tuple[float, ...]:
    """Carbon trajectory staying at the initial level throughout."""
    return (config.z0,) * (config.n_steps + 1)


def max_path(config: RunConfig) -> tuple[float, ...]:
    """Carbon trajectory jumping one level at every adjustment date."""
    grid = config.carbon_grid
    path = [config.z0]
    level = grid.index(config.z0)
    for t in range(1, config.n_steps + 1):
        if t in config.adjustment_dates and level + 1 < len(grid):
            level += 1
        path.append(grid[level])
    return tuple(path)


def deterministic_baseline(
    config: RunConfig, path: tuple[float, ...], verbose: bool = False
) -> RunReport:
    """Run the pipeline with the carbon price following ``path`` with probability 1."""
    if len(path) != config.n_steps + 1:
        raise ValueError("path must have n_steps + 1 levels")
    if path[0] != config.z0:
        raise ValueError("path must start at z0")
    grid = config.carbon_grid
    stays = []
    for t in range(1, len(path)):
        if t in config.adjustment_dates:
            i = grid.index(path[t - 1])
            if path[t] == path[t - 1]:
                stays.append(1.0)
            elif i + 1 < len(grid) and path[t] == grid[i + 1]:
                stays.append(0.0)
            else:
                raise ValueError(f"path level {path[t]} unreachable at date {t}")
        elif path[t] != path[t - 1]:
            raise ValueError(f"path moves outside an adjustment date at t={t}")
    deterministic = replace(
        config,
        scenario_names=("deterministic",),
        prior=(1.0,),
        stay_prob=(tuple(stays),),
    )
    return run_experiment(deterministic, verbose=verbose)


def _leaf_tag(word: str, min_word: str, max_word: str) -> str:
    tags = []
    if min_word.startswith(word):
        tags.append("min")
    if max_word.startswith(word):
        tags.append("max")
    return ";".join(tags)


def _write_csv(path: Path, header: list[str], rows: list[tuple]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def emit(report: RunReport, directory: str | Path) -> dict[str, Path]:
    """Write capacities, prices, exploitability, history and config echo."""
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        paths = {
            "capacities": directory / "capacities.csv",
            "prices": directory / "prices.csv",
            "exploitability": directory / "exploitability.csv",
            "fp_history": directory / "fp_history.csv",
            "config": directory / "config.json",
            "metadata": directory / "metadata.json",
        }
        cap_rows = []
        for t in range(len(report.words)):
            for i, word in enumerate(report.words[t]):
                cap_rows.append(
                    (
                        t,
                        word or "-",
                        _leaf_tag(word, report.min_word, report.max_word),
                        repr(float(report.conventional_gw[t][i])),
                        repr(float(report.renewable_gw[t][i])),
                        repr(float(report.probs[t][i])),
                    )
                )
        _write_csv(
            paths["capacities"],
            ["t", "node_id", "leaf_tag", "conv_GW", "ren_GW", "prob"],
            cap_rows,
        )
        price_rows = [
            (t, report.words[t][i] or "-", repr(float(p[0])), repr(float(p[1])))
            for t in range(len(report.prices))
            for i, p in enumerate(report.prices[t])
        ]
        _write_csv(paths["prices"], ["t", "node_id", "peak", "offpeak"], price_rows)
        eps_rows = [
            (i, repr(e[0]), repr(e[1])) for i, e in enumerate(report.exploitability)
        ]
        _write_csv(paths["exploitability"], ["iter", "eps_c", "eps_r"], eps_rows)
        hist_rows = [
            (i, repr(e[0]), repr(e[1]), repr(g[0]), repr(g[1]), repr(v[0]), repr(v[1]))
            for i, (e, g, v) in enumerate(
                zip(report.exploitability, report.gammas, report.values)
            )
        ]
        _write_csv(
            paths["fp_history"],
            ["iter", "eps_c", "eps_r", "gamma_c", "gamma_r", "value_c", "value_r"],
            hist_rows,
        )
        with open(paths["config"], "w", encoding="utf-8", newline="\n") as fh:
            fh.write(to_json(report.config))
        with open(paths["metadata"], "w", encoding="utf-8", newline="\n") as fh:
            json.dump(report.metadata, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return paths
    except OSError as exc:
        raise OSError(f"failed to write report under {directory}: {exc}") from exc
