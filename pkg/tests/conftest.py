"""Shared slow fixtures: full equilibrium runs reused across acceptance checks."""

import warnings

import pytest

import lpmfg
from lpmfg.reporting import deterministic_baseline, min_path, run_experiment


@pytest.fixture(scope="session")
def setting2_report():
    """Full-size run with uncertainty kept through the horizon (201 iterations)."""
    cfg = lpmfg.setting2(n_iterations=201, cross_check_every=10)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return run_experiment(cfg)


@pytest.fixture(scope="session")
def deterministic_min_report():
    """Baseline with the carbon price pinned to its lowest trajectory."""
    cfg = lpmfg.setting2(n_iterations=201, cross_check_every=10)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return deterministic_baseline(cfg, min_path(cfg))
