"""Reflected birth-death chains approximating CIR and Jacobi diffusions.

The grid step is chosen so that one chain step matches one time step of the
diffusion at the long-run mean; interior states move one step up or down with
probabilities built from the drift and squared volatility, and the boundary
states reflect onto their neighbor.  Initial distributions discretize the
stationary law (gamma for CIR, beta for Jacobi) by evaluating the density on
the grid and normalizing.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

PROB_ATOL = 1e-12

__all__ = [
    "DiffusionParams",
    "GridChain",
    "grid_step",
    "build_chain",
    "initial_distribution",
    "marginal_law",
    "chain_to_dict",
    "dump_chain",
]


@dataclass(frozen=True)
class DiffusionParams:
    """Mean-reverting diffusion to be approximated on [lo, hi].

    kind "cir": drift k(theta - x), volatility delta * sqrt(x).
    kind "jacobi": drift k(theta - x), volatility delta * sqrt(x (1 - x)).
    """

    kind: str
    mean_reversion: float
    long_run_mean: float
    vol_coef: float
    lo: float
    hi: float
    dt: float

    def __post_init__(self) -> None:
        if self.kind not in ("cir", "jacobi"):
            raise ValueError(f"unknown diffusion kind {self.kind!r}")
        if self.mean_reversion <= 0:
            raise ValueError("mean reversion must be positive")
        if self.vol_coef <= 0:
            raise ValueError("volatility coefficient must be positive")
        if self.dt <= 0:
            raise ValueError("time step must be positive")
        if not self.lo < self.hi:
            raise ValueError("range must satisfy lo < hi")
        if self.kind == "jacobi" and not (0.0 <= self.lo < self.hi <= 1.0):
            raise ValueError("jacobi range must lie within [0, 1]")

    def drift(self, x: np.ndarray | float) -> np.ndarray | float:
        return self.mean_reversion * (self.long_run_mean - x)

    def sigma2(self, x: np.ndarray | float) -> np.ndarray | float:
        if self.kind == "cir":
            return self.vol_coef**2 * x
        return self.vol_coef**2 * x * (1.0 - x)

    def sigma_at_mean(self) -> float:
        return math.sqrt(self.sigma2(self.long_run_mean))


@dataclass(eq=False)
class GridChain:
    """Finite-state time-homogeneous chain: grid, row-stochastic matrix, initial law."""

    grid: np.ndarray
    transition: np.ndarray
    initial: np.ndarray

    @property
    def n_states(self) -> int:
        return len(self.grid)


def grid_step(params: DiffusionParams) -> tuple[float, int]:
    """Grid spacing and interval count matching one diffusion step at the long-run mean."""
    n = math.floor((params.hi - params.lo) / (params.sigma_at_mean() * math.sqrt(params.dt)))
    if n < 1:
        raise ValueError("range too small relative to volatility: zero grid intervals")
    return (params.hi - params.lo) / n, n


def build_chain(params: DiffusionParams) -> GridChain:
    """Two-point interior transitions from drift/volatility, reflecting boundaries."""
    dx, n = grid_step(params)
    grid = np.linspace(params.lo, params.hi, n + 1)
    p = np.zeros((n + 1, n + 1))
    p[0, 1] = 1.0
    p[n, n - 1] = 1.0
    for i in range(1, n):
        x = grid[i]
        b = params.drift(x)
        s2 = params.sigma2(x)
        denom = s2 + dx * abs(b)
        if denom == 0.0:
            raise ValueError(f"degenerate transition at grid point {x}")
        p[i, i + 1] = (s2 / 2 + dx * max(b, 0.0)) / denom
        p[i, i - 1] = (s2 / 2 - dx * min(b, 0.0)) / denom
    return GridChain(grid=grid, transition=p, initial=initial_distribution(params, grid))


def initial_distribution(params: DiffusionParams, grid: np.ndarray) -> np.ndarray:
    """Stationary density (gamma or beta) evaluated on the grid and normalized."""
    k, theta, delta = params.mean_reversion, params.long_run_mean, params.vol_coef
    if params.kind == "cir":
        shape = 2.0 * theta * k / delta**2
        scale = delta**2 / (2.0 * k)
        logd = stats.gamma.logpdf(grid, a=shape, scale=scale)
    else:
        if grid[0] <= 0.0 or grid[-1] >= 1.0:
            raise ValueError("beta density undefined at grid endpoints 0 or 1")
        a = 2.0 * k * theta / delta**2
        b = 2.0 * k * (1.0 - theta) / delta**2
        logd = stats.beta.logpdf(grid, a, b)
    if np.any(np.isposinf(logd)):
        raise ValueError("stationary density diverges on the grid")
    top = np.max(logd)
    if not np.isfinite(top):
        raise ValueError("stationary density vanishes on the whole grid")
    w = np.exp(logd - top)
    return w / w.sum()


def marginal_law(chain: GridChain, t: int) -> np.ndarray:
    """Law of the chain after t steps from its initial distribution."""
    if t < 0:
        raise ValueError("time must be nonnegative")
    v = chain.initial.copy()
    for _ in range(t):
        v = v @ chain.transition
    return v


def chain_to_dict(chain: GridChain) -> dict:
    return {
        "grid": chain.grid.tolist(),
        "transition": chain.transition.tolist(),
        "initial": chain.initial.tolist(),
    }


def dump_chain(chain: GridChain, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(chain_to_dict(chain), fh, indent=2)
        fh.write("\n")
