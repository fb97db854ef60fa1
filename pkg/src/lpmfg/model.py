"""Electricity-market model: reward tables per mean-field profile.

Bundles the scenario tree, the two state chains, the demand/supply data and
the reward parameters, and turns a mean-field profile into clearing prices and
per-population reward tables.  Conventional producers collect the capped
margin gain net of fixed costs until they exit; renewable entry is modeled as
a stopping problem whose running reward carries a minus sign (profits forgone
before entry) and whose stopping reward nets the build cost against the
depreciated terminal value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import market
from .config import RunConfig
from .lp_core import (
    MeanFieldProfile,
    OccupationPair,
    RewardTables,
    best_response_dp,
    evaluate_gamma,
)
from .scenario_tree import CommonNoiseTree, ScenarioSpec, build_tree
from .state_chains import DiffusionParams, GridChain, build_chain, marginal_law

POPULATIONS = ("conventional", "renewable")

_PRICE_TOL = 1e-9

__all__ = [
    "RewardParams",
    "ElectricityModel",
    "build_model",
    "build_scenario_spec",
    "conventional_params",
    "renewable_params",
    "build_reward_tables",
    "exploitability",
]


@dataclass(frozen=True)
class RewardParams:
    """Discounting and cost parameters of both reward functionals."""

    rho: float
    dt: float
    horizon_years: float
    kappa_conventional: float
    scrap_value: float
    scrap_depreciation: float
    kappa_renewable: float
    build_cost: float
    build_depreciation: float
    revenue_scale: float


class ElectricityModel:
    """Immutable bundle of model primitives with per-profile price evaluation."""

    def __init__(
        self,
        tree: CommonNoiseTree,
        conventional_chain: GridChain,
        renewable_chain: GridChain,
        demand: market.DemandModel,
        supply: market.SupplySpec,
        rewards: RewardParams,
    ):
        self.tree = tree
        self.conventional_chain = conventional_chain
        self.renewable_chain = renewable_chain
        self.demand = demand
        self.supply = supply
        self.rewards = rewards
        horizon = tree.horizon

        self.eta = np.stack([marginal_law(renewable_chain, t) for t in range(horizon + 1)])
        self.eta_mean = self.eta @ renewable_chain.grid
        self.conventional_law = np.stack(
            [marginal_law(conventional_chain, t) for t in range(horizon + 1)]
        )
        # demand per (t, node): independent of the profile
        self.demand_pairs = []
        for t in range(horizon):
            d = demand.baseline[t] + demand.beta * (tree.z[t] - tree.spec.z0)
            if np.any(d < 0):
                raise ValueError(f"negative demand at time {t}")
            lam = demand.seasonal[t]
            self.demand_pairs.append(np.stack([demand.cbar_p * lam * d, demand.cbar_o * lam * d], axis=1))

        steps = np.arange(horizon + 1)
        self.discount = np.exp(-rewards.rho * rewards.dt * steps)
        self.g_conventional = rewards.scrap_value * np.exp(
            -(rewards.scrap_depreciation + rewards.rho) * rewards.dt * steps
        )
        t0 = rewards.horizon_years
        self.g_renewable = rewards.build_cost * (
            np.exp(-rewards.rho * t0 - rewards.build_depreciation * (t0 - rewards.dt * steps))
            - np.exp(-rewards.rho * rewards.dt * steps)
        )

    @property
    def horizon(self) -> int:
        return self.tree.horizon

    def chain(self, population: str) -> GridChain:
        if population == "conventional":
            return self.conventional_chain
        if population == "renewable":
            return self.renewable_chain
        raise ValueError(f"unknown population {population!r}")

    def price_tables(self, profile: MeanFieldProfile) -> list[np.ndarray]:
        """Peak/off-peak clearing prices per (t, node) for a mean-field profile.

        Computed once per profile and shared between the two populations'
        reward tables; fictitious play re-evaluates prices at every sweep, so
        the pair of tables reuses a single price pass.
        """
        supply = self.supply
        cost_grid = self.conventional_chain.grid
        factor_grid = self.renewable_chain.grid
        out = []
        for t in range(self.horizon):
            m = profile.conventional.m[t]
            m_bar = profile.renewable.m[t]
            s_ren = (
                supply.renewable_base_capacity + supply.renewable_new_capacity
            ) * self.eta_mean[t] - supply.renewable_new_capacity * (m_bar @ factor_grid)
            residual = np.maximum(self.demand_pairs[t] - s_ren[:, None], 0.0)
            z = self.tree.z[t]

            def total_supply(p: np.ndarray) -> np.ndarray:
                margins = p[:, :, None] - cost_grid[None, None, :] - supply.emission_intensity * z[:, None, None]
                util = market.utilization(margins, supply.c_max)
                return supply.conventional_capacity * np.einsum(
                    "nps,ns->np", util, m
                ) + supply.baseline_slope * p

            prices = np.zeros_like(residual)
            positive = residual > 0.0
            capped = total_supply(np.full_like(residual, supply.price_cap)) < residual
            lo = np.zeros_like(residual)
            hi = np.full_like(residual, supply.price_cap)
            n_bisect = int(np.ceil(np.log2(supply.price_cap / _PRICE_TOL)))
            for _ in range(n_bisect):
                mid = 0.5 * (lo + hi)
                covered = total_supply(mid) >= residual
                hi = np.where(covered, mid, hi)
                lo = np.where(covered, lo, mid)
            prices = np.where(positive, np.where(capped, supply.price_cap, hi), 0.0)
            out.append(prices)
        return out

    def reward_tables(
        self,
        profile: MeanFieldProfile,
        population: str,
        prices: list[np.ndarray] | None = None,
    ) -> RewardTables:
        """Reward tables of one population at a fixed mean-field profile."""
        if prices is None:
            prices = self.price_tables(profile)
        rw = self.rewards
        scale = rw.revenue_scale
        c_p, c_o = self.demand.c_p, self.demand.c_o
        f = []
        if population == "conventional":
            grid = self.conventional_chain.grid
            for t in range(self.horizon):
                z = self.tree.z[t]
                margins_p = prices[t][:, 0:1] - grid[None, :] - self.supply.emission_intensity * z[:, None]
                margins_o = prices[t][:, 1:2] - grid[None, :] - self.supply.emission_intensity * z[:, None]
                gains = c_p * market.gain(margins_p, self.supply.c_max) + c_o * market.gain(
                    margins_o, self.supply.c_max
                )
                f.append(self.discount[t] * (scale * gains - rw.kappa_conventional) * rw.dt)
            return RewardTables(f=f, g=self.g_conventional, prices=prices)
        if population == "renewable":
            grid = self.renewable_chain.grid
            for t in range(self.horizon):
                avg_price = c_p * prices[t][:, 0] + c_o * prices[t][:, 1]
                flow = scale * avg_price[:, None] * grid[None, :] - rw.kappa_renewable
                f.append(-self.discount[t] * flow * rw.dt)
            return RewardTables(f=f, g=self.g_renewable, prices=prices)
        raise ValueError(f"unknown population {population!r}")

    def occupation(self, population: str) -> tuple[GridChain, np.ndarray]:
        chain = self.chain(population)
        law = self.conventional_law if population == "conventional" else self.eta
        return chain, law

    def initial_profile(self, kind: str = "never_stop") -> MeanFieldProfile:
        """Feasible starting profiles: never stop, stop immediately, or stop uniformly."""
        pairs = {}
        for population in POPULATIONS:
            chain, law = self.occupation(population)
            sizes = self.tree.sizes
            horizon = self.horizon
            if kind == "never_stop":
                m = [np.tile(law[t], (sizes[t], 1)) for t in range(horizon)]
                mu = [np.zeros((sizes[t], chain.n_states)) for t in range(horizon)]
                mu.append(np.tile(law[horizon], (sizes[horizon], 1)))
            elif kind == "immediate_stop":
                m = [np.zeros((sizes[t], chain.n_states)) for t in range(horizon)]
                mu = [np.zeros((sizes[t], chain.n_states)) for t in range(horizon + 1)]
                mu[0][0] = chain.initial
            elif kind == "uniform":
                share = 1.0 / (horizon + 1)
                m = [
                    np.tile(law[t] * (1.0 - (t + 1) * share), (sizes[t], 1))
                    for t in range(horizon)
                ]
                mu = [np.tile(law[t] * share, (sizes[t], 1)) for t in range(horizon + 1)]
            else:
                raise ValueError(f"unknown initial profile {kind!r}")
            pairs[population] = OccupationPair(m=m, mu=mu)
        return MeanFieldProfile(**pairs)


def build_scenario_spec(config: RunConfig) -> ScenarioSpec:
    return ScenarioSpec(
        carbon_grid=config.carbon_grid,
        z0=config.z0,
        scenarios=config.scenario_names,
        prior=config.prior,
        adjustment_dates=config.adjustment_dates,
        stay_prob=config.stay_prob,
        horizon=config.n_steps,
    )


def conventional_params(config: RunConfig) -> DiffusionParams:
    theta = config.cost_theta
    delta = config.cost_std * np.sqrt(2.0 * config.cost_mean_reversion / theta)
    return DiffusionParams(
        kind="cir",
        mean_reversion=config.cost_mean_reversion,
        long_run_mean=theta,
        vol_coef=float(delta),
        lo=config.cost_min,
        hi=config.cost_max,
        dt=config.dt,
    )


def renewable_params(config: RunConfig) -> DiffusionParams:
    theta = config.factor_theta
    var = theta * (1.0 - theta) - config.factor_std**2
    if var <= 0:
        raise ValueError("factor_std too large for a Jacobi stationary law")
    delta = config.factor_std * np.sqrt(2.0 * config.factor_mean_reversion / var)
    return DiffusionParams(
        kind="jacobi",
        mean_reversion=config.factor_mean_reversion,
        long_run_mean=theta,
        vol_coef=float(delta),
        lo=config.factor_min,
        hi=config.factor_max,
        dt=config.dt,
    )


def build_model(config: RunConfig) -> ElectricityModel:
    """Assemble the full model from a run configuration.

    Records a warning when baseline supply at the price cap cannot cover the
    maximum possible peak demand (prices may then saturate at the cap).
    """
    tree = build_tree(build_scenario_spec(config))
    conventional = build_chain(conventional_params(config))
    renewable = build_chain(renewable_params(config))
    demand = market.DemandModel(
        baseline=np.asarray(config.demand_base),
        beta=config.demand_carbon_slope,
        seasonal=np.asarray(config.seasonal),
        peak_ratio=config.peak_ratio,
    )
    supply = market.SupplySpec(
        conventional_capacity=config.conventional_capacity,
        renewable_base_capacity=config.renewable_base_capacity,
        renewable_new_capacity=config.renewable_new_capacity,
        price_cap=config.price_cap,
        baseline_supply_at_cap=config.baseline_supply_at_cap,
        c_max=config.utilization_cap,
        emission_intensity=config.emission_intensity,
    )
    market.check_baseline_headroom(supply, demand, max(config.carbon_grid), config.z0)
    rewards = RewardParams(
        rho=config.discount_rate,
        dt=config.dt,
        horizon_years=config.horizon_years,
        kappa_conventional=config.fixed_cost_conventional,
        scrap_value=config.scrap_value,
        scrap_depreciation=config.scrap_depreciation,
        kappa_renewable=config.fixed_cost_renewable,
        build_cost=config.build_cost,
        build_depreciation=config.build_depreciation,
        revenue_scale=config.mwh_per_kw_year,
    )
    return ElectricityModel(tree, conventional, renewable, demand, supply, rewards)


def build_reward_tables(
    profile: MeanFieldProfile,
    population: str,
    model: ElectricityModel,
    prices: list[np.ndarray] | None = None,
) -> RewardTables:
    """Reward tables of ``population`` against the given mean-field profile."""
    return model.reward_tables(profile, population, prices=prices)


def exploitability(
    profile: MeanFieldProfile, model: ElectricityModel
) -> tuple[float, float]:
    """Per-population gain from switching to a best response against ``profile``.

    Nonnegative up to solver noise; a value below -1e-9 signals inconsistent
    tables or occupations and raises.
    """
    prices = model.price_tables(profile)
    out = []
    for population in POPULATIONS:
        tables = model.reward_tables(profile, population, prices=prices)
        value, _ = best_response_dp(tables, model.chain(population), model.tree)
        own = getattr(profile, population)
        eps = value - evaluate_gamma(tables, own, model.tree)
        if eps < -1e-9:
            raise RuntimeError(
                f"negative exploitability {eps} for {population}: inconsistent tables/occupation"
            )
        out.append(eps)
    return out[0], out[1]
