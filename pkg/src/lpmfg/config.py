"""Run configuration: model parameters, solver options and presets.

Configurations are plain frozen dataclasses serialized to JSON; parsing the
emitted JSON reproduces the configuration exactly.  Two presets mirror the
calibrated electricity-market instance: setting 1 has two hidden scenarios
(persistently low vs. rising carbon price), setting 2 a single scenario with
even odds of a price rise at each adjustment date.

The baseline demand series ships as a documented placeholder (flat level with
mild linear growth).  It is NOT part of the calibration, which points to an
external projection dataset; replace it via ``demand_base`` for real studies.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, replace

__all__ = [
    "RunConfig",
    "setting1",
    "setting2",
    "placeholder_demand",
    "seasonal_series",
    "to_json",
    "from_json",
    "load_config",
    "dump_config",
    "config_hash",
]

_TIME_ATOL = 1e-12

SEASONAL_CYCLE = (1.10, 0.93, 0.91, 1.06)


@dataclass(frozen=True)
class RunConfig:
    """Complete description of one experiment."""

    # time
    horizon_years: float = 18.0
    n_steps: int = 72
    dt: float = 0.25
    discount_rate: float = 0.086
    # carbon price scenarios
    carbon_grid: tuple[float, ...] = (50.0, 75.0, 100.0, 125.0, 150.0, 175.0, 200.0)
    z0: float = 50.0
    adjustment_dates: tuple[int, ...] = (10, 20, 30, 40, 50, 60)
    scenario_names: tuple[str, ...] = ("base",)
    prior: tuple[float, ...] = (1.0,)
    stay_prob: tuple[tuple[float, ...], ...] = ((0.5, 0.5, 0.5, 0.5, 0.5, 0.5),)
    # conventional cost dynamics (CIR); theta = cost_theta_base - emission_intensity * z0
    cost_min: float = 0.0
    cost_max: float = 70.0
    cost_theta_base: float = 33.4
    cost_mean_reversion: float = 0.5
    cost_std: float = 11.0
    # renewable capacity factor dynamics (Jacobi)
    factor_min: float = 0.3
    factor_max: float = 0.6
    factor_theta: float = 0.43
    factor_mean_reversion: float = 0.5
    factor_std: float = 0.044
    # demand
    demand_base: tuple[float, ...] = ()
    seasonal: tuple[float, ...] = ()
    peak_ratio: float = 1.29
    demand_carbon_slope: float = 0.015
    # capacities and supply
    conventional_capacity: float = 35.9
    renewable_base_capacity: float = 35.6
    renewable_new_capacity: float = 47.0
    price_cap: float = 150.0
    baseline_supply_at_cap: float = 12.1
    # conventional rewards
    emission_intensity: float = 0.429
    fixed_cost_conventional: float = 30.0
    scrap_value: float = 0.0
    scrap_depreciation: float = 0.0
    utilization_cap: float = 0.5
    # renewable rewards
    fixed_cost_renewable: float = 17.21
    build_cost: float = 1377.0
    build_depreciation: float = math.log(2.0) / 10.0
    # energy produced per kW of capacity over a year at full utilization, in MWh.
    # Converts GBP/MWh price margins into GBP/kW/yr flows comparable with the
    # fixed costs; set to 1.0 to interpret prices as per-kW-year directly.
    mwh_per_kw_year: float = 8.76
    # solver
    solver: str = "dp"
    n_iterations: int = 201
    cross_check_every: int = 10
    lp_var_limit: int = 10_000_000
    initial_profile: str = "never_stop"
    seed: int = 0
    output_dir: str = ""

    def __post_init__(self) -> None:
        if abs(self.n_steps * self.dt - self.horizon_years) > _TIME_ATOL:
            raise ValueError("n_steps * dt must equal horizon_years")
        if self.solver not in ("dp", "lp"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.initial_profile not in ("never_stop", "immediate_stop", "uniform"):
            raise ValueError(f"unknown initial profile {self.initial_profile!r}")
        if self.n_iterations < 1:
            raise ValueError("n_iterations must be at least 1")
        if not self.demand_base:
            object.__setattr__(self, "demand_base", placeholder_demand(self.n_steps))
        if not self.seasonal:
            object.__setattr__(self, "seasonal", seasonal_series(self.n_steps))
        if len(self.demand_base) != self.n_steps + 1:
            raise ValueError("demand_base must have n_steps + 1 entries")
        if len(self.seasonal) != self.n_steps + 1:
            raise ValueError("seasonal must have n_steps + 1 entries")

    @property
    def cost_theta(self) -> float:
        return self.cost_theta_base - self.emission_intensity * self.z0


def placeholder_demand(n_steps: int, level: float = 38.0, growth: float = 4.0) -> tuple[float, ...]:
    """Flat demand level with mild linear growth (placeholder, not calibrated)."""
    return tuple(level + growth * t / n_steps for t in range(n_steps + 1))


def seasonal_series(n_steps: int, cycle: tuple[float, ...] = SEASONAL_CYCLE) -> tuple[float, ...]:
    """Quarterly seasonal factors repeated over the horizon."""
    return tuple(cycle[t % len(cycle)] for t in range(n_steps + 1))


def setting1(**overrides) -> RunConfig:
    """Two hidden scenarios: carbon price stays low (stay prob 0.9) or rises (0.1)."""
    base = dict(
        scenario_names=("low", "high"),
        prior=(0.5, 0.5),
        stay_prob=((0.9,) * 6, (0.1,) * 6),
    )
    base.update(overrides)
    return RunConfig(**base)


def setting2(**overrides) -> RunConfig:
    """Single scenario with a fair coin flip at each adjustment date."""
    base = dict(
        scenario_names=("base",),
        prior=(1.0,),
        stay_prob=((0.5,) * 6,),
    )
    base.update(overrides)
    return RunConfig(**base)


def to_json(config: RunConfig) -> str:
    return json.dumps(asdict(config), indent=2, sort_keys=True) + "\n"


def _tuplify(value):
    if isinstance(value, list):
        return tuple(_tuplify(v) for v in value)
    return value


def from_json(text: str) -> RunConfig:
    raw = json.loads(text)
    known = RunConfig.__dataclass_fields__
    unknown = sorted(set(raw) - set(known))
    if unknown:
        raise ValueError(f"unknown configuration keys: {', '.join(unknown)}")
    return RunConfig(**{k: _tuplify(v) for k, v in raw.items()})


def load_config(path: str) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return from_json(fh.read())


def dump_config(config: RunConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(to_json(config))


def config_hash(config: RunConfig) -> str:
    return hashlib.sha256(to_json(config).encode()).hexdigest()[:16]


def with_overrides(config: RunConfig, **overrides) -> RunConfig:
    return replace(config, **overrides)
