"""Demand decomposition, producer gain, supply curves and merit-order clearing price.

Demand at each time splits into peak and off-peak components in a fixed ratio.
Conventional producers run the fraction of capacity given by the utilization
curve of their price-cost margin; renewables bid all realized capacity at zero
price.  The clearing price is the smallest price at which conventional supply
covers residual demand, capped at the market price cap.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

PEAK_HOUR_SHARE = 65.0 / 168.0

__all__ = [
    "PEAK_HOUR_SHARE",
    "DemandModel",
    "SupplySpec",
    "PricePair",
    "utilization",
    "gain",
    "demand_peak_offpeak",
    "conventional_supply",
    "renewable_supply",
    "clearing_price",
    "check_baseline_headroom",
]


@dataclass(eq=False)
class DemandModel:
    """Baseline demand per time index with seasonal factor and peak/off-peak split."""

    baseline: np.ndarray
    beta: float
    seasonal: np.ndarray
    peak_ratio: float
    c_p: float = PEAK_HOUR_SHARE

    def __post_init__(self) -> None:
        self.baseline = np.asarray(self.baseline, dtype=float)
        self.seasonal = np.asarray(self.seasonal, dtype=float)
        if self.peak_ratio < 1.0:
            raise ValueError("peak/off-peak ratio must be at least 1")
        if np.any(self.seasonal <= 0):
            raise ValueError("seasonal factors must be positive")
        if self.beta < 0:
            raise ValueError("carbon sensitivity must be nonnegative")
        if len(self.baseline) != len(self.seasonal):
            raise ValueError("baseline and seasonal series must have equal length")

    @property
    def c_o(self) -> float:
        return 1.0 - self.c_p

    @property
    def cbar_p(self) -> float:
        return self.peak_ratio / (self.peak_ratio * self.c_p + self.c_o)

    @property
    def cbar_o(self) -> float:
        return 1.0 / (self.peak_ratio * self.c_p + self.c_o)


@dataclass(frozen=True)
class SupplySpec:
    """Installed capacities, linear baseline supply and conventional cost shape."""

    conventional_capacity: float
    renewable_base_capacity: float
    renewable_new_capacity: float
    price_cap: float
    baseline_supply_at_cap: float
    c_max: float
    emission_intensity: float

    def __post_init__(self) -> None:
        for name in (
            "conventional_capacity",
            "renewable_base_capacity",
            "renewable_new_capacity",
            "price_cap",
            "baseline_supply_at_cap",
            "c_max",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.emission_intensity < 0:
            raise ValueError("emission intensity must be nonnegative")

    @property
    def baseline_slope(self) -> float:
        return self.baseline_supply_at_cap / self.price_cap

    def baseline_supply(self, p: float) -> float:
        return self.baseline_slope * p


@dataclass(frozen=True)
class PricePair:
    """Peak and off-peak clearing prices."""

    peak: float
    offpeak: float


def utilization(y, c_max: float):
    """Fraction of capacity run at margin ``y``: 0 below 0, sine ramp on [0, c_max], 1 above."""
    y_arr = np.asarray(y, dtype=float)
    ramp = 0.5 * (1.0 + np.sin(-np.pi / 2 + np.pi * np.clip(y_arr, 0.0, c_max) / c_max))
    out = np.where(y_arr > c_max, 1.0, np.where(y_arr <= 0.0, 0.0, ramp))
    return float(out) if out.ndim == 0 else out


def gain(x, c_max: float):
    """Running gain per unit capacity, the antiderivative of the utilization curve."""
    x_arr = np.asarray(x, dtype=float)
    xc = np.clip(x_arr, 0.0, c_max)
    ramp = 0.5 * (xc - (c_max / np.pi) * np.cos(-np.pi / 2 + np.pi * xc / c_max))
    out = np.where(x_arr > c_max, x_arr - c_max / 2, np.where(x_arr <= 0.0, 0.0, ramp))
    return float(out) if out.ndim == 0 else out


def demand_peak_offpeak(
    model: DemandModel, t: int, z: float, z0: float
) -> tuple[float, float]:
    """Peak and off-peak demand at time t for carbon level z."""
    d = model.baseline[t] + model.beta * (z - z0)
    if d < 0:
        raise ValueError(f"negative demand {d} at time {t}: invalid configuration")
    lam = model.seasonal[t]
    return model.cbar_p * lam * d, model.cbar_o * lam * d


def conventional_supply(
    spec: SupplySpec, z: float, cost_grid: np.ndarray, m: np.ndarray, p: float
) -> float:
    """Active-producer supply at price p plus the baseline supply."""
    util = utilization(p - cost_grid - spec.emission_intensity * z, spec.c_max)
    return float(spec.conventional_capacity * np.dot(util, m) + spec.baseline_supply(p))


def renewable_supply(
    spec: SupplySpec, factor_grid: np.ndarray, m_bar: np.ndarray, eta: np.ndarray
) -> float:
    """Realized renewable output given the not-yet-entered distribution ``m_bar``.

    ``eta`` is the unconditional law of the capacity factor at the same time.
    """
    total = (spec.renewable_base_capacity + spec.renewable_new_capacity) * float(
        np.dot(eta, factor_grid)
    )
    return total - spec.renewable_new_capacity * float(np.dot(m_bar, factor_grid))


def clearing_price(
    spec: SupplySpec,
    z: float,
    d: float,
    cost_grid: np.ndarray,
    m: np.ndarray,
    factor_grid: np.ndarray,
    m_bar: np.ndarray,
    eta: np.ndarray,
    tol: float = 1e-9,
) -> float:
    """Merit-order price: smallest p with conventional supply covering residual demand.

    Returns 0 when renewables cover the whole demand, and the price cap when
    residual demand cannot be covered below it.  The root is bracketed by a
    doubling search (the linear baseline supply alone bounds the bracket) and
    located by bisection to absolute tolerance ``tol``.
    """
    if d < 0:
        raise ValueError("demand must be nonnegative")
    residual = d - renewable_supply(spec, factor_grid, m_bar, eta)
    if residual <= 0.0:
        return 0.0

    def supply(p: float) -> float:
        return conventional_supply(spec, z, cost_grid, m, p)

    bound = residual / spec.baseline_slope
    hi = min(1.0, bound)
    while supply(hi) < residual and hi < bound:
        hi = min(2.0 * hi, bound)
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if supply(mid) >= residual:
            hi = mid
        else:
            lo = mid
    return min(hi, spec.price_cap)


def check_baseline_headroom(
    spec: SupplySpec, model: DemandModel, z_max: float, z0: float
) -> bool:
    """Check that baseline supply at the cap covers the maximum peak demand.

    When it does not, the clearing price may saturate at the cap, which the
    model permits; a warning is recorded so the configuration is not silently
    accepted.
    """
    d_max = float(np.max(model.baseline))
    lam_max = float(np.max(model.seasonal))
    need = model.cbar_p * lam_max * (d_max + model.beta * (z_max - z0))
    ok = spec.baseline_supply(spec.price_cap) >= need
    if not ok:
        warnings.warn(
            f"baseline supply at the price cap ({spec.baseline_supply(spec.price_cap):.2f} GW) "
            f"is below the maximum peak demand ({need:.2f} GW); prices may saturate at the cap",
            stacklevel=2,
        )
    return ok
