"""Generation cost stack, renewable availability and voltage fluctuation."""

from moopf.economics.costs import (
    CostBreakdown,
    penalty_cost,
    renewable_direct_cost,
    reserve_cost,
    thermal_cost,
    total_cost,
    with_cost_overrides,
)
from moopf.economics.fluctuation import VoltageHistory, voltage_fluctuation
from moopf.economics.renewables import RenewableModel, availability_mean, sample_availability

__all__ = [
    "CostBreakdown",
    "penalty_cost",
    "renewable_direct_cost",
    "reserve_cost",
    "thermal_cost",
    "total_cost",
    "with_cost_overrides",
    "VoltageHistory",
    "voltage_fluctuation",
    "RenewableModel",
    "availability_mean",
    "sample_availability",
]
