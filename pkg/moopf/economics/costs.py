from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from moopf.economics.renewables import RenewableModel
from moopf.errors import MoopfError, ShapeError
from moopf.grid.types import Generator, GridCase, RenewableCoeffs, ThermalCoeffs

_BOUND_SLACK = 1e-9


def _require(gen: Generator, kinds: tuple[str, ...]) -> None:
    if gen.kind not in kinds:
        raise MoopfError(f"generator at bus {gen.bus} is {gen.kind}; expected one of {kinds}")


def thermal_cost(gen: Generator, p: float) -> float:
    """Quadratic fuel cost with valve-point ripple, $/h."""
    _require(gen, ("thermal",))
    c = gen.cost
    assert isinstance(c, ThermalCoeffs)
    return c.a * p * p + c.b * p + c.c + abs(c.d * math.sin(c.e * (gen.p_min - p)))


def renewable_direct_cost(gen: Generator, p_scheduled: float) -> float:
    _require(gen, ("wind", "solar"))
    c = gen.cost
    assert isinstance(c, RenewableCoeffs)
    return c.direct * p_scheduled


def _check_schedule(gen: Generator, p: float) -> float:
    if p < gen.p_min - _BOUND_SLACK or p > gen.p_max + _BOUND_SLACK:
        raise MoopfError(
            f"schedule {p} outside [{gen.p_min}, {gen.p_max}] for generator at bus {gen.bus}"
        )
    return min(max(p, gen.p_min), gen.p_max)


def _finite(value: float, what: str) -> float:
    if not math.isfinite(value):
        raise MoopfError(f"{what} quadrature returned a non-finite value")
    return value


def reserve_cost(gen: Generator, model: RenewableModel, p_scheduled: float) -> float:
    """h_r * E[(p_sched - P_a)^+]: cost of holding reserve against over-scheduling."""
    _require(gen, ("wind", "solar"))
    p = _check_schedule(gen, p_scheduled)
    assert isinstance(gen.cost, RenewableCoeffs)
    return _finite(gen.cost.reserve * model.expected_shortfall(p, p_floor=gen.p_min), "reserve")


def penalty_cost(gen: Generator, model: RenewableModel, p_scheduled: float) -> float:
    """h_p * E[(P_a - p_sched)^+]: cost of spilling available renewable output."""
    _require(gen, ("wind", "solar"))
    p = _check_schedule(gen, p_scheduled)
    assert isinstance(gen.cost, RenewableCoeffs)
    return _finite(gen.cost.penalty * model.expected_surplus(p), "penalty")


@dataclass(frozen=True)
class CostBreakdown:
    thermal: np.ndarray
    wind_direct: np.ndarray
    wind_reserve: np.ndarray
    wind_penalty: np.ndarray
    solar_direct: np.ndarray
    solar_reserve: np.ndarray
    solar_penalty: np.ndarray

    @property
    def total(self) -> float:
        return float(
            sum(
                float(np.sum(part))
                for part in (
                    self.thermal,
                    self.wind_direct,
                    self.wind_reserve,
                    self.wind_penalty,
                    self.solar_direct,
                    self.solar_reserve,
                    self.solar_penalty,
                )
            )
        )


def total_cost(
    case: GridCase,
    dispatch: Sequence[float] | np.ndarray,
    models: Mapping[int, RenewableModel],
) -> CostBreakdown:
    """Per-component generation cost for one interval.

    ``dispatch`` is MW per generator in case order; ``models`` maps renewable
    generator index to its availability model. Thermal output is costed at
    max(P, 0) so reverse flow through the substation never earns revenue.
    """
    p = np.asarray(dispatch, dtype=float)
    if p.shape != (case.n_generators,):
        raise ShapeError(f"dispatch has {p.size} entries, case has {case.n_generators} generators")
    parts: dict[str, list[float]] = {
        k: [] for k in ("thermal", "wd", "wr", "wp", "sd", "sr", "sp")
    }
    for k, gen in enumerate(case.generators):
        if gen.kind == "thermal":
            parts["thermal"].append(thermal_cost(gen, max(float(p[k]), 0.0)))
            continue
        if k not in models:
            raise MoopfError(f"no availability model for generator {k} at bus {gen.bus}")
        model = models[k]
        prefix = "w" if gen.kind == "wind" else "s"
        parts[prefix + "d"].append(renewable_direct_cost(gen, float(p[k])))
        parts[prefix + "r"].append(reserve_cost(gen, model, float(p[k])))
        parts[prefix + "p"].append(penalty_cost(gen, model, float(p[k])))
    arr = {k: np.asarray(v, dtype=float) for k, v in parts.items()}
    return CostBreakdown(
        thermal=arr["thermal"],
        wind_direct=arr["wd"],
        wind_reserve=arr["wr"],
        wind_penalty=arr["wp"],
        solar_direct=arr["sd"],
        solar_reserve=arr["sr"],
        solar_penalty=arr["sp"],
    )


def with_cost_overrides(case: GridCase, section: object | None) -> GridCase:
    """Case copy whose renewable cost coefficients take the non-null config overrides."""
    if section is None:
        return case
    direct = getattr(section, "direct", None)
    reserve = getattr(section, "reserve", None)
    penalty = getattr(section, "penalty", None)
    if direct is None and reserve is None and penalty is None:
        return case
    gens = []
    for gen in case.generators:
        if gen.is_renewable and isinstance(gen.cost, RenewableCoeffs):
            cost = RenewableCoeffs(
                direct=gen.cost.direct if direct is None else float(direct),
                reserve=gen.cost.reserve if reserve is None else float(reserve),
                penalty=gen.cost.penalty if penalty is None else float(penalty),
            )
            gen = replace(gen, cost=cost)
        gens.append(gen)
    return replace(case, generators=tuple(gens))
