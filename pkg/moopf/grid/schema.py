"""Pydantic schema for the YAML case-file format (see documentation/case_format.md)."""

from __future__ import annotations

import math
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class BaseSpec(_Strict):
    kv: float = Field(..., gt=0.0)
    mva: float = Field(100.0, gt=0.0)


class HeaderSpec(_Strict):
    buses: int = Field(..., ge=1)
    branches: int = Field(..., ge=0)
    thermal: int = Field(0, ge=0)
    wind: int = Field(0, ge=0)
    solar: int = Field(0, ge=0)


class BusSpec(_Strict):
    id: int
    p: float = 0.0  # MW
    q: float = 0.0  # MVAr
    vmin: float = 0.95
    vmax: float = 1.05
    slack: bool = False

    @model_validator(mode="after")
    def _check_bounds(self) -> "BusSpec":
        if not 0.0 < self.vmin < self.vmax:
            raise ValueError(f"bus {self.id}: need 0 < vmin < vmax (got {self.vmin}, {self.vmax})")
        return self


class BranchSpec(_Strict):
    from_bus: int = Field(..., alias="from")
    to_bus: int = Field(..., alias="to")
    r: float = Field(..., ge=0.0)  # ohm
    x: float  # ohm
    smax: float = Field(..., gt=0.0)  # MVA
    imax: float = Field(..., gt=0.0)  # A

    @model_validator(mode="after")
    def _check_branch(self) -> "BranchSpec":
        if self.from_bus == self.to_bus:
            raise ValueError(f"branch {self.from_bus}-{self.to_bus} is a self loop")
        if math.hypot(self.r, self.x) <= 0.0:
            raise ValueError(f"branch {self.from_bus}-{self.to_bus} has zero impedance")
        return self


class GeneratorSpec(_Strict):
    kind: Literal["thermal", "wind", "solar"]
    bus: int
    pmin: float = 0.0
    pmax: float
    qmin: float = 0.0
    qmax: float = 0.0
    cost: Dict[str, float] = Field(default_factory=dict)
    availability: Dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_generator(self) -> "GeneratorSpec":
        if self.pmin > self.pmax:
            raise ValueError(f"generator at bus {self.bus}: pmin > pmax")
        if self.qmin > self.qmax:
            raise ValueError(f"generator at bus {self.bus}: qmin > qmax")
        if self.kind == "thermal":
            missing = {"a", "b", "c"} - set(self.cost)
            if missing:
                raise ValueError(f"thermal generator at bus {self.bus} missing cost keys {sorted(missing)}")
            unknown = set(self.cost) - {"a", "b", "c", "d", "e"}
            if self.cost.get("d", 0.0) < 0.0 or self.cost.get("e", 0.0) < 0.0:
                raise ValueError(f"thermal generator at bus {self.bus}: d and e must be >= 0")
        else:
            direct_key = "f" if self.kind == "wind" else "g"
            unknown = set(self.cost) - {direct_key, "h_r", "h_p"}
        if unknown:
            raise ValueError(f"generator at bus {self.bus}: unknown cost keys {sorted(unknown)}")
        return self


class CaseFile(_Strict):
    schema_version: str
    name: str
    description: Optional[str] = None
    base: BaseSpec
    header: Optional[HeaderSpec] = None
    buses: List[BusSpec] = Field(..., min_length=1)
    branches: List[BranchSpec] = Field(default_factory=list)
    generators: List[GeneratorSpec] = Field(default_factory=list)
