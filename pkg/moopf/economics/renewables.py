"""Stochastic availability of wind and solar units.

Available output is a mixed distribution: probability atoms at 0 (wind below
cut-in or above cut-out) and at rated output (wind between rated and cut-out
speed, irradiance above standard), with a continuous part in between. Expected
shortfall/surplus integrals split into exact atom terms plus Gauss-Legendre
quadrature over the continuous part in the wind-speed / irradiance domain.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Literal, Optional

import numpy as np
from scipy import stats

from moopf.errors import MoopfError
from moopf.grid.types import Generator

QUADRATURE_NODES = 64


@lru_cache(maxsize=4)
def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def _integrate(fn, lo: float, hi: float, n: int = QUADRATURE_NODES) -> float:
    if hi <= lo:
        return 0.0
    x, w = _leggauss(n)
    mid = 0.5 * (hi + lo)
    half = 0.5 * (hi - lo)
    return float(half * np.sum(w * fn(mid + half * x)))


@dataclass(frozen=True)
class RenewableModel:
    kind: Literal["wind", "solar"]
    rated: float  # MW
    shape: float = 2.0
    scale: float = 9.0
    cut_in: float = 3.0
    rated_speed: float = 16.0
    cut_out: float = 25.0
    mu: float = 6.0
    sigma: float = 0.6
    standard_irradiance: float = 800.0

    def __post_init__(self) -> None:
        if self.rated < 0.0:
            raise MoopfError(f"rated output must be >= 0 (got {self.rated})")
        if self.kind == "wind":
            if self.shape <= 0.0 or self.scale <= 0.0:
                raise MoopfError("Weibull shape and scale must be > 0")
            if not self.cut_in < self.rated_speed < self.cut_out:
                raise MoopfError(
                    f"need cut_in < rated_speed < cut_out (got {self.cut_in}, {self.rated_speed}, {self.cut_out})"
                )
        elif self.kind == "solar":
            if self.sigma <= 0.0 or self.standard_irradiance <= 0.0:
                raise MoopfError("lognormal sigma and standard irradiance must be > 0")
        else:
            raise MoopfError(f"unknown renewable kind {self.kind!r}")

    @classmethod
    def from_generator(cls, gen: Generator) -> "RenewableModel":
        if not gen.is_renewable:
            raise MoopfError(f"generator at bus {gen.bus} is {gen.kind}, not renewable")
        params = {k: float(v) for k, v in gen.availability.items() if k in cls.__dataclass_fields__}
        return cls(kind=gen.kind, rated=gen.p_max, **params)  # type: ignore[arg-type]

    @classmethod
    def from_config(cls, section: Optional[object], gen: Generator) -> "RenewableModel":
        """Case-file parameters with any non-null ``renewables`` config overrides applied."""
        model = cls.from_generator(gen)
        if section is None:
            return model
        mapping = {
            "wind_shape": "shape",
            "wind_scale": "scale",
            "cut_in": "cut_in",
            "rated_speed": "rated_speed",
            "cut_out": "cut_out",
            "solar_mu": "mu",
            "solar_sigma": "sigma",
            "standard_irradiance": "standard_irradiance",
        }
        overrides = {
            field: getattr(section, key)
            for key, field in mapping.items()
            if getattr(section, key, None) is not None
        }
        return replace(model, **overrides) if overrides else model

    # distributions -----------------------------------------------------

    @property
    def _wind(self):
        return stats.weibull_min(c=self.shape, scale=self.scale)

    @property
    def _solar(self):
        return stats.lognorm(s=self.sigma, scale=float(np.exp(self.mu)))

    def power_curve(self, x: np.ndarray | float) -> np.ndarray:
        """Map wind speed (m/s) or irradiance (W/m^2) to available MW."""
        x = np.asarray(x, dtype=float)
        if self.kind == "wind":
            ramp = self.rated * (x - self.cut_in) / (self.rated_speed - self.cut_in)
            out = np.where(x < self.cut_in, 0.0, ramp)
            out = np.where(x >= self.rated_speed, self.rated, out)
            return np.where(x >= self.cut_out, 0.0, out)
        return self.rated * np.minimum(x / self.standard_irradiance, 1.0)

    def _inverse(self, p: float) -> float:
        """Resource level at which the continuous part of the curve reaches ``p``."""
        frac = 0.0 if self.rated <= 0.0 else min(max(p / self.rated, 0.0), 1.0)
        if self.kind == "wind":
            return self.cut_in + frac * (self.rated_speed - self.cut_in)
        return frac * self.standard_irradiance

    def atoms(self) -> tuple[float, float]:
        """(P[available = 0], P[available = rated])."""
        if self.kind == "wind":
            dist = self._wind
            zero = float(dist.cdf(self.cut_in) + dist.sf(self.cut_out))
            full = float(dist.cdf(self.cut_out) - dist.cdf(self.rated_speed))
            return zero, full
        return 0.0, float(self._solar.sf(self.standard_irradiance))

    def _pdf(self, x: np.ndarray) -> np.ndarray:
        return self._wind.pdf(x) if self.kind == "wind" else self._solar.pdf(x)

    def expected_shortfall(self, p_sched: float, p_floor: float = 0.0) -> float:
        """E[(p_sched - P_a)^+] restricted to availability in [p_floor, p_sched]."""
        if p_sched <= p_floor:
            return 0.0
        zero_atom, full_atom = self.atoms()
        total = 0.0
        if p_floor <= 0.0:
            total += zero_atom * p_sched
        if p_sched >= self.rated:
            total += full_atom * (p_sched - self.rated)
        lo = self._inverse(p_floor)
        hi = self._inverse(p_sched)
        total += _integrate(lambda x: (p_sched - self.power_curve(x)) * self._pdf(x), lo, hi)
        return total

    def expected_surplus(self, p_sched: float) -> float:
        """E[(P_a - p_sched)^+]."""
        if p_sched >= self.rated:
            return 0.0
        _, full_atom = self.atoms()
        total = full_atom * (self.rated - p_sched)
        if p_sched < 0.0:
            zero_atom, _ = self.atoms()
            total += zero_atom * (0.0 - p_sched)
        lo = self._inverse(p_sched)
        hi = self._inverse(self.rated)
        total += _integrate(lambda x: (self.power_curve(x) - p_sched) * self._pdf(x), lo, hi)
        return total


def availability_mean(model: RenewableModel) -> float:
    """Expected available output (MW) by the same atom + quadrature split."""
    _, full_atom = model.atoms()
    lo = model._inverse(0.0)
    hi = model._inverse(model.rated)
    return full_atom * model.rated + _integrate(lambda x: model.power_curve(x) * model._pdf(x), lo, hi)


def sample_availability(
    model: RenewableModel, rng: np.random.Generator, size: Optional[int] = None
) -> float | np.ndarray:
    """Draw available output: Weibull wind speed or lognormal irradiance through the power curve."""
    if model.kind == "wind":
        resource = model.scale * rng.weibull(model.shape, size=size)
    else:
        resource = rng.lognormal(model.mu, model.sigma, size=size)
    out = model.power_curve(resource)
    return float(out) if size is None else out
