"""Synthetic periodic load profile.

Per-bus nominal loads scaled by a daily cosine between the trough and peak
factors, a weekend factor on days 5 and 6 of each week, and independent
per-bus lognormal noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from moopf.config import EnvSection
from moopf.grid.types import GridCase
from moopf.powerflow import BusLoads

WEEKEND_DAYS = (5, 6)


@dataclass(frozen=True)
class LoadProfile:
    nominal_p: np.ndarray  # MW
    nominal_q: np.ndarray  # MVAr
    intervals_per_day: int = 24
    peak_factor: float = 1.2
    trough_factor: float = 0.7
    peak_hour: float = 18.0
    weekend_factor: float = 0.9
    noise_sigma: float = 0.02

    @classmethod
    def from_config(cls, case: GridCase, section: EnvSection) -> "LoadProfile":
        nominal = BusLoads.nominal(case)
        return cls(
            nominal_p=nominal.p,
            nominal_q=nominal.q,
            intervals_per_day=section.intervals_per_day,
            peak_factor=section.peak_factor,
            trough_factor=section.trough_factor,
            peak_hour=section.peak_hour,
            weekend_factor=section.weekend_factor,
            noise_sigma=section.noise_sigma,
        )

    def hour_of(self, t: int) -> float:
        return (t % self.intervals_per_day) * 24.0 / self.intervals_per_day

    def day_of_week(self, t: int) -> int:
        return (t // self.intervals_per_day) % 7

    def factor(self, t: int) -> float:
        """Deterministic system-wide scaling for interval ``t``."""
        mid = 0.5 * (self.peak_factor + self.trough_factor)
        amp = 0.5 * (self.peak_factor - self.trough_factor)
        daily = mid + amp * math.cos(2.0 * math.pi * (self.hour_of(t) - self.peak_hour) / 24.0)
        if self.day_of_week(t) in WEEKEND_DAYS:
            daily *= self.weekend_factor
        return daily

    def loads(self, t: int, rng: np.random.Generator | None = None) -> BusLoads:
        scale = self.factor(t)
        if rng is not None and self.noise_sigma > 0.0:
            noise = rng.lognormal(0.0, self.noise_sigma, size=self.nominal_p.shape)
        else:
            noise = np.ones_like(self.nominal_p)
        return BusLoads(p=self.nominal_p * scale * noise, q=self.nominal_q * scale * noise)
