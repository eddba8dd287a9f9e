"""Seeded synthetic traces.

Intensity follows a daily sinusoid plus Gaussian noise drawn from numpy's
PCG64 generator (``numpy.random.Generator(PCG64(seed)).standard_normal``),
so a seed reproduces the same trace on any platform numpy supports.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .timegrid import EnergySeries, IntensitySeries, RegionSet, TimeGrid

DEFAULT_START = datetime(2021, 1, 1, tzinfo=timezone.utc)


@dataclass(frozen=True)
class DiurnalModel:
    base: float
    amplitude: float
    phase_hours: float = 0.0
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.base >= self.amplitude >= 0:
            raise ValueError("need base >= amplitude >= 0")
        if not 0 <= self.phase_hours < 24:
            raise ValueError("phase_hours must be in [0, 24)")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")


# Seven European grid-regions with staggered daily cycles. Qualitative only;
# no attempt is made to match any real year of data.
PRESETS: dict[str, DiurnalModel] = {
    "DE": DiurnalModel(base=420.0, amplitude=55.0, phase_hours=8.0, noise_sigma=12.5),
    "ES": DiurnalModel(base=375.0, amplitude=60.0, phase_hours=2.0, noise_sigma=10.0),
    "FR": DiurnalModel(base=390.0, amplitude=35.0, phase_hours=11.0, noise_sigma=7.5),
    "GB": DiurnalModel(base=405.0, amplitude=45.0, phase_hours=14.0, noise_sigma=10.0),
    "IE": DiurnalModel(base=410.0, amplitude=50.0, phase_hours=17.5, noise_sigma=15.0),
    "IT": DiurnalModel(base=425.0, amplitude=40.0, phase_hours=5.0, noise_sigma=10.0),
    "SE": DiurnalModel(base=385.0, amplitude=30.0, phase_hours=20.0, noise_sigma=7.5),
}

# name -> (duration in hours, total kWh), constant draw
WORKLOAD_PROFILES: dict[str, tuple[float, float]] = {
    "IF": (4.25, 0.825),
    "SVM": (2.5, 0.493),
    "AE": (3.5, 0.615),
    "HF-SCA": (16.0, 3.310),
}


def gen_intensity(model: DiurnalModel, days: int, step_minutes: int = 5,
                  region_id: str = "R", start: datetime = DEFAULT_START) -> IntensitySeries:
    if days < 1:
        raise ValueError("days must be >= 1")
    grid = TimeGrid(start, days * 24 * 60 // step_minutes, step_minutes)
    t0 = grid.start_utc
    hour0 = t0.hour + t0.minute / 60 + t0.second / 3600
    hours = hour0 + np.arange(grid.n_steps) * (step_minutes / 60)
    hour_of_day = np.mod(hours, 24.0)
    values = model.base + model.amplitude * np.sin(2 * np.pi * (hour_of_day - model.phase_hours) / 24)
    if model.noise_sigma > 0:
        rng = np.random.Generator(np.random.PCG64(model.seed))
        values = values + rng.standard_normal(grid.n_steps) * model.noise_sigma
    return IntensitySeries(region_id, grid, np.maximum(values, 0.0))


def preset_seed(seed: int, index: int) -> int:
    return seed * 1000 + index


def preset_regions(seed: int = 0, days: int = 365, step_minutes: int = 5,
                   names=None, start: datetime = DEFAULT_START) -> RegionSet:
    """The preset regions as a RegionSet; region i draws noise from ``preset_seed(seed, i)``."""
    names = sorted(PRESETS) if names is None else list(names)
    out = []
    for i, name in enumerate(names):
        m = PRESETS[name]
        model = DiurnalModel(m.base, m.amplitude, m.phase_hours, m.noise_sigma, preset_seed(seed, i))
        out.append(gen_intensity(model, days, step_minutes, region_id=name, start=start))
    return RegionSet(out)


def gen_energy(profile: str = "constant", total_kwh: float | None = None,
               duration_minutes: int | None = None, step_minutes: int = 5,
               start: datetime = DEFAULT_START) -> EnergySeries:
    """Constant-rate energy trace.

    ``profile`` is ``"constant"`` (give ``total_kwh`` and ``duration_minutes``)
    or one of :data:`WORKLOAD_PROFILES`.
    """
    if profile != "constant":
        if profile not in WORKLOAD_PROFILES:
            raise ValueError(f"unknown workload profile {profile!r}; known: {sorted(WORKLOAD_PROFILES)}")
        hours, total_kwh = WORKLOAD_PROFILES[profile]
        duration_minutes = round(hours * 60)
    if total_kwh is None or duration_minutes is None:
        raise ValueError("constant profile needs total_kwh and duration_minutes")
    if duration_minutes <= 0 or duration_minutes % step_minutes:
        raise ValueError(f"duration {duration_minutes}m is not a positive multiple of {step_minutes}m")
    n = duration_minutes // step_minutes
    return EnergySeries(TimeGrid(start, n, step_minutes), _uniform_with_exact_sum(total_kwh, n))


def _uniform_with_exact_sum(total: float, n: int) -> np.ndarray:
    """``n`` samples of ``total / n`` whose correctly rounded sum is exactly ``total``.

    n equal floats cannot always hit an arbitrary total, so the fewest
    trailing samples are moved by one ulp toward it.
    """
    x = total / n
    out = np.full(n, x)
    gap = total - math.fsum(out)
    if gap == 0:
        return out
    nudged = math.nextafter(x, math.copysign(math.inf, gap))
    for m in range(1, n + 1):
        out[n - m] = nudged
        if math.fsum(out) == total:
            return out
    return np.full(n, x)


def bundled_profile(name: str) -> EnergySeries:
    """Read one of the shipped workload CSVs (``data/profiles/<name>.csv``)."""
    from importlib.resources import files

    from .timegrid import parse_energy_csv

    if name not in WORKLOAD_PROFILES:
        raise ValueError(f"unknown workload profile {name!r}; known: {sorted(WORKLOAD_PROFILES)}")
    return parse_energy_csv(files("carbon_sched").joinpath("data", "profiles", f"{name}.csv").read_text())
