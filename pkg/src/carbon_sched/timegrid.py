"""Time axis, trace ingestion and slot partitioning.

All series live on a uniform UTC grid (5-minute base step by default).
Intensities are stored in gCO2eq/kWh, energy in kWh per step.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Iterable, Mapping

import numpy as np

LBS_PER_MWH_TO_G_PER_KWH = 0.453592
MAX_GAP_STEPS = 3


class TraceError(ValueError):
    """Input trace is malformed, irregular or otherwise unusable."""


class CoverageError(TraceError):
    """Requested window is not covered by the available history."""


def parse_timestamp(text: str) -> datetime:
    """Parse an ISO-8601 timestamp into an aware UTC datetime.

    Naive timestamps are taken to be UTC already.
    """
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class TimeGrid:
    start_utc: datetime
    n_steps: int
    step_minutes: int = 5

    def __post_init__(self):
        if self.step_minutes <= 0 or 60 % self.step_minutes:
            raise ValueError(f"step_minutes must divide 60, got {self.step_minutes}")
        if self.n_steps < 1:
            raise ValueError("a grid needs at least one step")
        if self.start_utc.tzinfo is None:
            object.__setattr__(self, "start_utc", self.start_utc.replace(tzinfo=timezone.utc))
        else:
            object.__setattr__(self, "start_utc", self.start_utc.astimezone(timezone.utc))

    @property
    def step(self) -> timedelta:
        return timedelta(minutes=self.step_minutes)

    @property
    def end_utc(self) -> datetime:
        """Instant just past the last step."""
        return self.start_utc + self.n_steps * self.step

    def timestamp(self, i: int) -> datetime:
        return self.start_utc + i * self.step

    def timestamps(self) -> list[datetime]:
        return [self.timestamp(i) for i in range(self.n_steps)]

    def index_of(self, instant: datetime) -> int:
        """Grid index of ``instant``; raises if it is not on the grid.

        The index may lie outside ``[0, n_steps)``; callers check coverage.
        """
        if instant.tzinfo is None:
            instant = instant.replace(tzinfo=timezone.utc)
        delta = instant - self.start_utc
        idx, rem = divmod(delta, self.step)
        if rem:
            raise CoverageError(f"{format_timestamp(instant)} is not on the {self.step_minutes}-minute grid")
        return int(idx)


def _check_values(values: np.ndarray, what: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim != 1:
        raise ValueError(f"{what} must be one-dimensional")
    if not np.all(np.isfinite(values)):
        raise TraceError(f"{what} contains non-finite values")
    if np.any(values < 0):
        raise TraceError(f"{what} contains negative values")
    values = values.copy()
    values.setflags(write=False)
    return values


@dataclass(frozen=True, eq=False)
class EnergySeries:
    """Workload energy draw, kWh per grid step."""

    grid: TimeGrid
    samples: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "samples", _check_values(self.samples, "energy samples"))
        if len(self.samples) != self.grid.n_steps:
            raise ValueError("sample count does not match grid length")

    def __len__(self):
        return len(self.samples)

    def __eq__(self, other):
        if not isinstance(other, EnergySeries):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.samples, other.samples)

    @property
    def total_kwh(self) -> float:
        return math.fsum(self.samples)

    @property
    def duration(self) -> timedelta:
        return self.grid.n_steps * self.grid.step


@dataclass(frozen=True, eq=False)
class IntensitySeries:
    """Marginal carbon intensity of one grid region, gCO2eq/kWh per step."""

    region_id: str
    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        if not self.region_id:
            raise ValueError("region_id must be nonempty")
        object.__setattr__(self, "values", _check_values(self.values, f"intensity of {self.region_id}"))
        if len(self.values) != self.grid.n_steps:
            raise ValueError("value count does not match grid length")

    def __len__(self):
        return len(self.values)

    def __eq__(self, other):
        if not isinstance(other, IntensitySeries):
            return NotImplemented
        return (self.region_id == other.region_id and self.grid == other.grid
                and np.array_equal(self.values, other.values))


class RegionSet(Mapping[str, IntensitySeries]):
    """Grid-identical intensity series keyed by region id, iterated in sorted order."""

    def __init__(self, series: Iterable[IntensitySeries]):
        by_id: dict[str, IntensitySeries] = {}
        for s in series:
            if s.region_id in by_id:
                raise ValueError(f"duplicate region {s.region_id!r}")
            by_id[s.region_id] = s
        if not by_id:
            raise ValueError("a RegionSet needs at least one region")
        grids = {s.grid for s in by_id.values()}
        if len(grids) != 1:
            raise TraceError("all regions must share one time grid")
        self._ids = tuple(sorted(by_id))
        self._series = by_id
        self.grid: TimeGrid = grids.pop()
        matrix = np.vstack([by_id[r].values for r in self._ids])
        matrix.setflags(write=False)
        self._matrix = matrix

    def __getitem__(self, region_id):
        return self._series[region_id]

    def __iter__(self):
        return iter(self._ids)

    def __len__(self):
        return len(self._ids)

    def __repr__(self):
        return f"RegionSet({list(self._ids)}, grid={self.grid})"

    @property
    def ids(self) -> tuple[str, ...]:
        return self._ids

    @property
    def matrix(self) -> np.ndarray:
        """Intensities as a read-only (n_regions, n_steps) array, rows in ``ids`` order."""
        return self._matrix

    def subset(self, region_ids: Iterable[str]) -> RegionSet:
        return RegionSet(self._series[r] for r in region_ids)


# --------------------------------------------------------------------------- CSV


def _read_rows(text, value_header: str) -> list[tuple[datetime, float]]:
    if not isinstance(text, str):
        text = text.read()
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if r and any(c.strip() for c in r)]
    if not rows:
        raise TraceError("empty trace")
    header = [c.strip().lower() for c in rows[0]]
    if header != ["timestamp", value_header]:
        raise TraceError(f"expected header 'timestamp,{value_header}', got {','.join(rows[0])!r}")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise TraceError(f"line {lineno}: expected 2 fields, got {len(row)}")
        try:
            ts = parse_timestamp(row[0])
            value = float(row[1])
        except ValueError as exc:
            raise TraceError(f"line {lineno}: {exc}") from None
        if not math.isfinite(value):
            raise TraceError(f"line {lineno}: non-finite value")
        if value < 0:
            raise TraceError(f"line {lineno}: negative value {value}")
        out.append((ts, value))
    if not out:
        raise TraceError("empty trace")
    for (t0, _), (t1, _) in zip(out, out[1:]):
        if t1 <= t0:
            raise TraceError(f"timestamps not strictly increasing at {format_timestamp(t1)}")
    return out


def _infer_step_minutes(times: list[datetime], default: int) -> int:
    if len(times) < 2:
        return default
    step = min(b - a for a, b in zip(times, times[1:]))
    minutes, rem = divmod(step, timedelta(minutes=1))
    if rem or minutes <= 0 or 60 % minutes:
        raise TraceError(f"irregular step of {step}")
    return int(minutes)


def parse_moer_csv(text, unit: str = "g_per_kwh", region_id: str = "R",
                   step_minutes: int | None = None) -> IntensitySeries:
    """Read a ``timestamp,value`` marginal-emissions trace.

    ``unit`` is ``g_per_kwh`` or ``lbs_per_mwh``. Runs of up to three
    missing steps are filled by linear interpolation; longer gaps raise
    :class:`TraceError`.
    """
    if unit == "g_per_kwh":
        scale = None
    elif unit == "lbs_per_mwh":
        scale = LBS_PER_MWH_TO_G_PER_KWH
    else:
        raise ValueError(f"unknown unit {unit!r}")
    rows = _read_rows(text, "value")
    times = [t for t, _ in rows]
    step = step_minutes or _infer_step_minutes(times, 5)
    grid0 = TimeGrid(times[0], 1, step)
    idx = [grid0.index_of(t) for t in times]
    n = idx[-1] + 1
    values = np.full(n, np.nan)
    values[idx] = [v for _, v in rows]
    for a, b in zip(idx, idx[1:]):
        missing = b - a - 1
        if missing > MAX_GAP_STEPS:
            raise TraceError(
                f"gap of {missing} missing steps after {format_timestamp(grid0.timestamp(a))} "
                f"(at most {MAX_GAP_STEPS} are interpolated)")
        if missing:
            frac = np.arange(1, missing + 1) / (b - a)
            values[a + 1:b] = values[a] + frac * (values[b] - values[a])
    if scale is not None:
        values = values * scale
    return IntensitySeries(region_id, TimeGrid(times[0], n, step), values)


def parse_energy_csv(text, step_minutes: int | None = None) -> EnergySeries:
    """Read a ``timestamp,kwh`` workload trace; the step must be perfectly regular."""
    rows = _read_rows(text, "kwh")
    times = [t for t, _ in rows]
    step = step_minutes or _infer_step_minutes(times, 5)
    delta = timedelta(minutes=step)
    for a, b in zip(times, times[1:]):
        if b - a != delta:
            raise TraceError(f"irregular step at {format_timestamp(b)}")
    return EnergySeries(TimeGrid(times[0], len(rows), step), np.array([v for _, v in rows]))


def _write_csv(grid: TimeGrid, values, header: str) -> str:
    buf = io.StringIO()
    buf.write(f"timestamp,{header}\n")
    for i, v in enumerate(values):
        buf.write(f"{format_timestamp(grid.timestamp(i))},{float(v)!r}\n")
    return buf.getvalue()


def to_moer_csv(series: IntensitySeries) -> str:
    """Serialize in g/kWh; ``parse_moer_csv`` reads it back bit-exactly."""
    return _write_csv(series.grid, series.values, "value")


def to_energy_csv(series: EnergySeries) -> str:
    return _write_csv(series.grid, series.samples, "kwh")


def load_region_dir(path, unit: str = "g_per_kwh") -> RegionSet:
    """Load every ``*.csv`` in a directory; the file stem is the region id."""
    from pathlib import Path

    files = sorted(Path(path).glob("*.csv"))
    if not files:
        raise TraceError(f"no CSV traces in {path}")
    return RegionSet(parse_moer_csv(f.read_text(), unit=unit, region_id=f.stem) for f in files)


# --------------------------------------------------------------- alignment, slots


@dataclass(frozen=True)
class AlignedView:
    """Maps workload offsets onto grid indices of a region set."""

    regions: RegionSet
    base_index: int
    workload_steps: int
    window_steps: int

    def index(self, offset: int) -> int:
        return self.base_index + offset

    def window(self, region_id: str) -> np.ndarray:
        """Intensity of one region over the whole scheduling window."""
        i = self.regions.ids.index(region_id)
        return self.regions.matrix[i, self.base_index:self.base_index + self.window_steps]

    def window_matrix(self) -> np.ndarray:
        return self.regions.matrix[:, self.base_index:self.base_index + self.window_steps]


def align(regions: RegionSet, energy: EnergySeries, nominal_start: datetime,
          extra_steps: int = 0) -> AlignedView:
    """Place the workload at ``nominal_start`` on the regions' grid.

    The grid must cover the workload plus ``extra_steps`` of flexibility.
    """
    grid = regions.grid
    if energy.grid.step_minutes != grid.step_minutes:
        raise TraceError("energy and intensity traces use different steps")
    base = grid.index_of(nominal_start)
    window = len(energy) + extra_steps
    if base < 0 or base + window > grid.n_steps:
        end = nominal_start + window * grid.step
        raise CoverageError(
            f"window {format_timestamp(nominal_start)} .. {format_timestamp(end)} exceeds the "
            f"available history {format_timestamp(grid.start_utc)} .. {format_timestamp(grid.end_utc)}")
    return AlignedView(regions, base, len(energy), window)


@dataclass(frozen=True)
class SlotPartition:
    checking_time_minutes: int
    slots: tuple[range, ...] = field(repr=False)

    @property
    def k(self) -> int:
        return len(self.slots)

    @property
    def starts(self) -> np.ndarray:
        return np.array([s.start for s in self.slots], dtype=np.intp)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([len(s) for s in self.slots], dtype=np.intp)


def slot_partition(workload_steps: int, step_minutes: int, checking_time_minutes: int) -> SlotPartition:
    """Split ``workload_steps`` base steps into checking-time slots; the last may be short."""
    if workload_steps < 1:
        raise ValueError("workload must have at least one step")
    if checking_time_minutes <= 0 or checking_time_minutes % step_minutes:
        raise ValueError(
            f"checking time {checking_time_minutes}m is not a positive multiple of the {step_minutes}m step")
    size = checking_time_minutes // step_minutes
    slots = tuple(range(a, min(a + size, workload_steps)) for a in range(0, workload_steps, size))
    return SlotPartition(checking_time_minutes, slots)
