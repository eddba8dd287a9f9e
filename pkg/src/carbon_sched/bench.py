"""Retrospective benchmark: sweep strategies over a year of start times.

For every workload, every selected day of every month and every region
(used as launch region for FS/PaR and as reference region for FtS), each
strategy is compared with running immediately in that same region. Cells
are averaged arithmetically into one row per
(workload, strategy, transfer mode, hours, checking time).
"""
from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, time, timezone

import numpy as np

from .carbon import TransferCostModel
from .strategies import (
    IN_TRAINING,
    TRANSFER_MODES,
    UPSTREAM,
    FtsScan,
    StrategyConfig,
    flexible_start,
    no_strategy,
    pause_and_resume,
    static_start_fts,
)
from .synth import WORKLOAD_PROFILES, gen_energy
from .timegrid import CoverageError, RegionSet, align, format_timestamp

PAPER_HOURS = (6, 12, 18, 24)
PAPER_CHECKING = (15, 30, 60, 120)

STRATEGY_ORDER = ("none", "fs", "par", "ssfts", "fsfts")
STRATEGY_LABELS = {"none": "NoStrategy", "fs": "FS", "par": "PaR", "ssfts": "ssFtS", "fsfts": "fsFtS"}
NO_MODE = "none"


@dataclass(frozen=True)
class BenchmarkSpec:
    workloads: tuple[str, ...] = tuple(WORKLOAD_PROFILES)
    strategies: tuple[str, ...] = STRATEGY_ORDER
    hours_set: tuple[float, ...] = PAPER_HOURS
    checking_set: tuple[int, ...] = PAPER_CHECKING
    transfer_modes: tuple[str, ...] = (UPSTREAM, IN_TRAINING)
    days_per_month: int = 6
    months: tuple[int, ...] = tuple(range(1, 13))
    year: int = 2021
    start_time: time = time(0, 0)
    regions: tuple[str, ...] | None = None  # launch/reference regions; None means all
    transfer_model: TransferCostModel = field(default_factory=TransferCostModel)

    def __post_init__(self):
        for w in self.workloads:
            if w not in WORKLOAD_PROFILES:
                raise ValueError(f"unknown workload {w!r}; known: {sorted(WORKLOAD_PROFILES)}")
        for s in self.strategies:
            if s not in STRATEGY_ORDER:
                raise ValueError(f"unknown strategy {s!r}; known: {list(STRATEGY_ORDER)}")
        for m in self.transfer_modes:
            if m not in TRANSFER_MODES:
                raise ValueError(f"unknown transfer mode {m!r}")
        if any(h < 0 for h in self.hours_set) or not self.hours_set:
            raise ValueError("hours_set must be a nonempty set of nonnegative values")
        if any(c <= 0 for c in self.checking_set) or not self.checking_set:
            raise ValueError("checking_set must be a nonempty set of positive minutes")
        if not 1 <= self.days_per_month <= 30:
            raise ValueError("days_per_month must be in [1, 30]")
        if any(not 1 <= m <= 12 for m in self.months):
            raise ValueError("months must be in 1..12")
        # canonical ordering keeps reports independent of how the spec was written
        object.__setattr__(self, "strategies", tuple(s for s in STRATEGY_ORDER if s in self.strategies))
        object.__setattr__(self, "hours_set", tuple(sorted(set(self.hours_set))))
        object.__setattr__(self, "checking_set", tuple(sorted(set(self.checking_set))))
        object.__setattr__(self, "transfer_modes", tuple(m for m in TRANSFER_MODES if m in self.transfer_modes))
        object.__setattr__(self, "months", tuple(sorted(set(self.months))))

    @property
    def days(self) -> list[int]:
        """Evenly spaced days of the month, starting on the 1st (1, 6, ..., 26 for six days)."""
        gap = 30 // self.days_per_month
        return [1 + i * gap for i in range(self.days_per_month)]

    def start_times(self) -> list[datetime]:
        return [datetime.combine(datetime(self.year, m, d).date(), self.start_time, tzinfo=timezone.utc)
                for m in self.months for d in self.days]

    @classmethod
    def from_dict(cls, d: dict) -> BenchmarkSpec:
        d = dict(d)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown benchmark spec keys: {sorted(unknown)}")
        if "start_time" in d:
            d["start_time"] = time.fromisoformat(d["start_time"])
        if "transfer_model" in d:
            d["transfer_model"] = TransferCostModel(**d["transfer_model"])
        for key in ("workloads", "strategies", "hours_set", "checking_set", "transfer_modes", "months", "regions"):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["start_time"] = self.start_time.isoformat(timespec="minutes")
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


@dataclass(frozen=True)
class ResultRow:
    workload: str
    strategy: str
    transfer_mode: str
    hours: float
    checking: int
    cells: int
    reduction: float  # mean fractional reduction vs no strategy
    mean_g: float
    mean_baseline_g: float
    mean_region_switches: float
    mean_dataset_transfers: float
    mean_duration_h: float
    std_duration_h: float
    mean_delay_h: float
    std_delay_h: float

    @property
    def key(self):
        return (self.workload, self.strategy, self.transfer_mode, self.hours, self.checking)


COLUMNS = tuple(f.name for f in fields(ResultRow))


@dataclass(frozen=True)
class ResultTable:
    rows: tuple[ResultRow, ...] = ()
    plans: tuple = field(default=(), compare=False, repr=False)

    def row(self, workload, strategy, transfer_mode, hours, checking) -> ResultRow:
        key = (workload, strategy, transfer_mode, hours, checking)
        for r in self.rows:
            if r.key == key:
                return r
        raise KeyError(key)

    def select(self, **criteria) -> list[ResultRow]:
        return [r for r in self.rows if all(getattr(r, k) == v for k, v in criteria.items())]


# ------------------------------------------------------------------ cell runner

_REGIONS: RegionSet | None = None


def _init_worker(regions):
    global _REGIONS
    _REGIONS = regions


def _cell_record(out, baseline_g):
    reduction = (baseline_g - out.total_g) / baseline_g if baseline_g > 0 else 0.0
    return (out.total_g, reduction, out.region_switches, out.dataset_transfers,
            out.duration.total_seconds() / 3600, out.start_delay.total_seconds() / 3600, baseline_g)


def _run_group(job):
    """Every strategy/parameter combination for one (workload, start, region)."""
    spec, workload, start, region, keep_plans = job
    regions = _REGIONS
    energy = gen_energy(workload, step_minutes=regions.grid.step_minutes)
    max_h = max(spec.hours_set)
    cell = f"workload={workload} start={format_timestamp(start)} region={region}"
    try:
        align(regions, energy, start, StrategyConfig(start, max_h).extra_steps(regions.grid.step_minutes))
    except CoverageError as exc:
        raise CoverageError(f"cell {cell}: {exc}") from None

    out = {}
    plans = []

    def keep(key, plan):
        if keep_plans:
            plans.append((key + (region, format_timestamp(start)), plan))

    def cfg(hours=0, checking=15, mode=IN_TRAINING):
        return StrategyConfig(start, hours, checking, region, mode, spec.transfer_model)

    base_plan, base = no_strategy(energy, regions, start, region)
    baseline_g = base.total_g
    single = regions.subset([region])
    grid_h = [(h, c) for h in spec.hours_set for c in spec.checking_set]

    for name in spec.strategies:
        if name == "none":
            for h, c in grid_h:
                out[(name, NO_MODE, h, c)] = _cell_record(base, baseline_g)
                keep((name, NO_MODE, h, c), base_plan)
        elif name in ("fs", "par"):
            fn = flexible_start if name == "fs" else pause_and_resume
            for h in spec.hours_set:
                plan, res = fn(energy, single, cfg(h))
                for c in spec.checking_set:
                    out[(name, NO_MODE, h, c)] = _cell_record(res, baseline_g)
                    keep((name, NO_MODE, h, c), plan)
        elif name == "ssfts":
            for c in spec.checking_set:
                for mode in spec.transfer_modes:
                    plan, res = static_start_fts(energy, regions, cfg(0, c, mode))
                    for h in spec.hours_set:
                        out[(name, mode, h, c)] = _cell_record(res, baseline_g)
                        keep((name, mode, h, c), plan)
        else:
            step = regions.grid.step_minutes
            for c in spec.checking_set:
                for mode in spec.transfer_modes:
                    scan = FtsScan(energy, regions, cfg(max_h, c, mode))
                    for h in spec.hours_set:
                        plan, res = scan.best(cfg(h).extra_steps(step) + 1)
                        out[(name, mode, h, c)] = _cell_record(res, baseline_g)
                        keep((name, mode, h, c), plan)
    return out, plans


def _workers() -> int:
    raw = os.environ.get("CARBON_SCHED_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"CARBON_SCHED_THREADS must be an integer, got {raw!r}") from None
    return n if n > 0 else (os.cpu_count() or 1)


def row_keys(spec: BenchmarkSpec):
    """Every (workload, strategy, mode, hours, checking) the spec produces, in report order."""
    for w in spec.workloads:
        for s in spec.strategies:
            modes = spec.transfer_modes if s in ("ssfts", "fsfts") else (NO_MODE,)
            for m in modes:
                for h in spec.hours_set:
                    for c in spec.checking_set:
                        yield (w, s, m, h, c)


def run_retrospective(spec: BenchmarkSpec, regions: RegionSet, *, workers: int | None = None,
                      keep_plans: bool = False) -> ResultTable:
    """Run every cell of ``spec`` over ``regions`` and average into a :class:`ResultTable`.

    A cell whose window is not covered by the data aborts the whole run with
    a :class:`CoverageError` naming the cell.
    """
    launch = spec.regions if spec.regions is not None else regions.ids
    for r in launch:
        if r not in regions:
            raise ValueError(f"region {r!r} not in data ({list(regions.ids)})")
    jobs = [(spec, w, t, r, keep_plans)
            for w in spec.workloads for t in spec.start_times() for r in launch]
    n = workers if workers is not None else _workers()
    if n > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(n, initializer=_init_worker, initargs=(regions,)) as pool:
            results = list(pool.map(_run_group, jobs, chunksize=max(1, len(jobs) // (4 * n))))
    else:
        _init_worker(regions)
        results = [_run_group(j) for j in jobs]

    per_key: dict[tuple, list] = {}
    plans = []
    for job, (out, job_plans) in zip(jobs, results):
        w = job[1]
        for k, rec in out.items():
            per_key.setdefault((w,) + k, []).append(rec)
        plans.extend(((w,) + key, plan) for key, plan in job_plans)

    rows = []
    for key in row_keys(spec):
        recs = np.array(per_key[key], dtype=float)
        w, s, m, h, c = key
        rows.append(ResultRow(
            workload=w, strategy=STRATEGY_LABELS[s], transfer_mode=m, hours=h, checking=c,
            cells=len(recs),
            reduction=float(recs[:, 1].mean()),
            mean_g=float(recs[:, 0].mean()),
            mean_baseline_g=float(recs[:, 6].mean()),
            mean_region_switches=float(recs[:, 2].mean()),
            mean_dataset_transfers=float(recs[:, 3].mean()),
            mean_duration_h=float(recs[:, 4].mean()),
            std_duration_h=float(recs[:, 4].std()),
            mean_delay_h=float(recs[:, 5].mean()),
            std_delay_h=float(recs[:, 5].std()),
        ))
    return ResultTable(tuple(rows), tuple(plans))



# ---------------------------------------------------------------------- reports


def _fmt_row(r: ResultRow) -> list[str]:
    pct = f"{100 * r.reduction:.1f}"
    if pct == "-0.0":
        pct = "0.0"
    return [r.workload, r.strategy, r.transfer_mode, f"{r.hours:g}", str(r.checking), str(r.cells), pct,
            f"{r.mean_g:.3f}", f"{r.mean_baseline_g:.3f}", f"{r.mean_region_switches:.3f}",
            f"{r.mean_dataset_transfers:.3f}", f"{r.mean_duration_h:.3f}", f"{r.std_duration_h:.3f}",
            f"{r.mean_delay_h:.3f}", f"{r.std_delay_h:.3f}"]


REPORT_HEADER = ["workload", "strategy", "transfer_mode", "hours", "checking", "cells", "reduction_pct",
                 "mean_g", "mean_baseline_g", "mean_region_switches", "mean_dataset_transfers",
                 "mean_duration_h", "std_duration_h", "mean_delay_h", "std_delay_h"]


def _sorted_rows(table: ResultTable):
    order = {STRATEGY_LABELS[s]: i for i, s in enumerate(STRATEGY_ORDER)}
    workloads = list(dict.fromkeys(r.workload for r in table.rows))
    modes = {NO_MODE: 0, UPSTREAM: 1, IN_TRAINING: 2}
    return sorted(table.rows, key=lambda r: (workloads.index(r.workload), order.get(r.strategy, 99),
                                             modes.get(r.transfer_mode, 9), r.hours, r.checking))


def emit_report(table: ResultTable, format: str = "csv") -> str:
    """Render ``table`` as ``csv``, ``markdown`` or ``json``.

    CSV and markdown show reductions as percentages to one decimal; JSON
    keeps full precision and is read back by :func:`table_from_json`.
    """
    rows = _sorted_rows(table)
    if format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        w.writerows(_fmt_row(r) for r in rows)
        return buf.getvalue()
    if format == "markdown":
        lines = ["| " + " | ".join(REPORT_HEADER) + " |",
                 "|" + "|".join("---" for _ in REPORT_HEADER) + "|"]
        lines += ["| " + " | ".join(_fmt_row(r)) + " |" for r in rows]
        return "\n".join(lines) + "\n"
    if format == "json":
        return json.dumps({"columns": list(COLUMNS), "rows": [asdict(r) for r in rows]}, indent=1) + "\n"
    raise ValueError(f"unknown report format {format!r}")


def table_from_json(text: str) -> ResultTable:
    data = json.loads(text)
    return ResultTable(tuple(ResultRow(**r) for r in data["rows"]))


def strategy_summary(table: ResultTable) -> dict[str, dict[str, float]]:
    """Per-strategy means over every row: reduction, duration, and dilation beyond the workload."""
    out = {}
    for label in STRATEGY_LABELS.values():
        rows = [r for r in table.rows if r.strategy == label]
        if not rows:
            continue
        dilation = [r.mean_duration_h - WORKLOAD_PROFILES[r.workload][0] for r in rows]
        out[label] = {
            "reduction": float(np.mean([r.reduction for r in rows])),
            "mean_duration_h": float(np.mean([r.mean_duration_h for r in rows])),
            "mean_dilation_h": float(np.mean(dilation)),
            "mean_dataset_transfers": float(np.mean([r.mean_dataset_transfers for r in rows])),
        }
    return out


def write_reports(table: ResultTable, out_dir) -> list:
    """Write results.csv, results.json and results.md into ``out_dir``."""
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for fmt, name in (("csv", "results.csv"), ("json", "results.json"), ("markdown", "results.md")):
        p = out / name
        p.write_text(emit_report(table, fmt))
        paths.append(p)
    return paths


def write_plan_traces(table: ResultTable, path) -> None:
    """One CSV row per executed segment of every kept plan."""
    from pathlib import Path

    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["workload", "strategy", "transfer_mode", "hours", "checking", "region", "nominal_start",
                    "segment_start", "segment_end", "segment_region"])
        for (wl, s, m, h, c, region, start), plan in table.plans:
            for seg in plan.segments:
                w.writerow([wl, STRATEGY_LABELS[s], m, f"{h:g}", c, region, start,
                            seg.grid_start, seg.grid_stop, seg.region])
