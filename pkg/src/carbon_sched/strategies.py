"""Carbon-aware scheduling strategies.

Five strategies share one plan/outcome representation:

* ``no_strategy``: run immediately in the reference region.
* ``flexible_start`` (FS): delay the contiguous run to the cleanest start.
* ``pause_and_resume`` (PaR): run on the cleanest base steps of the window.
* ``static_start_fts`` (ssFtS): start now, hop regions at every checking time.
* ``flexible_start_fts`` (fsFtS): ssFtS at the best start in the window.

``dp_optimal_fts`` is the exact optimum of the ssFtS problem once
dataset transfers are priced in; the greedy variants are what the
benchmark reports.

Ties are broken deterministically: earliest start first, then the
lexicographically smallest region id.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timedelta

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .carbon import (
    TransferCostModel,
    operational_emissions,
    operational_emissions_rows,
    transfer_emissions,
    transfer_energy,
)
from .timegrid import (
    AlignedView,
    EnergySeries,
    IntensitySeries,
    RegionSet,
    align,
    format_timestamp,
    slot_partition,
)

UPSTREAM = "upstream"
IN_TRAINING = "in_training"
TRANSFER_MODES = (UPSTREAM, IN_TRAINING)


@dataclass(frozen=True)
class StrategyConfig:
    nominal_start: datetime
    window_extra_hours: float = 0
    checking_time_minutes: int = 15
    reference_region: str | None = None
    transfer_mode: str = IN_TRAINING
    transfer_model: TransferCostModel = field(default_factory=TransferCostModel)

    def __post_init__(self):
        if self.transfer_mode not in TRANSFER_MODES:
            raise ValueError(f"transfer_mode must be one of {TRANSFER_MODES}, got {self.transfer_mode!r}")
        if self.window_extra_hours < 0:
            raise ValueError("window_extra_hours must be >= 0")

    def extra_steps(self, step_minutes: int) -> int:
        steps = self.window_extra_hours * 60 / step_minutes
        n = round(steps)
        if abs(steps - n) > 1e-9:
            raise ValueError(f"{self.window_extra_hours}h is not a whole number of {step_minutes}m steps")
        return int(n)


@dataclass(frozen=True)
class Segment:
    """A contiguous stretch of execution in one region.

    ``grid_start:grid_stop`` indexes the region grid; ``offset_start:offset_stop``
    the workload's own energy samples.
    """

    grid_start: int
    grid_stop: int
    region: str
    offset_start: int
    offset_stop: int


@dataclass(frozen=True)
class Transfer:
    grid_index: int
    from_region: str
    to_region: str
    emissions_g: float


@dataclass(frozen=True)
class ExecutionPlan:
    segments: tuple[Segment, ...]
    chosen_start: datetime
    pauses: tuple[tuple[int, int], ...] = ()
    transfers: tuple[Transfer, ...] = ()

    @property
    def region_path(self) -> tuple[str, ...]:
        return tuple(s.region for s in self.segments)

    @property
    def regions_used(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(self.region_path))


@dataclass(frozen=True)
class EmissionOutcome:
    operational_g: float
    transfer_g: float
    total_g: float
    region_switches: int
    dataset_transfers: int
    start_delay: timedelta
    completion: datetime
    duration: timedelta

    def to_dict(self) -> dict:
        """Plain-JSON form; durations are given in minutes."""
        d = asdict(self)
        d["start_delay"] = self.start_delay / timedelta(minutes=1)
        d["duration"] = self.duration / timedelta(minutes=1)
        d["completion"] = format_timestamp(self.completion)
        return d


# --------------------------------------------------------------------- helpers


def _as_regions(region_series) -> RegionSet:
    if isinstance(region_series, RegionSet):
        return region_series
    if isinstance(region_series, IntensitySeries):
        return RegionSet([region_series])
    raise TypeError(f"expected IntensitySeries or RegionSet, got {type(region_series).__name__}")


def _reference(regions: RegionSet, config: StrategyConfig) -> str:
    ref = config.reference_region
    if ref is None:
        if len(regions) == 1:
            return regions.ids[0]
        raise ValueError("reference_region is required when several regions are given")
    if ref not in regions:
        raise ValueError(f"reference region {ref!r} not in {list(regions.ids)}")
    return ref


def _segments_from_steps(grid_idx, region_idx, ids) -> tuple[Segment, ...]:
    """Group per-offset (grid index, region) pairs into maximal segments."""
    segs = []
    a = 0
    n = len(grid_idx)
    for j in range(1, n + 1):
        if j == n or region_idx[j] != region_idx[a] or grid_idx[j] != grid_idx[j - 1] + 1:
            segs.append(Segment(int(grid_idx[a]), int(grid_idx[j - 1]) + 1, ids[region_idx[a]], a, j))
            a = j
    return tuple(segs)


def _pauses(segments) -> tuple[tuple[int, int], ...]:
    return tuple((a.grid_stop, b.grid_start) for a, b in zip(segments, segments[1:])
                 if b.grid_start > a.grid_stop)


def _make_plan(view: AlignedView, grid_idx, region_idx) -> ExecutionPlan:
    segs = _segments_from_steps(np.asarray(grid_idx), np.asarray(region_idx), view.regions.ids)
    start = view.regions.grid.timestamp(segs[0].grid_start)
    return ExecutionPlan(segs, start, _pauses(segs))


def evaluate_plan(plan: ExecutionPlan, energy: EnergySeries, regions: RegionSet,
                  nominal_start: datetime) -> EmissionOutcome:
    """Price a finished plan: operational emissions along the executed path plus its transfers."""
    grid = regions.grid
    ids = regions.ids
    path = np.concatenate([regions.matrix[ids.index(s.region), s.grid_start:s.grid_stop]
                           for s in plan.segments])
    op = operational_emissions(energy.samples, path)
    tr = math.fsum(t.emissions_g for t in plan.transfers)
    switches = sum(a.region != b.region for a, b in zip(plan.segments, plan.segments[1:]))
    nominal_idx = grid.index_of(nominal_start)
    completion = grid.timestamp(plan.segments[-1].grid_stop)
    return EmissionOutcome(
        operational_g=op,
        transfer_g=tr,
        total_g=op + tr,
        region_switches=switches,
        dataset_transfers=len(plan.transfers),
        start_delay=(plan.segments[0].grid_start - nominal_idx) * grid.step,
        completion=completion,
        duration=completion - nominal_start,
    )


def apply_transfer_mode(plan: ExecutionPlan, regions: RegionSet, transfer_model: TransferCostModel,
                        mode: str, reference_region: str) -> ExecutionPlan:
    """Attach priced dataset transfers to ``plan``.

    in_training: one transfer per region change (the reference region is
    where the data starts), charged at the destination's intensity at the
    switch instant.

    upstream: each non-reference region used receives the data once, sent
    at its cleanest instant between plan start and first use.
    """
    if mode not in TRANSFER_MODES:
        raise ValueError(f"unknown transfer mode {mode!r}")
    ids = regions.ids
    mat = regions.matrix
    events = []
    if mode == IN_TRAINING:
        cur = reference_region
        for seg in plan.segments:
            if seg.region != cur:
                intensity = mat[ids.index(seg.region), seg.grid_start]
                events.append(Transfer(seg.grid_start, cur, seg.region,
                                       float(transfer_emissions(transfer_model, intensity))))
                cur = seg.region
    else:
        begin = plan.segments[0].grid_start
        for region in plan.regions_used:
            if region == reference_region:
                continue
            first = next(s.grid_start for s in plan.segments if s.region == region)
            window = mat[ids.index(region), begin:first + 1]
            at = begin + int(np.argmin(window))
            events.append(Transfer(at, reference_region, region,
                                   float(transfer_emissions(transfer_model, window[at - begin]))))
        events.sort(key=lambda t: (t.grid_index, t.to_region))
    return replace(plan, transfers=tuple(events))


# ------------------------------------------------------------------ strategies


def no_strategy(energy: EnergySeries, region_series, nominal_start: datetime,
                region: str | None = None):
    """Baseline: run at ``nominal_start`` in one region without moving or waiting."""
    regions = _as_regions(region_series)
    ref = _reference(regions, StrategyConfig(nominal_start, reference_region=region))
    view = align(regions, energy, nominal_start)
    W = len(energy)
    plan = _make_plan(view, view.base_index + np.arange(W), np.full(W, regions.ids.index(ref)))
    return plan, evaluate_plan(plan, energy, regions, nominal_start)


def flexible_start(energy: EnergySeries, region_series, config: StrategyConfig):
    """Contiguous run at the start time with the lowest emissions in the window."""
    regions = _as_regions(region_series)
    ref = _reference(regions, config)
    X = config.extra_steps(regions.grid.step_minutes)
    view = align(regions, energy, config.nominal_start, X)
    W = len(energy)
    scores = operational_emissions_rows(energy.samples, sliding_window_view(view.window(ref), W))
    s = int(np.argmin(scores))
    plan = _make_plan(view, view.base_index + s + np.arange(W), np.full(W, regions.ids.index(ref)))
    return plan, evaluate_plan(plan, energy, regions, config.nominal_start)


def pause_and_resume(energy: EnergySeries, region_series, config: StrategyConfig):
    """Run on the lowest-intensity base steps of the window.

    The j-th energy sample is paired with the j-th chosen step in
    chronological order.
    """
    regions = _as_regions(region_series)
    ref = _reference(regions, config)
    X = config.extra_steps(regions.grid.step_minutes)
    view = align(regions, energy, config.nominal_start, X)
    W = len(energy)
    window = view.window(ref)
    order = np.lexsort((np.arange(len(window)), window))
    chosen = np.sort(order[:W])
    plan = _make_plan(view, view.base_index + chosen, np.full(W, regions.ids.index(ref)))
    return plan, evaluate_plan(plan, energy, regions, config.nominal_start)


class FtsScan:
    """Follow-the-Sun plans evaluated for every candidate start of a window.

    Candidate start ``s`` begins ``s`` base steps after the nominal start.
    ``totals[s]`` is the total (operational + transfer) emission of the
    plan chosen for that start; each start's plan depends only on that
    start, so narrower windows are answered by prefixes.
    """

    def __init__(self, energy: EnergySeries, regions: RegionSet, config: StrategyConfig,
                 n_starts: int | None = None):
        step = regions.grid.step_minutes
        X = config.extra_steps(step) if n_starts is None else n_starts - 1
        self.energy = energy
        self.regions = regions
        self.config = config
        self.reference = _reference(regions, config)
        self.view = align(regions, energy, config.nominal_start, X)
        self.partition = slot_partition(len(energy), step, config.checking_time_minutes)
        self.n_starts = X + 1
        self._solve()

    def _solve(self):
        E = self.energy.samples
        W = len(E)
        S = self.n_starts
        R = len(self.regions)
        ref = self.regions.ids.index(self.reference)
        part = self.partition
        starts = part.starts
        k = part.k
        tE = transfer_energy(self.config.transfer_model)

        # (S, R, W): intensity seen by workload offset j when starting at s
        win = sliding_window_view(self.view.window_matrix(), W, axis=1).transpose(1, 0, 2)
        prod = np.ascontiguousarray(win * E)
        C = np.add.reduceat(prod, starts, axis=-1)  # slot emissions (S, R, k)
        ref_total = prod[:, ref, :].sum(axis=-1)
        regions_ax = np.arange(R)

        if self.config.transfer_mode == IN_TRAINING:
            T = tE * win[:, :, starts]  # switching charge at slot start (S, R, k)
            path = np.empty((S, k), dtype=np.intp)
            cur = np.full(S, ref)
            for g in range(k):
                penalty = np.where(regions_ax[None, :] != cur[:, None], T[:, :, g], 0.0)
                cur = (C[:, :, g] + penalty).argmin(axis=1)
                path[:, g] = cur
            prev = np.concatenate([np.full((S, 1), ref), path[:, :-1]], axis=1)
            charges = np.where(path != prev, np.take_along_axis(T, path[:, None, :], axis=1)[:, 0, :], 0.0)
        else:
            path, charges = self._upstream_greedy(win, C, tE, ref)

        step_region = path[:, np.repeat(np.arange(k), part.lengths)]  # (S, W)
        seen = np.take_along_axis(win, step_region[:, None, :], axis=1)[:, 0, :]
        op = operational_emissions_rows(E, seen)
        tr = np.array([math.fsum(row) for row in charges]) if tE > 0 else np.zeros(S)
        totals = op + tr

        # staying in the reference region is always feasible
        fallback = totals > ref_total
        path[fallback] = ref
        totals[fallback] = ref_total[fallback]

        self.paths = path
        self.totals = totals

    def _upstream_greedy(self, win, C, tE, ref):
        """Slot-wise argmin, then drop regions whose savings don't pay for shipping the data."""
        S, R, k = C.shape
        starts = self.partition.starts
        allowed = np.ones((S, R), dtype=bool)
        regions_ax = np.arange(R)
        cheapest_since_start = np.minimum.accumulate(win, axis=2)
        while True:
            Cm = np.where(allowed[:, :, None], C, np.inf)
            path = Cm.argmin(axis=1)
            onehot = path[:, None, :] == regions_ax[None, :, None]  # (S, R, k)
            first = starts[onehot.argmax(axis=2)]
            price = tE * np.take_along_axis(cheapest_since_start, first[:, :, None], axis=2)[:, :, 0]
            used = onehot.any(axis=2)
            if tE == 0 or R == 1:
                break
            srt = np.sort(Cm, axis=1)
            gain = srt[:, 1, :] - srt[:, 0, :]
            savings = np.where(onehot, gain[:, None, :], 0.0).sum(axis=2)
            drop_ok = used & (savings < price)
            drop_ok[:, ref] = False
            rows = drop_ok.any(axis=1)
            if not rows.any():
                break
            net = np.where(drop_ok, savings - price, np.inf)
            worst = net.argmin(axis=1)
            allowed[rows, worst[rows]] = False
        charges = np.where(used, price, 0.0)
        charges[:, ref] = 0.0
        return path, charges

    def best_start(self, n_starts: int | None = None) -> int:
        n = self.n_starts if n_starts is None else n_starts
        if not 1 <= n <= self.n_starts:
            raise ValueError(f"n_starts must be in [1, {self.n_starts}]")
        return int(np.argmin(self.totals[:n]))

    def plan_at(self, s: int):
        """(plan, outcome) for candidate start ``s``."""
        part = self.partition
        regions_of_steps = self.paths[s][np.repeat(np.arange(part.k), part.lengths)]
        grid_idx = self.view.base_index + s + np.arange(len(self.energy))
        plan = _make_plan(self.view, grid_idx, regions_of_steps)
        plan = apply_transfer_mode(plan, self.regions, self.config.transfer_model,
                                   self.config.transfer_mode, self.reference)
        return plan, evaluate_plan(plan, self.energy, self.regions, self.config.nominal_start)

    def best(self, n_starts: int | None = None):
        return self.plan_at(self.best_start(n_starts))


def static_start_fts(energy: EnergySeries, regions: RegionSet, config: StrategyConfig):
    """Start at the nominal time; at every checking time run the next slot in the greenest region.

    With in-training transfers the per-slot choice includes the transfer
    charge for leaving the current region. With upstream transfers, regions
    whose slot savings don't cover their one-off shipment are pruned. If the
    resulting plan still emits more than staying in the reference region,
    the reference-only plan is returned.
    """
    return FtsScan(energy, _as_regions(regions), config, n_starts=1).best()


def flexible_start_fts(energy: EnergySeries, regions: RegionSet, config: StrategyConfig):
    """:func:`static_start_fts` at the start time in the window with the lowest total."""
    return FtsScan(energy, _as_regions(regions), config).best()


def dp_optimal_fts(energy: EnergySeries, regions: RegionSet, config: StrategyConfig):
    """Exact minimum-emission region-per-slot assignment at the nominal start.

    Backward recursion over slots. For in-training transfers the state is
    the current region; for upstream transfers it is the set of regions
    already holding the data. Among equal-cost assignments the
    lexicographically smallest region path wins.
    """
    regions = _as_regions(regions)
    ref_id = _reference(regions, config)
    step = regions.grid.step_minutes
    view = align(regions, energy, config.nominal_start)
    part = slot_partition(len(energy), step, config.checking_time_minutes)
    E = energy.samples
    M = view.window_matrix()  # (R, W)
    R = len(regions)
    ref = regions.ids.index(ref_id)
    starts = part.starts
    k = part.k
    C = np.add.reduceat(np.ascontiguousarray(M * E), starts, axis=-1)  # (R, k)
    tE = transfer_energy(config.transfer_model)

    tables = []
    if config.transfer_mode == IN_TRAINING:
        T = tE * M[:, starts]
        V = np.zeros(R)
        stay = np.eye(R, dtype=bool)
        for g in range(k - 1, -1, -1):
            base = C[:, g] + V
            cand = np.where(stay, base[None, :], (base + T[:, g])[None, :])  # (current, next)
            tables.append(cand)
            V = cand.min(axis=1)
        tables.reverse()
        cur = ref
        path = []
        for g in range(k):
            cur = int(np.argmin(tables[g][cur]))
            path.append(cur)
    else:
        if R > 16:
            raise ValueError("upstream DP supports at most 16 regions")
        price = tE * np.minimum.accumulate(M, axis=1)[:, starts]  # (R, k)
        masks = np.arange(1 << R)
        bits = 1 << np.arange(R)
        has = (masks[:, None] & bits[None, :]) != 0
        grown = masks[:, None] | bits[None, :]
        V = np.zeros(1 << R)
        for g in range(k - 1, -1, -1):
            cand = C[None, :, g] + np.where(has, 0.0, price[None, :, g]) + V[grown]
            tables.append(cand)
            V = cand.min(axis=1)
        tables.reverse()
        mask = 1 << ref
        path = []
        for g in range(k):
            r = int(np.argmin(tables[g][mask]))
            path.append(r)
            mask |= 1 << r

    regions_of_steps = np.repeat(np.array(path, dtype=np.intp), part.lengths)
    plan = _make_plan(view, view.base_index + np.arange(len(E)), regions_of_steps)
    plan = apply_transfer_mode(plan, regions, config.transfer_model, config.transfer_mode, ref_id)
    return plan, evaluate_plan(plan, energy, regions, config.nominal_start)


STRATEGIES = {
    "none": "NoStrategy",
    "fs": "FS",
    "par": "PaR",
    "ssfts": "ssFtS",
    "fsfts": "fsFtS",
}


def run_strategy(name: str, energy: EnergySeries, regions: RegionSet, config: StrategyConfig):
    """Dispatch by short name (``none``, ``fs``, ``par``, ``ssfts``, ``fsfts``, ``dpfts``).

    Single-region strategies run in ``config.reference_region``.
    """
    regions = _as_regions(regions)
    ref = _reference(regions, config)
    if name == "none":
        return no_strategy(energy, regions, config.nominal_start, ref)
    if name == "fs":
        return flexible_start(energy, regions.subset([ref]), config)
    if name == "par":
        return pause_and_resume(energy, regions.subset([ref]), config)
    if name == "ssfts":
        return static_start_fts(energy, regions, config)
    if name == "fsfts":
        return flexible_start_fts(energy, regions, config)
    if name == "dpfts":
        return dp_optimal_fts(energy, regions, config)
    raise ValueError(f"unknown strategy {name!r}")
