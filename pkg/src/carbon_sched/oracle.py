"""Brute-force references for small instances.

These enumerate every feasible schedule and price it from scratch. They
deliberately share no arithmetic with :mod:`carbon_sched.strategies`, so
agreement between the two is evidence rather than tautology.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np


class OracleLimitError(RuntimeError):
    """Instance too large to enumerate."""


@dataclass(frozen=True)
class OracleLimits:
    max_assignments: int = 2_000_000
    max_subsets: int = 1_000_000


@dataclass(frozen=True)
class FtsOracleResult:
    total_g: float
    start_offset: int
    assignment: tuple[str, ...]  # region per slot


@dataclass(frozen=True)
class ParOracleResult:
    total_g: float
    indices: tuple[int, ...]  # window offsets, chronological


def _window(regions, energy, config, extra):
    grid = regions.grid
    base = (config.nominal_start - grid.start_utc) // grid.step
    if (config.nominal_start - grid.start_utc) % grid.step:
        raise ValueError("nominal start off grid")
    n = len(energy) + extra
    if base < 0 or base + n > grid.n_steps:
        raise ValueError("window not covered")
    return base, n


def oracle_fts(energy, regions, config, flexible: bool = False,
               limits: OracleLimits = OracleLimits()) -> FtsOracleResult:
    """Exhaustive minimum over region-per-slot assignments (and starts, if ``flexible``).

    Transfers are priced by the same rules the strategies document:
    in_training charges every region change (starting from the reference
    region) at the destination's intensity at the change; upstream charges
    each non-reference region once, at its lowest intensity between the
    start and its first slot.
    """
    ids = sorted(regions)
    R = len(ids)
    ref = config.reference_region if config.reference_region is not None else ids[0]
    step = regions.grid.step_minutes
    W = len(energy)
    size = config.checking_time_minutes // step
    if size * step != config.checking_time_minutes or size < 1:
        raise ValueError("checking time must be a multiple of the step")
    bounds = [(a, min(a + size, W)) for a in range(0, W, size)]
    k = len(bounds)
    if R ** k > limits.max_assignments:
        raise OracleLimitError(f"{R}^{k} assignments exceed {limits.max_assignments}")

    extra = 0
    if flexible:
        hours_steps = config.window_extra_hours * 60 / step
        extra = int(round(hours_steps))
    base, _ = _window(regions, energy, config, extra)
    e = [float(x) for x in energy.samples]
    series = [[float(x) for x in regions[r].values] for r in ids]
    gb = config.transfer_model.dataset_gb + config.transfer_model.checkpoint_gb
    kwh = config.transfer_model.kwh_per_gb * gb
    ref_i = ids.index(ref)

    # every assignment as rows of region indices, lexicographic order
    assign = np.stack(np.unravel_index(np.arange(R ** k), (R,) * k), axis=1).astype(np.intp)

    best = None
    for s in range(extra + 1):
        t0 = base + s
        # slot cost table, plain python sums
        cost = np.array([[sum(e[j] * series[r][t0 + j] for j in range(a, b)) for (a, b) in bounds]
                         for r in range(R)])
        totals = cost[assign, np.arange(k)].sum(axis=1)
        if kwh == 0:
            pass
        elif config.transfer_mode == "in_training":
            prev = np.concatenate([np.full((len(assign), 1), ref_i), assign[:, :-1]], axis=1)
            price = np.array([[kwh * series[r][t0 + a] for (a, _) in bounds] for r in range(R)])
            totals = totals + np.where(assign != prev, price[assign, np.arange(k)], 0.0).sum(axis=1)
        else:
            for r in range(R):
                if r == ref_i:
                    continue
                low = [min(series[r][t0:t0 + a + 1]) * kwh for (a, _) in bounds]
                hit = assign == r
                used = hit.any(axis=1)
                first = hit.argmax(axis=1)
                totals = totals + np.where(used, np.array(low)[first], 0.0)
        i = int(np.argmin(totals))
        if best is None or totals[i] < best[0]:
            best = (float(totals[i]), s, tuple(ids[r] for r in assign[i]))
    return FtsOracleResult(*best)


def oracle_par(energy, region_series, config, limits: OracleLimits = OracleLimits()) -> ParOracleResult:
    """Exhaustive minimum over every choice of ``len(energy)`` steps from the window.

    Energy samples are paired with the chosen steps in chronological order.
    """
    grid = region_series.grid
    step = grid.step_minutes
    extra = int(round(config.window_extra_hours * 60 / step))
    W = len(energy)
    L = W + extra
    if math.comb(L, W) > limits.max_subsets:
        raise OracleLimitError(f"C({L},{W}) subsets exceed {limits.max_subsets}")
    base = (config.nominal_start - grid.start_utc) // grid.step
    if base < 0 or base + L > grid.n_steps:
        raise ValueError("window not covered")
    values = np.asarray(region_series.values[base:base + L], dtype=float)
    e = np.asarray(energy.samples, dtype=float)
    n = math.comb(L, W)
    combos = np.fromiter(itertools.chain.from_iterable(itertools.combinations(range(L), W)),
                         dtype=np.intp, count=n * W).reshape(n, W)
    totals = (values[combos] * e).sum(axis=1)
    i = int(np.argmin(totals))
    return ParOracleResult(float(totals[i]), tuple(int(c) for c in combos[i]))
