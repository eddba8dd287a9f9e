"""
When the greedy switch is wrong
===============================

The slot-by-slot choice only looks one checking time ahead. Here staying
in A looks right twice, then a late move to B is forced. Moving to B
immediately, and paying the transfer once, is cheaper overall. The exact
recursion and the brute-force oracle both find it.
"""

from datetime import datetime, timezone

import numpy as np

from carbon_sched.carbon import TransferCostModel
from carbon_sched.oracle import oracle_fts
from carbon_sched.strategies import StrategyConfig, dp_optimal_fts, static_start_fts
from carbon_sched.timegrid import EnergySeries, IntensitySeries, RegionSet, TimeGrid

t0 = datetime(2021, 1, 1, tzinfo=timezone.utc)
grid = TimeGrid(t0, 3)
regions = RegionSet([IntensitySeries("A", grid, np.array([5.0, 18.0, 39.0])),
                     IntensitySeries("B", grid, np.array([6.0, 15.0, 16.0]))])
energy = EnergySeries(grid, np.ones(3))
# 0.5 GB at 1 kWh/GB: each move costs 0.5 kWh at the destination's intensity
cfg = StrategyConfig(t0, 0, 5, "A", "in_training", TransferCostModel(kwh_per_gb=1.0, dataset_gb=0.5))

for label, fn in (("greedy", static_start_fts), ("exact", dp_optimal_fts)):
    plan, out = fn(energy, regions, cfg)
    steps = [s.region for s in plan.segments for _ in range(s.offset_start, s.offset_stop)]
    print(f"{label:<7} {'-'.join(steps)}  total {out.total_g:.1f} g  ({out.operational_g:.1f} + {out.transfer_g:.1f})")

best = oracle_fts(energy, regions, cfg)
print(f"oracle  {'-'.join(best.assignment)}  total {best.total_g:.1f} g")
