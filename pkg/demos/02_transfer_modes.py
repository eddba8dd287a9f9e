"""
Shipping the dataset: upstream vs in-training
=============================================

Follow-the-Sun moves training between regions. The dataset must go
along, either once per region ahead of time (upstream) or at every
switch (in-training). Both are priced at the destination grid.
"""

from datetime import datetime, timezone

from carbon_sched.carbon import TransferCostModel
from carbon_sched.strategies import StrategyConfig, static_start_fts
from carbon_sched.synth import gen_energy, preset_regions

regions = preset_regions(seed=1, days=10)
start = datetime(2021, 1, 3, 6, tzinfo=timezone.utc)
energy = gen_energy("HF-SCA", start=start)

for gb in (0.320, 20.0, 200.0):
    model = TransferCostModel(dataset_gb=gb)
    for mode in ("upstream", "in_training"):
        cfg = StrategyConfig(start, 0, 60, "GB", mode, model)
        plan, out = static_start_fts(energy, regions, cfg)
        print(f"{gb:6.1f} GB {mode:<12} total {out.total_g:8.2f} g  transfer {out.transfer_g:6.2f} g  "
              f"switches {out.region_switches:2d}  transfers {out.dataset_transfers:2d}  regions {plan.regions_used}")

# the transfer events themselves
cfg = StrategyConfig(start, 0, 60, "GB", "in_training", TransferCostModel())
plan, _ = static_start_fts(energy, regions, cfg)
for t in plan.transfers[:5]:
    print(f"  {regions.grid.timestamp(t.grid_index):%H:%M}  {t.from_region} -> {t.to_region}  {t.emissions_g:.4f} g")
