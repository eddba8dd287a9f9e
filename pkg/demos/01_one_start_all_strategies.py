"""
Five strategies on one start time
=================================

Run the HF-SCA workload from midnight on 1 March in DE and see what
each strategy does with a 12 hour window.
"""

from datetime import datetime, timezone

from carbon_sched.strategies import StrategyConfig, run_strategy
from carbon_sched.synth import gen_energy, preset_regions

# three months of synthetic 5-minute intensity for the seven preset regions
regions = preset_regions(seed=7, days=90)
start = datetime(2021, 3, 1, tzinfo=timezone.utc)
energy = gen_energy("HF-SCA", start=start)

config = StrategyConfig(start, window_extra_hours=12, checking_time_minutes=30, reference_region="DE")

_, base = run_strategy("none", energy, regions, config)
print(f"{'strategy':<8} {'total g':>9} {'saved':>7} {'delay':>9} {'duration':>9}  path")
for name in ("none", "fs", "par", "ssfts", "fsfts"):
    plan, out = run_strategy(name, energy, regions, config)
    saved = 100 * (base.total_g - out.total_g) / base.total_g
    path = " > ".join(plan.region_path) if len(plan.region_path) < 8 else f"{len(plan.region_path)} segments"
    print(f"{name:<8} {out.total_g:9.2f} {saved:6.1f}% {str(out.start_delay):>9} {str(out.duration):>9}  {path}")
