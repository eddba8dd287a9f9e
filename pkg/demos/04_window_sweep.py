"""
How much does waiting buy?
==========================

Average savings of the flexible strategies as the window grows, over
the first day of each month, with every region taking a turn as launch
region.
"""

from carbon_sched.bench import BenchmarkSpec, run_retrospective
from carbon_sched.synth import preset_regions

regions = preset_regions(seed=0)
spec = BenchmarkSpec(workloads=("IF",), strategies=("none", "fs", "par", "fsfts"),
                     hours_set=(6, 12, 18, 24), checking_set=(30,), transfer_modes=("in_training",),
                     days_per_month=1)
table = run_retrospective(spec, regions)

print("hours    FS     PaR   fsFtS")
for h in spec.hours_set:
    row = [table.row("IF", label, mode, h, 30).reduction
           for label, mode in (("FS", "none"), ("PaR", "none"), ("fsFtS", "in_training"))]
    print(f"{h:5d}" + "".join(f"{100 * r:7.1f}" for r in row))
