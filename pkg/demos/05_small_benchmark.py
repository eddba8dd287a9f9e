"""
A miniature retrospective study
===============================

Same protocol as the full sweep, cut down to two months so it runs in
seconds. The markdown report has one row per
(workload, strategy, transfer mode, hours, checking time).
"""

from carbon_sched.bench import BenchmarkSpec, emit_report, run_retrospective, strategy_summary
from carbon_sched.synth import preset_regions

regions = preset_regions(seed=3)
spec = BenchmarkSpec(workloads=("SVM", "AE"), hours_set=(12,), checking_set=(60,), months=(1, 7))
table = run_retrospective(spec, regions)

print(emit_report(table, "markdown"))
for label, s in strategy_summary(table).items():
    print(f"{label:<10} {100 * s['reduction']:5.1f}%  longer by {s['mean_dilation_h']:.2f} h on average")
