"""
Reading and writing traces
==========================

MOER traces arrive in lbs/MWh with the odd missing row. Short gaps are
filled linearly; long ones are refused.
"""

import numpy as np

from carbon_sched.synth import DiurnalModel, gen_intensity
from carbon_sched.timegrid import TraceError, parse_moer_csv, to_moer_csv

raw = """timestamp,value
2021-06-01T00:00:00Z,900
2021-06-01T00:05:00Z,910
2021-06-01T00:20:00Z,940
2021-06-01T00:25:00Z,950
"""
series = parse_moer_csv(raw, unit="lbs_per_mwh", region_id="CAISO")
for t, v in zip(series.grid.timestamps(), series.values):
    print(f"{t:%H:%M}  {v:8.3f} g/kWh")

# a 30 minute hole is more than we are willing to invent
holey = raw.replace("2021-06-01T00:20:00Z", "2021-06-01T00:40:00Z").replace("00:25:00Z", "00:45:00Z")
try:
    parse_moer_csv(holey)
except TraceError as exc:
    print("rejected:", exc)

# synthetic traces survive a round trip through CSV unchanged
s = gen_intensity(DiurnalModel(400, 60, phase_hours=13, noise_sigma=8, seed=11), days=2, region_id="X")
back = parse_moer_csv(to_moer_csv(s), region_id="X")
print("round trip identical:", np.array_equal(back.values, s.values))
