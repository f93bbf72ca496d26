"""
Quickstart: synchronizing one station under ideal conditions
=============================================================

With no jitter, no drift and a perfect reference clock, the beacon method
must reproduce grandmaster time exactly. This script runs the bundled
``ideal`` scenario, checks that, and then replays one correction by hand.

Run from the repository root::

    python demos/quickstart.py
"""

from beaconsync import load_scenario, run_scenario
from beaconsync.experiment.stats import summarize
from beaconsync.protocol import apply_correction, estimate_tsn_time

# %%
# A scenario is a YAML file; bundled ones can be loaded by name.
cfg = load_scenario("ideal")
print(f"{cfg.name}: {cfg.duration / 1e9:.0f} s simulated, station offset {cfg.stations[0].clock.offset} ns")

result = run_scenario(cfg)

# %%
# Every 10 ms each station reads its clock and the estimate is compared with
# true time. Under ideal conditions every single sample is zero.
for (method, station), st in summarize(result.samples).items():
    print(f"[{method} / {station}] n={st.count} max|err|={st.max_abs_ns} ns")
    for line in st.verdict_lines():
        print("   ", line)

# %%
# The station keeps the most recent (beacon, reference time, local time)
# triple. Mapping a local clock reading to TSN time is one subtraction and
# one addition.
state = result.stations["sta1"]
c = state.last_correction
print(f"last beacon tsf={c.t_bf} us: reference saw it at {c.t_tsn_at_bf} ns, station at {c.t_station_at_bf} ns")
local_now = c.t_station_at_bf + 5_000_000
print("5 ms later, local", local_now, "->", apply_correction(c.t_tsn_at_bf, c.t_station_at_bf, local_now))
print("same via the station state:", estimate_tsn_time(state, local_now).t_tsn_estimate)
