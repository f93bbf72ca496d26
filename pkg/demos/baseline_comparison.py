"""
Beacon method versus two-way PTP over Wi-Fi
===========================================

Running a two-way exchange (Sync / Delay_Req) straight over Wi-Fi with
software timestamps leaves the offset estimate off by half the asymmetry of
each round trip. Contention makes that asymmetry large and heavy-tailed. The
beacon method needs no round trip: both receivers timestamp the same
broadcast, so channel access delay cancels.

Run from the repository root::

    python demos/baseline_comparison.py
"""

from fractions import Fraction

import numpy as np

from beaconsync import load_scenario, run_scenario
from beaconsync.experiment.stats import summarize

cfg = load_scenario("paper-fig7")
result = run_scenario(cfg.model_copy(update={"record_trace": False}))

# %%
# Distribution of |error| for both methods over the same run.
print(f"{'method':>13} {'median':>10} {'p95':>10} {'p99':>10} {'max':>10}  class II")
for (method, station), st in summarize(result.samples).items():
    if station != "*":
        continue
    cells = " ".join(f"{v / 1e3:8.1f}us" for v in (st.median_ns, st.p95_ns, st.p99_ns, st.max_abs_ns))
    print(f"{method:>13} {cells}  {'PASS' if st.class_verdicts['II'] else 'FAIL'}")

# %%
# Each completed exchange is recorded with the two one-way delays it saw.
# Its estimate minus the true offset is exactly half their difference.
records = result.exchanges["sta1"]
asym = np.array([r.asymmetry for r in records]) / 1e6
print(f"{len(records)} exchanges; |asymmetry| median {np.median(np.abs(asym)):.2f} ms, max {np.abs(asym).max():.1f} ms")
rec = max(records, key=lambda r: abs(r.asymmetry))
print(
    f"worst exchange: down {rec.downlink_delay / 1e6:.2f} ms, up {rec.uplink_delay / 1e6:.2f} ms, "
    f"estimate error = asymmetry / 2 = {float(Fraction(rec.asymmetry, 2)) / 1e6:.2f} ms"
)
