"""
Synthesizing a pair of monitor-mode captures
============================================

The ``pcap-replay`` scenario reads two captures of the same channel: one
taken on the reference station (whose host clock follows TSN time) and one
on a station with a free-running, drifting clock. This script fabricates
such a pair so the replay path can be exercised without radio hardware.

Run from the repository root::

    python demos/make_replay_captures.py

It rewrites the two ``.pcap`` files next to ``pcap-replay.yaml``.
"""

from pathlib import Path

import numpy as np

from beaconsync.clock import US, ClockModel, GptpResidualModel, reference_clock_read, stream_rng
from beaconsync.frames import BeaconFrame, MacAddress, encode_beacon
from beaconsync.ingest import write_pcap
from beaconsync.medium import ApModel, LinkModel, iter_beacons

OUT = Path(__file__).resolve().parents[1] / "src/beaconsync/experiment/scenarios"
SEED = 2020
DURATION = 60 * 10**9

# %%
# Two APs share the channel; only ap1 matters for synchronization, ap2 is
# there to be filtered out. A probe response (subtype 5) now and then checks
# that non-beacon management frames are skipped.
ap1 = ApModel(MacAddress("02:00:00:00:00:01"), tsf_drift_ppb=2500, name="ap1")
ap2 = ApModel(MacAddress("02:00:00:00:00:02"), tsf_origin=41_000_000, name="ap2")
PROBE_RESPONSE_FC = 0x0050

gptp = GptpResidualModel(bound=350, seed=SEED)
station_clock = ClockModel(offset_at_epoch=3_000_000_000, drift_ppb=-11_000, granularity=1, seed=SEED)
link = LinkModel(propagation_delay=30, rx_jitter_std=4 * US, rx_jitter_dist="uniform")

# %%
# Each capture sees every frame after its own random receive delay. The
# reference stamps with TSN time (nanosecond pcap), the station with its own
# clock (microsecond pcap, as most monitor-mode drivers deliver).
ref_rng = stream_rng(SEED, "replay", "reference")
sta_rng = stream_rng(SEED, "replay", "station")
ref_packets, sta_packets = [], []
events = sorted(
    [(t, ap, k, tsf) for ap in (ap1, ap2) for k, t, tsf in iter_beacons(ap, DURATION)],
    key=lambda e: e[0],
)
for t, ap, k, tsf in events:
    frame = encode_beacon(BeaconFrame(bssid=ap.bssid, timestamp=tsf, seq_ctl=(k % 4096) << 4))
    if k % 17 == 0:
        probe = BeaconFrame(bssid=ap.bssid, timestamp=tsf, frame_control=PROBE_RESPONSE_FC)
        frame_probe = encode_beacon(probe)
    else:
        frame_probe = None
    for rng, packets, stamp in (
        (ref_rng, ref_packets, lambda x: reference_clock_read(x, gptp)),
        (sta_rng, sta_packets, station_clock.read),
    ):
        arrival = t + link.sample_delay(rng)
        packets.append((stamp(arrival), frame, tsf))
        if frame_probe is not None:
            packets.append((stamp(arrival + 300 * US), frame_probe, tsf + 300))

write_pcap(OUT / "pcap-replay-reference.pcap", ref_packets, nanosecond=True)
write_pcap(OUT / "pcap-replay-station.pcap", sta_packets, nanosecond=False)
print(f"wrote {len(ref_packets)} + {len(sta_packets)} packets to {OUT}")
print("station beacons per second:", np.round(len(sta_packets) / (DURATION / 1e9), 1))
