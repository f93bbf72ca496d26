"""Reference-station and station state machines for beacon-anchored synchronization.

The reference station is wired to the TSN domain. For every beacon it hears
it pairs the beacon's TSF with its own TSN clock reading and multicasts the
pair. A station records its own local clock at each beacon arrival; when a
tuple for a beacon it also heard comes in, it keeps the pair
``(t_tsn_at_bf, t_station_at_bf)`` and from then on converts local time to
TSN time with::

    t_tsn = t_tsn_at_bf - t_station_at_bf + t_station_current

The station clock itself is never stepped; the correction is applied on
read, which keeps the clock model and the protocol independent.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field

from .clock import Duration, SimTime
from .frames import (
    DEFAULT_BEACON_INTERVAL_TU,
    TSF_MOD,
    TU_US,
    BeaconObservation,
    MacAddress,
    tsf_delta,
)
from .uadp import NetworkMessage, TimestampTuple, tuple_message

DEFAULT_CAPACITY = 32
PLAUSIBILITY_BEACONS = 10


class Unsynchronized(RuntimeError):
    """No matched (tuple, observation) pair yet; TSN time cannot be estimated."""


def plausibility_window_us(beacon_interval_tu: int = DEFAULT_BEACON_INTERVAL_TU) -> int:
    return PLAUSIBILITY_BEACONS * beacon_interval_tu * TU_US


def _tsf_continuous(last: int, tsf: int, window_us: int) -> bool:
    """True if ``tsf`` lies within ``window_us`` of ``last`` in either direction."""
    return tsf_delta(last, tsf) <= window_us or tsf_delta(tsf, last) <= window_us


def _is_older(tsf: int, newest: int, window_us: int) -> bool:
    """True if ``tsf`` precedes ``newest`` by more than the window (modular, half-range)."""
    back = tsf_delta(tsf, newest)
    return window_us < back < TSF_MOD // 2


def apply_correction(t_tsn_at_bf: SimTime, t_station_at_bf: SimTime, t_station_current: SimTime) -> SimTime:
    return t_tsn_at_bf - t_station_at_bf + t_station_current


@dataclass
class ReferenceState:
    bssid_filter: MacAddress | None = None
    publisher_id: int = 1
    publisher_seq: int = 0
    beacon_interval_tu: int = DEFAULT_BEACON_INTERVAL_TU
    capacity: int = DEFAULT_CAPACITY
    pending: OrderedDict[tuple[MacAddress, int], SimTime] = field(default_factory=OrderedDict)
    last_tsf: dict[MacAddress, int] = field(default_factory=dict)
    filtered: int = 0
    duplicates: int = 0
    tsf_discontinuities: int = 0

    def counters(self) -> dict[str, int]:
        return {
            "reference_published": self.publisher_seq,
            "reference_filtered": self.filtered,
            "reference_duplicates": self.duplicates,
            "reference_tsf_discontinuities": self.tsf_discontinuities,
        }


def reference_on_beacon(
    state: ReferenceState, obs: BeaconObservation, tsn_now: SimTime
) -> NetworkMessage | None:
    """Pair a beacon with the TSN time captured at its arrival and build the tuple message."""
    if state.bssid_filter is not None and obs.bssid != state.bssid_filter:
        state.filtered += 1
        return None
    window = plausibility_window_us(state.beacon_interval_tu)
    last = state.last_tsf.get(obs.bssid)
    if last is not None and not _tsf_continuous(last, obs.tsf, window):
        # AP restarted (or we were deaf for a long time): forget everything about it
        for key in [k for k in state.pending if k[0] == obs.bssid]:
            del state.pending[key]
        state.tsf_discontinuities += 1
        last = None
    if obs.key in state.pending:
        state.duplicates += 1
        return None
    state.pending[obs.key] = tsn_now
    while len(state.pending) > state.capacity:
        state.pending.popitem(last=False)
    if last is None or 0 < tsf_delta(last, obs.tsf) <= window:
        state.last_tsf[obs.bssid] = obs.tsf
    state.publisher_seq = (state.publisher_seq + 1) & 0xFFFF_FFFF
    tup = TimestampTuple(t_bf=obs.tsf, t_tsn_at_bf=tsn_now, bssid=obs.bssid)
    return tuple_message(tup, state.publisher_id, state.publisher_seq)


@dataclass(frozen=True)
class Correction:
    t_bf: int
    t_tsn_at_bf: SimTime
    t_station_at_bf: SimTime


@dataclass(frozen=True)
class SyncEstimate:
    t_tsn_estimate: SimTime
    age: Duration
    source_t_bf: int


@dataclass
class StationSyncState:
    """Per-station synchronization state.

    ``drift_compensation`` switches on a two-point rate estimate from the last
    two corrections. It goes beyond plain offset correction and is off by
    default.
    """

    bssid_filter: MacAddress
    capacity: int = DEFAULT_CAPACITY
    beacon_interval_tu: int = DEFAULT_BEACON_INTERVAL_TU
    drift_compensation: bool = False
    observations: OrderedDict[tuple[MacAddress, int], SimTime] = field(default_factory=OrderedDict)
    newest_tsf: int | None = None
    last_correction: Correction | None = None
    previous_correction: Correction | None = None
    missed: int = 0
    stale: int = 0
    duplicate_observations: int = 0
    duplicate_tuples: int = 0
    tsf_discontinuities: int = 0

    def __post_init__(self) -> None:
        self.bssid_filter = MacAddress(self.bssid_filter)

    @property
    def synchronized(self) -> bool:
        return self.last_correction is not None

    def counters(self) -> dict[str, int]:
        return {
            "missed_tuples": self.missed,
            "stale_tuples": self.stale,
            "duplicate_observations": self.duplicate_observations,
            "duplicate_tuples": self.duplicate_tuples,
            "tsf_discontinuities": self.tsf_discontinuities,
        }

    def snapshot(self) -> tuple:
        """Everything that determines future estimates, for equality checks."""
        return (
            tuple(self.observations.items()),
            self.newest_tsf,
            self.last_correction,
            self.previous_correction,
            tuple(sorted(self.counters().items())),
        )


def station_on_beacon(state: StationSyncState, obs: BeaconObservation) -> None:
    if obs.bssid != state.bssid_filter:
        return
    window = plausibility_window_us(state.beacon_interval_tu)
    if state.newest_tsf is not None and not _tsf_continuous(state.newest_tsf, obs.tsf, window):
        state.observations.clear()
        state.newest_tsf = None
        state.tsf_discontinuities += 1
    if obs.key in state.observations:
        state.duplicate_observations += 1
        return
    state.observations[obs.key] = obs.local_rx_time
    while len(state.observations) > state.capacity:
        state.observations.popitem(last=False)
    if state.newest_tsf is None or 0 < tsf_delta(state.newest_tsf, obs.tsf) <= window:
        state.newest_tsf = obs.tsf


def station_on_tuple(state: StationSyncState, tup: TimestampTuple) -> Correction | None:
    """Match a reference tuple against local observations; returns the new correction if any."""
    if tup.bssid != state.bssid_filter:
        return None
    window = plausibility_window_us(state.beacon_interval_tu)
    if state.newest_tsf is not None and _is_older(tup.t_bf, state.newest_tsf, window):
        state.stale += 1
        return None
    last = state.last_correction
    if last is not None and last.t_bf == tup.t_bf:
        state.duplicate_tuples += 1
        return None
    rx = state.observations.get(tup.key)
    if rx is None:
        state.missed += 1
        return None
    corr = Correction(t_bf=tup.t_bf, t_tsn_at_bf=tup.t_tsn_at_bf, t_station_at_bf=rx)
    state.previous_correction = last
    state.last_correction = corr
    return corr


def estimate_tsn_time(state: StationSyncState, t_station_current: SimTime) -> SyncEstimate:
    corr = state.last_correction
    if corr is None:
        raise Unsynchronized("station has no matched beacon/tuple pair yet")
    elapsed = t_station_current - corr.t_station_at_bf
    prev = state.previous_correction
    if state.drift_compensation and prev is not None and corr.t_station_at_bf != prev.t_station_at_bf:
        d_tsn = corr.t_tsn_at_bf - prev.t_tsn_at_bf
        d_station = corr.t_station_at_bf - prev.t_station_at_bf
        estimate = corr.t_tsn_at_bf + (elapsed * d_tsn) // d_station
    else:
        estimate = apply_correction(corr.t_tsn_at_bf, corr.t_station_at_bf, t_station_current)
    return SyncEstimate(t_tsn_estimate=estimate, age=max(0, elapsed), source_t_bf=corr.t_bf)
