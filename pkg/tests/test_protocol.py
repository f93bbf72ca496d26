import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from beaconsync.frames import BeaconObservation, MacAddress
from beaconsync.protocol import (
    ReferenceState,
    StationSyncState,
    Unsynchronized,
    apply_correction,
    estimate_tsn_time,
    reference_on_beacon,
    station_on_beacon,
    station_on_tuple,
)
from beaconsync.uadp import TimestampTuple

BI = 102_400  # us


# -- reference station ------------------------------------------------------


def test_reference_filters_other_bssid(ap1, ap2):
    ref = ReferenceState(bssid_filter=ap1)
    assert reference_on_beacon(ref, BeaconObservation(ap2, BI, 0), 7_000_000) is None
    assert ref.filtered == 1
    assert ref.publisher_seq == 0


def test_reference_pairs_beacon_with_tsn_time(ap1):
    ref = ReferenceState(bssid_filter=ap1)
    msg = reference_on_beacon(ref, BeaconObservation(ap1, 102_400, 55), 7_000_000)
    assert msg.sequence_number == 1
    assert msg.timestamp_tuple() == TimestampTuple(102_400, 7_000_000, ap1)
    msg2 = reference_on_beacon(ref, BeaconObservation(ap1, 2 * BI, 99), 7_102_400)
    assert msg2.sequence_number == 2


def test_reference_without_filter_accepts_all(ap1, ap2):
    ref = ReferenceState()
    assert reference_on_beacon(ref, BeaconObservation(ap1, BI, 0), 1) is not None
    assert reference_on_beacon(ref, BeaconObservation(ap2, BI, 0), 2) is not None


def test_reference_drops_repeated_tsf_inside_window(ap1):
    # crafted trace: AP restarts and happens to repeat a TSF it already sent
    ref = ReferenceState(bssid_filter=ap1)
    trace = [(BI, 1_000), (2 * BI, 2_000), (2 * BI, 3_000), (3 * BI, 4_000)]
    out = [reference_on_beacon(ref, BeaconObservation(ap1, tsf, 0), tsn) for tsf, tsn in trace]
    assert [m is not None for m in out] == [True, True, False, True]
    assert ref.duplicates == 1
    assert [m.sequence_number for m in out if m] == [1, 2, 3]


def test_reference_flushes_on_tsf_jump(ap1):
    ref = ReferenceState(bssid_filter=ap1)
    reference_on_beacon(ref, BeaconObservation(ap1, 50 * BI, 0), 1)
    # AP power-cycled: TSF starts again near zero, far outside the 10-beacon window
    msg = reference_on_beacon(ref, BeaconObservation(ap1, BI, 0), 2)
    assert msg is not None
    assert ref.tsf_discontinuities == 1
    assert list(ref.pending) == [(ap1, BI)]


# -- station ----------------------------------------------------------------


def test_store_then_matching_tuple_forms_correction(ap1):
    sta = StationSyncState(bssid_filter=ap1)
    station_on_beacon(sta, BeaconObservation(ap1, BI, 5_000_000))
    corr = station_on_tuple(sta, TimestampTuple(BI, 7_000_000, ap1))
    assert corr is not None
    assert sta.last_correction.t_tsn_at_bf == 7_000_000
    assert sta.last_correction.t_station_at_bf == 5_000_000


def test_observation_map_is_fifo_bounded(ap1):
    sta = StationSyncState(bssid_filter=ap1, capacity=32)
    for k in range(1, 34):
        station_on_beacon(sta, BeaconObservation(ap1, k * BI, k))
    assert len(sta.observations) == 32
    assert (ap1, BI) not in sta.observations
    assert (ap1, 33 * BI) in sta.observations


def test_filtered_bssid_observation_ignored(ap1, ap2):
    sta = StationSyncState(bssid_filter=ap1)
    station_on_beacon(sta, BeaconObservation(ap2, BI, 1))
    assert not sta.observations
    assert station_on_tuple(sta, TimestampTuple(BI, 7, ap2)) is None
    assert sta.last_correction is None


def test_unknown_tuple_is_missed(ap1):
    sta = StationSyncState(bssid_filter=ap1)
    station_on_beacon(sta, BeaconObservation(ap1, BI, 1))
    assert station_on_tuple(sta, TimestampTuple(2 * BI, 7, ap1)) is None
    assert sta.missed == 1
    assert not sta.synchronized


def test_cold_start_tuple_dropped_and_counted(ap1):
    sta = StationSyncState(bssid_filter=ap1)
    assert station_on_tuple(sta, TimestampTuple(BI, 7, ap1)) is None
    assert sta.missed == 1
    with pytest.raises(Unsynchronized):
        estimate_tsn_time(sta, 10)


def test_stale_tuple_beyond_plausibility_window(ap1):
    # crafted trace: the station has heard beacons 1..20, the tuple for
    # beacon 5 arrives late; 20 - 5 = 15 intervals > 10 -> stale
    sta = StationSyncState(bssid_filter=ap1)
    for k in range(1, 21):
        station_on_beacon(sta, BeaconObservation(ap1, k * BI, k * 1000))
    assert station_on_tuple(sta, TimestampTuple(5 * BI, 1, ap1)) is None
    assert sta.stale == 1
    assert sta.missed == 0
    # exactly 10 intervals old is still inside the window
    assert station_on_tuple(sta, TimestampTuple(10 * BI, 1, ap1)) is not None


def test_correction_uses_most_recent_pair_only(ap1):
    sta = StationSyncState(bssid_filter=ap1)
    pairs = [(1, 100, 1_000), (2, 200, 5_000), (3, 300, 2_000)]
    for k, local, tsn in pairs:
        station_on_beacon(sta, BeaconObservation(ap1, k * BI, local))
        station_on_tuple(sta, TimestampTuple(k * BI, tsn, ap1))
    est = estimate_tsn_time(sta, 400)
    assert est.t_tsn_estimate == 2_000 - 300 + 400
    assert est.source_t_bf == 3 * BI


def test_eq1_example():
    sta = StationSyncState(bssid_filter=MacAddress(bytes(6)))
    station_on_beacon(sta, BeaconObservation(sta.bssid_filter, BI, 5_000_000))
    station_on_tuple(sta, TimestampTuple(BI, 7_000_000, sta.bssid_filter))
    est = estimate_tsn_time(sta, 6_000_000)
    assert est.t_tsn_estimate == 8_000_000
    assert est.age == 1_000_000


def test_zero_offset_case(ap1):
    sta = StationSyncState(bssid_filter=ap1)
    station_on_beacon(sta, BeaconObservation(ap1, BI, 123))
    station_on_tuple(sta, TimestampTuple(BI, 123, ap1))
    assert estimate_tsn_time(sta, 98_765).t_tsn_estimate == 98_765


@given(
    tsn=st.integers(-(2**62), 2**62),
    local=st.integers(-(2**62), 2**62),
    now=st.integers(-(2**62), 2**62),
    dt=st.integers(0, 2**40),
)
def test_estimate_is_affine_with_unit_slope(tsn, local, now, dt):
    sta = StationSyncState(bssid_filter=MacAddress(bytes(6)))
    station_on_beacon(sta, BeaconObservation(sta.bssid_filter, BI, local))
    station_on_tuple(sta, TimestampTuple(BI, tsn, sta.bssid_filter))
    a = estimate_tsn_time(sta, now).t_tsn_estimate
    b = estimate_tsn_time(sta, now + dt).t_tsn_estimate
    assert b - a == dt


def test_bssid_isolation_in_interleaved_trace(ap1, ap2):
    rng = random.Random(3)
    solo, mixed = StationSyncState(bssid_filter=ap1), StationSyncState(bssid_filter=ap1)
    for k in range(1, 200):
        local = k * 102_400_000 + rng.randrange(5000)
        for sta in (solo, mixed):
            station_on_beacon(sta, BeaconObservation(ap1, k * BI, local))
        station_on_beacon(mixed, BeaconObservation(ap2, k * BI + 37, local + 7))
        station_on_tuple(mixed, TimestampTuple(k * BI + 37, 999, ap2))
        station_on_beacon(mixed, BeaconObservation(ap2, k * BI, local + 9))
        station_on_tuple(mixed, TimestampTuple(k * BI, 1, ap2))
        tup = TimestampTuple(k * BI, local + 55, ap1)
        station_on_tuple(solo, tup)
        station_on_tuple(mixed, tup)
        assert solo.snapshot() == mixed.snapshot()


def test_drift_compensation_two_point(ap1):
    sta = StationSyncState(bssid_filter=ap1, drift_compensation=True)
    # station clock runs 100 ppm fast relative to TSN
    for k, (local, tsn) in enumerate([(1_000_100, 1_000_000), (2_000_200, 2_000_000)], start=1):
        station_on_beacon(sta, BeaconObservation(ap1, k * BI, local))
        station_on_tuple(sta, TimestampTuple(k * BI, tsn, ap1))
    assert estimate_tsn_time(sta, 3_000_300).t_tsn_estimate == 3_000_000
    sta.drift_compensation = False
    assert estimate_tsn_time(sta, 3_000_300).t_tsn_estimate == 3_000_100


def test_duplicate_tuple_does_not_reset_history(ap1):
    sta = StationSyncState(bssid_filter=ap1)
    station_on_beacon(sta, BeaconObservation(ap1, BI, 10))
    tup = TimestampTuple(BI, 20, ap1)
    assert station_on_tuple(sta, tup) is not None
    assert station_on_tuple(sta, tup) is None
    assert sta.duplicate_tuples == 1
    assert sta.previous_correction is None


def test_apply_correction_formula():
    assert apply_correction(7_000_000, 5_000_000, 6_000_000) == 8_000_000
