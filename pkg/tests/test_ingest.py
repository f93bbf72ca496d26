import struct

import pytest

from beaconsync.frames import BeaconFrame, BeaconObservation, MacAddress, encode_beacon
from beaconsync.ingest import (
    IngestStats,
    PcapFormatError,
    extract_beacons,
    pair_observations,
    parse_radiotap,
    read_pcap,
    write_pcap,
)

AP1 = MacAddress("02:00:00:00:00:01")
AP2 = MacAddress("02:00:00:00:00:02")


def beacon(bssid, tsf):
    return encode_beacon(BeaconFrame(bssid=bssid, timestamp=tsf))


def handmade_pcap(magic_bytes, endian, linktype, records):
    """Classic pcap assembled field by field: 24-octet global header, 16-octet record headers."""
    out = magic_bytes + struct.pack(endian + "HHiIII", 2, 4, 0, 0, 65535, linktype)
    for sec, frac, pkt in records:
        out += struct.pack(endian + "IIII", sec, frac, len(pkt), len(pkt)) + pkt
    return out


RT_PLAIN = bytes([0, 0, 8, 0, 0, 0, 0, 0])


def test_header_only_pcap_is_empty(tmp_path):
    p = tmp_path / "empty.pcap"
    p.write_bytes(handmade_pcap(b"\xd4\xc3\xb2\xa1", "<", 127, []))
    assert list(read_pcap(p)) == []


def test_ethernet_link_type_rejected(tmp_path):
    p = tmp_path / "eth.pcap"
    p.write_bytes(handmade_pcap(b"\xd4\xc3\xb2\xa1", "<", 1, []))
    with pytest.raises(PcapFormatError, match="expected radiotap link type"):
        read_pcap(p)


def test_bad_magic(tmp_path):
    p = tmp_path / "bad.pcap"
    p.write_bytes(b"\x0a\x0d\x0d\x0a" + bytes(20))  # pcapng section header
    with pytest.raises(PcapFormatError, match="bad pcap magic"):
        read_pcap(p)


@pytest.mark.parametrize(
    "magic,endian,frac,expected",
    [
        (b"\x4d\x3c\xb2\xa1", "<", 123_456_789, 1_123_456_789),  # ns, little-endian
        (b"\xa1\xb2\x3c\x4d", ">", 123_456_789, 1_123_456_789),  # ns, big-endian
        (b"\xd4\xc3\xb2\xa1", "<", 123_456, 1_123_456_000),  # us, little-endian
        (b"\xa1\xb2\xc3\xd4", ">", 123_456, 1_123_456_000),  # us, big-endian
    ],
)
def test_timestamps_exact_for_each_magic(tmp_path, magic, endian, frac, expected):
    p = tmp_path / "f.pcap"
    p.write_bytes(handmade_pcap(magic, endian, 127, [(1, frac, RT_PLAIN + beacon(AP1, 102_400))]))
    (rec,) = list(read_pcap(p))
    assert rec.pcap_ts == expected
    assert rec.radiotap_len == 8
    (obs,) = list(extract_beacons([rec]))
    assert obs == BeaconObservation(AP1, 102_400, expected)


def test_truncated_record_stops_with_warning(tmp_path):
    p = tmp_path / "t.pcap"
    data = handmade_pcap(b"\xd4\xc3\xb2\xa1", "<", 127, [(1, 0, RT_PLAIN + beacon(AP1, 1))] * 2)
    p.write_bytes(data[:-5])
    reader = read_pcap(p)
    assert len(list(reader)) == 1
    assert reader.truncated == 1


def test_radiotap_tsft_after_extended_bitmap():
    # present words: 0x80000001 (TSFT + ext), 0x00000000; TSFT aligned to 8 at offset 16
    hdr = struct.pack("<BBHII4x", 0, 0, 24, 0x8000_0001, 0) + struct.pack("<Q", 987654321)
    rt = parse_radiotap(hdr + b"frame")
    assert rt.length == 24 and rt.mac_timestamp == 987654321


def test_extract_filters_and_counts():
    probe = encode_beacon(BeaconFrame(bssid=AP1, timestamp=5, frame_control=0x0050))
    pkts = [beacon(AP1, 1), beacon(AP2, 2), beacon(AP1, 3), beacon(AP2, 4), probe, beacon(AP1, 5)]
    from beaconsync.ingest import CaptureRecord

    records = [CaptureRecord(i, RT_PLAIN + p) for i, p in enumerate(pkts)]
    records.append(CaptureRecord(99, b"\x00\x00\xff\x00"))  # malformed radiotap
    records.append(CaptureRecord(100, RT_PLAIN + beacon(AP1, 7)[:30]))  # truncated beacon
    stats = IngestStats()
    obs = list(extract_beacons(records, AP1, stats))
    assert [o.tsf for o in obs] == [1, 3, 5]
    assert stats.as_dict() == {"records": 8, "beacons": 3, "non_beacon": 1, "malformed": 2, "filtered": 2}


def test_synthesized_pcap_round_trips(tmp_path):
    packets = [(10**9 + k * 102_400_123, beacon(AP1 if k % 3 else AP2, k * 102_400), k) for k in range(1, 200)]
    expected = [BeaconObservation(MacAddress(f[16:22]), k * 102_400, ts) for ts, f, k in packets]
    for ns in (True, False):
        for big in (True, False):
            p = tmp_path / f"s-{ns}-{big}.pcap"
            write_pcap(p, packets, nanosecond=ns, big_endian=big)
            got = list(extract_beacons(read_pcap(p)))
            if ns:
                assert got == expected
            else:
                assert got == [BeaconObservation(o.bssid, o.tsf, o.local_rx_time // 1000 * 1000) for o in expected]
            # and twice in a row: identical
            assert got == list(extract_beacons(read_pcap(p)))


def test_mac_timestamp_option(tmp_path):
    p = tmp_path / "m.pcap"
    write_pcap(p, [(5_000, beacon(AP1, 1), 777), (6_000, beacon(AP1, 2), None)], nanosecond=True)
    stats = IngestStats()
    obs = list(extract_beacons(read_pcap(p), use_mac_timestamp=True, stats=stats))
    assert [o.local_rx_time for o in obs] == [777_000]
    assert stats.malformed == 1


def test_pairing_aligns_by_tsf_and_measures_prediction_error():
    # station clock = reference + 1 s, plus a per-beacon wobble on the station side
    wobble = [0, 5, -3, 8, 0, 2]
    ref = [BeaconObservation(AP1, k * 102_400, k * 10**8) for k in range(1, 7)]
    sta = [BeaconObservation(AP1, k * 102_400, 10**9 + k * 10**8 + wobble[k - 1]) for k in range(1, 7)]
    del sta[2]  # station missed beacon 3
    res = pair_observations(ref, sta, AP1)
    assert [c.t_bf for c in res.corrections] == [102_400, 204_800, 409_600, 512_000, 614_400]
    assert res.counters["missed_tuples"] == 1
    # predicted - actual == wobble[k] - wobble[previous match]
    assert [e for _, e in res.errors] == [5 - 0, 8 - 5, 0 - 8, 2 - 0]
