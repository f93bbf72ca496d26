import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beaconsync.frames import (
    BEACON_FRAME_CONTROL,
    MIN_FRAME_LEN,
    BeaconFrame,
    DecodeError,
    MacAddress,
    decode_beacon,
    encode_beacon,
    is_beacon,
    tsf_delta,
)

ZERO_MAC = MacAddress(bytes(6))

macs = st.binary(min_size=6, max_size=6).map(MacAddress)
u16 = st.integers(0, 0xFFFF)
frames = st.builds(
    BeaconFrame,
    bssid=macs,
    timestamp=st.integers(0, 2**64 - 1),
    beacon_interval=u16,
    capability_info=u16,
    frame_control=u16,
    duration=u16,
    destination=macs,
    source=macs,
    seq_ctl=u16,
    trailing_ies=st.binary(max_size=64),
)


def zero_frame(**kw):
    base = dict(
        bssid=ZERO_MAC, timestamp=0, beacon_interval=0, frame_control=0,
        destination=ZERO_MAC, source=ZERO_MAC,
    )
    base.update(kw)
    return BeaconFrame(**base)


def test_all_zero_frame_is_36_zero_octets():
    assert encode_beacon(zero_frame()) == bytes(36)


def test_timestamp_little_endian_at_body_start():
    data = encode_beacon(zero_frame(timestamp=0x0102030405060708))
    assert data[24:32] == bytes.fromhex("0807060504030201")


def test_default_beacon_interval_octets():
    data = encode_beacon(zero_frame(beacon_interval=100))
    assert data[24 + 8 : 24 + 10] == b"\x64\x00"


def test_decode_beacon_interval_100_tu_is_102_4_ms():
    data = bytearray(36)
    data[32:34] = b"\x64\x00"
    f = decode_beacon(bytes(data))
    assert f.beacon_interval == 100
    assert f.beacon_interval_us == 102_400


def test_layout_of_header_fields():
    f = BeaconFrame(
        bssid=MacAddress("02:00:00:00:00:01"),
        timestamp=1,
        destination=MacAddress("ff:ff:ff:ff:ff:ff"),
        seq_ctl=0x1230,
        trailing_ies=b"\x00\x04test",
    )
    data = encode_beacon(f)
    assert len(data) == 24 + 12 + 6
    assert data[0:2] == b"\x80\x00"
    assert data[4:10] == b"\xff" * 6
    assert data[10:16] == bytes.fromhex("020000000001")  # source defaults to bssid
    assert data[16:22] == bytes.fromhex("020000000001")
    assert data[22:24] == b"\x30\x12"
    assert data[36:] == b"\x00\x04test"


@settings(max_examples=1_000)
@given(frames)
def test_round_trip(frame):
    assert decode_beacon(encode_beacon(frame)) == frame


@pytest.mark.parametrize(
    "length,field",
    [(0, "frame_control"), (1, "frame_control"), (3, "duration"), (21, "bssid"),
     (24, "timestamp"), (31, "timestamp"), (33, "beacon_interval"), (35, "capability_info")],
)
def test_truncated_input_names_missing_field(length, field):
    with pytest.raises(DecodeError, match=f"^truncated: {field}$"):
        decode_beacon(bytes(length))


def test_exactly_36_octets_decodes():
    assert decode_beacon(bytes(MIN_FRAME_LEN)).trailing_ies == b""


def test_field_range_checked():
    with pytest.raises(ValueError):
        BeaconFrame(bssid=ZERO_MAC, timestamp=2**64)
    with pytest.raises(ValueError):
        BeaconFrame(bssid=ZERO_MAC, timestamp=0, beacon_interval=70_000)


def test_mac_address_parsing():
    m = MacAddress("02-AA-bb-00-00-01")
    assert str(m) == "02:aa:bb:00:00:01"
    assert MacAddress(bytes(m)) == m
    with pytest.raises(ValueError):
        MacAddress("02:00:00")
    with pytest.raises(ValueError):
        MacAddress(b"\x00" * 5)


def test_frame_control_type_subtype():
    assert is_beacon(BEACON_FRAME_CONTROL)
    assert not is_beacon(0x0050)  # probe response
    assert not is_beacon(0x0088)  # data, subtype 8


@pytest.mark.parametrize(
    "earlier,later,expected",
    [(5, 10, 5), (2**64 - 1, 4, 5), (0, 102_400, 102_400), (7, 7, 0)],
)
def test_tsf_delta(earlier, later, expected):
    assert tsf_delta(earlier, later) == expected


@given(st.integers(0, 2**64 - 1), st.integers(0, 2**64 - 1))
def test_tsf_delta_is_modular_inverse(a, b):
    d = tsf_delta(a, b)
    assert 0 <= d < 2**64
    assert (a + d) % 2**64 == b
