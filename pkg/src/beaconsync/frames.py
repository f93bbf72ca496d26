"""802.11 beacon frames: the fixed header/body subset and TSF arithmetic.

Wire layout (all multi-octet integers little-endian)::

    offset  size  field
         0     2  frame_control
         2     2  duration
         4     6  destination
        10     6  source
        16     6  bssid
        22     2  seq_ctl
        24     8  timestamp        (TSF, microseconds since AP power-on)
        32     2  beacon_interval  (time units of 1024 us)
        34     2  capability_info
        36     -  information elements, kept opaque
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .clock import SimTime

TU_US = 1024
TSF_MOD = 2**64
DEFAULT_BEACON_INTERVAL_TU = 100

HEADER_LEN = 24
FIXED_BODY_LEN = 12
MIN_FRAME_LEN = HEADER_LEN + FIXED_BODY_LEN

# type 0 (management), subtype 8 (beacon), protocol version 0
BEACON_FRAME_CONTROL = 0x0080

_FIXED = struct.Struct("<HH6s6s6sHQHH")

# (field name, end offset) in wire order, used to name what a short buffer lacks
_FIELD_ENDS = (
    ("frame_control", 2),
    ("duration", 4),
    ("destination", 10),
    ("source", 16),
    ("bssid", 22),
    ("seq_ctl", 24),
    ("timestamp", 32),
    ("beacon_interval", 34),
    ("capability_info", 36),
)


class DecodeError(ValueError):
    """Raised when an octet sequence cannot be decoded."""


class MacAddress(bytes):
    """A 6-octet IEEE MAC address, printed as ``aa:bb:cc:dd:ee:ff``."""

    def __new__(cls, value: bytes | bytearray | str | MacAddress) -> MacAddress:
        if isinstance(value, str):
            parts = value.replace("-", ":").split(":")
            if len(parts) != 6:
                raise ValueError(f"not a MAC address: {value!r}")
            value = bytes(int(p, 16) for p in parts)
        if len(value) != 6:
            raise ValueError(f"MAC address must be 6 octets, got {len(value)}")
        return super().__new__(cls, value)

    def __str__(self) -> str:
        return ":".join(f"{b:02x}" for b in self)

    def __repr__(self) -> str:
        return f"MacAddress('{self}')"


BROADCAST = MacAddress(b"\xff" * 6)


def _check_uint(name: str, value: int, bits: int) -> None:
    if not 0 <= value < (1 << bits):
        raise ValueError(f"{name}={value} does not fit in {bits} unsigned bits")


@dataclass(frozen=True)
class BeaconFrame:
    bssid: MacAddress
    timestamp: int
    beacon_interval: int = DEFAULT_BEACON_INTERVAL_TU
    capability_info: int = 0
    frame_control: int = BEACON_FRAME_CONTROL
    duration: int = 0
    destination: MacAddress = BROADCAST
    source: MacAddress | None = None
    seq_ctl: int = 0
    trailing_ies: bytes = b""

    def __post_init__(self) -> None:
        object.__setattr__(self, "bssid", MacAddress(self.bssid))
        object.__setattr__(self, "destination", MacAddress(self.destination))
        # an AP transmits beacons from its own address unless told otherwise
        src = self.bssid if self.source is None else MacAddress(self.source)
        object.__setattr__(self, "source", src)
        object.__setattr__(self, "trailing_ies", bytes(self.trailing_ies))
        for name, bits in (
            ("frame_control", 16),
            ("duration", 16),
            ("seq_ctl", 16),
            ("timestamp", 64),
            ("beacon_interval", 16),
            ("capability_info", 16),
        ):
            _check_uint(name, getattr(self, name), bits)

    @property
    def beacon_interval_us(self) -> int:
        return self.beacon_interval * TU_US


@dataclass(frozen=True)
class BeaconObservation:
    """One station's sighting of one beacon: which AP, its TSF, and the local clock at arrival."""

    bssid: MacAddress
    tsf: int
    local_rx_time: SimTime

    @property
    def key(self) -> tuple[MacAddress, int]:
        return (self.bssid, self.tsf)


def is_beacon(frame_control: int) -> bool:
    ftype = (frame_control >> 2) & 0x3
    subtype = (frame_control >> 4) & 0xF
    return ftype == 0 and subtype == 8


def encode_beacon(frame: BeaconFrame) -> bytes:
    return (
        _FIXED.pack(
            frame.frame_control,
            frame.duration,
            frame.destination,
            frame.source,
            frame.bssid,
            frame.seq_ctl,
            frame.timestamp,
            frame.beacon_interval,
            frame.capability_info,
        )
        + frame.trailing_ies
    )


def decode_beacon(data: bytes) -> BeaconFrame:
    """Decode a beacon; a short buffer raises ``DecodeError("truncated: <field>")``."""
    data = bytes(data)
    if len(data) < MIN_FRAME_LEN:
        for name, end in _FIELD_ENDS:
            if len(data) < end:
                raise DecodeError(f"truncated: {name}")
    fc, dur, da, sa, bssid, seq, ts, bi, cap = _FIXED.unpack_from(data)
    return BeaconFrame(
        bssid=MacAddress(bssid),
        timestamp=ts,
        beacon_interval=bi,
        capability_info=cap,
        frame_control=fc,
        duration=dur,
        destination=MacAddress(da),
        source=MacAddress(sa),
        seq_ctl=seq,
        trailing_ies=data[MIN_FRAME_LEN:],
    )


def tsf_delta(earlier: int, later: int) -> int:
    """Microseconds from ``earlier`` to ``later`` on the wrapping 64-bit TSF counter."""
    return (later - earlier) % TSF_MOD
