"""Offline ingestion of monitor-mode beacon captures (classic pcap + radiotap).

Only classic libpcap files are read (pcapng is not supported), in either
byte order and with either microsecond or nanosecond timestamps. The link
type must be 127 (802.11 with radiotap). Radiotap headers are walked only
far enough to find the 802.11 frame and, if present, the TSFT (MAC
timestamp) field.

Caveat for real captures: where in the driver stack the capture timestamp is
taken is unknown, so offsets derived from them inherit that uncertainty.
"""

from __future__ import annotations

import heapq
import logging
import os
import struct
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from functools import cached_property

from .clock import SimTime
from .frames import BeaconObservation, DecodeError, MacAddress, decode_beacon, is_beacon
from .protocol import (
    Correction,
    ReferenceState,
    StationSyncState,
    apply_correction,
    reference_on_beacon,
    station_on_beacon,
    station_on_tuple,
)

log = logging.getLogger(__name__)

LINKTYPE_IEEE802_11_RADIOTAP = 127

_MAGICS = {
    b"\xd4\xc3\xb2\xa1": ("<", False),
    b"\xa1\xb2\xc3\xd4": (">", False),
    b"\x4d\x3c\xb2\xa1": ("<", True),
    b"\xa1\xb2\x3c\x4d": (">", True),
}

RADIOTAP_TSFT = 1 << 0
RADIOTAP_EXT = 1 << 31


class PcapFormatError(ValueError):
    pass


class RadiotapError(ValueError):
    pass


@dataclass(frozen=True)
class Radiotap:
    length: int
    mac_timestamp: int | None


def parse_radiotap(data: bytes) -> Radiotap:
    if len(data) < 8:
        raise RadiotapError("shorter than a radiotap header")
    version, _pad, length, present = struct.unpack_from("<BBHI", data)
    if version != 0:
        raise RadiotapError(f"unsupported radiotap version {version}")
    if length < 8 or length > len(data):
        raise RadiotapError(f"radiotap length {length} outside packet of {len(data)} octets")
    pos = 4
    word = present
    while word & RADIOTAP_EXT:
        pos += 4
        if pos + 4 > length:
            raise RadiotapError("present bitmap runs past header")
        (word,) = struct.unpack_from("<I", data, pos)
    mac_ts = None
    if present & RADIOTAP_TSFT:
        off = (pos + 4 + 7) & ~7
        if off + 8 > length:
            raise RadiotapError("TSFT field runs past header")
        (mac_ts,) = struct.unpack_from("<Q", data, off)
    return Radiotap(length, mac_ts)


@dataclass
class CaptureRecord:
    pcap_ts: SimTime
    data: bytes

    @cached_property
    def radiotap(self) -> Radiotap:
        return parse_radiotap(self.data)

    @property
    def radiotap_len(self) -> int:
        return self.radiotap.length

    @property
    def mac_timestamp(self) -> int | None:
        return self.radiotap.mac_timestamp

    @property
    def frame_bytes(self) -> bytes:
        return self.data[self.radiotap.length :]


class PcapReader:
    """Iterate the records of a classic pcap file in file order."""

    def __init__(self, path: str | os.PathLike) -> None:
        self.path = os.fspath(path)
        self.truncated = 0
        with open(self.path, "rb") as f:
            header = f.read(24)
        if len(header) < 24:
            raise PcapFormatError("file shorter than the pcap global header")
        try:
            self.endian, self.nanosecond = _MAGICS[header[:4]]
        except KeyError:
            raise PcapFormatError(f"bad pcap magic {header[:4].hex()}") from None
        _maj, _min, _zone, _sigfigs, self.snaplen, self.linktype = struct.unpack(
            self.endian + "HHiIII", header[4:]
        )
        if self.linktype != LINKTYPE_IEEE802_11_RADIOTAP:
            raise PcapFormatError(
                f"expected radiotap link type ({LINKTYPE_IEEE802_11_RADIOTAP}), got {self.linktype}"
            )

    def __iter__(self) -> Iterator[CaptureRecord]:
        rec_hdr = struct.Struct(self.endian + "IIII")
        scale = 1 if self.nanosecond else 1000
        with open(self.path, "rb") as f:
            f.seek(24)
            while True:
                hdr = f.read(rec_hdr.size)
                if not hdr:
                    return
                if len(hdr) < rec_hdr.size:
                    self._truncated()
                    return
                sec, frac, incl_len, _orig = rec_hdr.unpack(hdr)
                data = f.read(incl_len)
                if len(data) < incl_len:
                    self._truncated()
                    return
                yield CaptureRecord(pcap_ts=sec * 1_000_000_000 + frac * scale, data=data)

    def _truncated(self) -> None:
        self.truncated += 1
        log.warning("%s: truncated final record, stopping", self.path)


def read_pcap(path: str | os.PathLike) -> PcapReader:
    return PcapReader(path)


def write_pcap(
    path: str | os.PathLike,
    packets: Iterable[tuple[SimTime, bytes, int | None]],
    nanosecond: bool = False,
    big_endian: bool = False,
) -> None:
    """Write ``(capture_ts_ns, frame_bytes, mac_timestamp_or_None)`` packets behind radiotap headers.

    Microsecond files truncate the capture time to whole microseconds.
    """
    e = ">" if big_endian else "<"
    magic = 0xA1B23C4D if nanosecond else 0xA1B2C3D4
    with open(path, "wb") as f:
        f.write(struct.pack(e + "IHHiIII", magic, 2, 4, 0, 0, 65535, LINKTYPE_IEEE802_11_RADIOTAP))
        for ts, frame, mac_ts in packets:
            if mac_ts is None:
                rt = struct.pack("<BBHI", 0, 0, 8, 0)
            else:
                rt = struct.pack("<BBHIQ", 0, 0, 16, RADIOTAP_TSFT, mac_ts)
            pkt = rt + frame
            sec, rem = divmod(ts, 1_000_000_000)
            frac = rem if nanosecond else rem // 1000
            f.write(struct.pack(e + "IIII", sec, frac, len(pkt), len(pkt)))
            f.write(pkt)


@dataclass
class IngestStats:
    records: int = 0
    beacons: int = 0
    non_beacon: int = 0
    malformed: int = 0
    filtered: int = 0

    def as_dict(self) -> dict[str, int]:
        return dict(vars(self))


def extract_beacons(
    records: Iterable[CaptureRecord],
    bssid_filter: MacAddress | None = None,
    stats: IngestStats | None = None,
    use_mac_timestamp: bool = False,
) -> Iterator[BeaconObservation]:
    """Beacon observations stamped with the capture time (or the radiotap MAC time, in ns)."""
    stats = stats if stats is not None else IngestStats()
    for rec in records:
        stats.records += 1
        try:
            frame = rec.frame_bytes
            if len(frame) < 2:
                raise DecodeError("truncated: frame_control")
            if not is_beacon(struct.unpack_from("<H", frame)[0]):
                stats.non_beacon += 1
                continue
            beacon = decode_beacon(frame)
        except (RadiotapError, DecodeError):
            stats.malformed += 1
            continue
        if bssid_filter is not None and beacon.bssid != bssid_filter:
            stats.filtered += 1
            continue
        if use_mac_timestamp:
            if rec.mac_timestamp is None:
                stats.malformed += 1
                continue
            rx = rec.mac_timestamp * 1000
        else:
            rx = rec.pcap_ts
        stats.beacons += 1
        yield BeaconObservation(bssid=beacon.bssid, tsf=beacon.timestamp, local_rx_time=rx)


@dataclass
class PairingResult:
    """Matched beacon pairs between a reference and a station capture.

    ``errors`` holds, for each correction after the first, what the station
    would have estimated for that beacon using the previous correction, minus
    the reference time actually recorded for it, as ``(reference_time, error_ns)``.
    """

    corrections: list[Correction] = field(default_factory=list)
    errors: list[tuple[SimTime, int]] = field(default_factory=list)
    counters: dict[str, int] = field(default_factory=dict)


def pair_observations(
    reference: Iterable[BeaconObservation],
    station: Iterable[BeaconObservation],
    bssid: MacAddress,
) -> PairingResult:
    """Align two observation streams by ``(bssid, tsf)`` through the protocol state machines.

    Streams are merged in TSF order with the station's sighting of a beacon
    handled before the reference tuple for it.
    """
    bssid = MacAddress(bssid)
    ref_state = ReferenceState(bssid_filter=bssid)
    sta_state = StationSyncState(bssid_filter=bssid)
    result = PairingResult()
    tagged_sta = ((o.tsf, 0, i, o) for i, o in enumerate(station) if o.bssid == bssid)
    tagged_ref = ((o.tsf, 1, i, o) for i, o in enumerate(reference))
    prev: Correction | None = None
    for _tsf, source, _i, obs in heapq.merge(tagged_sta, tagged_ref, key=lambda x: x[:3]):
        if source == 0:
            station_on_beacon(sta_state, obs)
            continue
        msg = reference_on_beacon(ref_state, obs, obs.local_rx_time)
        if msg is None:
            continue
        corr = station_on_tuple(sta_state, msg.timestamp_tuple())
        if corr is None:
            continue
        if prev is not None:
            predicted = apply_correction(prev.t_tsn_at_bf, prev.t_station_at_bf, corr.t_station_at_bf)
            result.errors.append((corr.t_tsn_at_bf, predicted - corr.t_tsn_at_bf))
        result.corrections.append(corr)
        prev = corr
    result.counters = {**ref_state.counters(), **sta_state.counters(), "matched": len(result.corrections)}
    return result
