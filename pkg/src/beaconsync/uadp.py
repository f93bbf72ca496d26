"""Simplified OPC UA PubSub (UADP-style) NetworkMessage carrying one timestamp tuple.

This is a fixed layout, deliberately *not* conformant with the full OPC UA
Part 14 encoding (no flag bytes, promoted fields or security header). All
integers are little-endian::

    NetworkMessage
      0   u8   version
      1   u16  publisher_id
      3   u32  sequence_number
      7   u8   dataset_message_count          (always 1)
      8   DataSetMessage
            u16  dataset_writer_id
            6s   bssid                        (AP whose beacon the tuple refers to)
            u16  field_count                  (always 2)
            field_count x { u16 field_id, 8 octets value }
     -4   u32  checksum                       (CRC-32 over every preceding octet)

Field 0 is ``t_bf`` (beacon TSF, unsigned microseconds), field 1 is the
reference TSN time for that beacon (signed nanoseconds). A tuple message is
42 octets.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

from .clock import SimTime
from .frames import DecodeError, MacAddress

UADP_VERSION = 1
FIELD_T_BF = 0
FIELD_T_TSN = 1
MAX_DATAGRAM = 512

_NM_HEADER = struct.Struct("<BHIB")
_DSM_HEADER = struct.Struct("<H6sH")
_FIELD = struct.Struct("<H8s")
_CHECKSUM = struct.Struct("<I")
_U64 = struct.Struct("<Q")
_I64 = struct.Struct("<q")


class IntegrityError(DecodeError):
    """Checksum mismatch: the message was corrupted in transit."""


class StructureError(ValueError):
    """A message that is well-formed octets but violates the tuple layout."""


@dataclass(frozen=True)
class TimestampTuple:
    t_bf: int
    t_tsn_at_bf: SimTime
    bssid: MacAddress

    @property
    def key(self) -> tuple[MacAddress, int]:
        return (self.bssid, self.t_bf)


@dataclass(frozen=True)
class DataSetMessage:
    dataset_writer_id: int
    bssid: MacAddress
    fields: tuple[tuple[int, bytes], ...]

    @property
    def field_count(self) -> int:
        return len(self.fields)


@dataclass(frozen=True)
class NetworkMessage:
    publisher_id: int
    sequence_number: int
    dataset_messages: tuple[DataSetMessage, ...]
    version: int = UADP_VERSION

    def timestamp_tuple(self) -> TimestampTuple:
        _check_single(self)
        dsm = self.dataset_messages[0]
        (t_bf,) = _U64.unpack(dsm.fields[0][1])
        (t_tsn,) = _I64.unpack(dsm.fields[1][1])
        return TimestampTuple(t_bf=t_bf, t_tsn_at_bf=t_tsn, bssid=MacAddress(dsm.bssid))


def tuple_message(
    tup: TimestampTuple, publisher_id: int, sequence_number: int, writer_id: int = 1
) -> NetworkMessage:
    dsm = DataSetMessage(
        dataset_writer_id=writer_id,
        bssid=MacAddress(tup.bssid),
        fields=(
            (FIELD_T_BF, _U64.pack(tup.t_bf)),
            (FIELD_T_TSN, _I64.pack(tup.t_tsn_at_bf)),
        ),
    )
    return NetworkMessage(publisher_id, sequence_number, (dsm,))


def _check_single(msg: NetworkMessage) -> None:
    if len(msg.dataset_messages) != 1:
        raise StructureError("exactly one DataSetMessage required")
    dsm = msg.dataset_messages[0]
    if dsm.field_count != 2:
        raise StructureError(f"field_count must be 2, got {dsm.field_count}")
    ids = tuple(fid for fid, _ in dsm.fields)
    if ids != (FIELD_T_BF, FIELD_T_TSN):
        raise StructureError(f"fields must be (t_bf, t_tsn) with ids (0, 1), got {ids}")
    for fid, value in dsm.fields:
        if len(value) != 8:
            raise StructureError(f"field {fid} value must be 8 octets, got {len(value)}")


def encode_network_message(msg: NetworkMessage) -> bytes:
    _check_single(msg)
    out = bytearray(
        _NM_HEADER.pack(msg.version, msg.publisher_id, msg.sequence_number, len(msg.dataset_messages))
    )
    for dsm in msg.dataset_messages:
        out += _DSM_HEADER.pack(dsm.dataset_writer_id, dsm.bssid, dsm.field_count)
        for fid, value in dsm.fields:
            out += _FIELD.pack(fid, value)
    out += _CHECKSUM.pack(zlib.crc32(out))
    assert len(out) < MAX_DATAGRAM
    return bytes(out)


def decode_network_message(data: bytes) -> NetworkMessage:
    data = bytes(data)
    if len(data) < _NM_HEADER.size:
        raise DecodeError("truncated: header")
    if len(data) < _NM_HEADER.size + _CHECKSUM.size:
        raise DecodeError("truncated: checksum")
    body, (checksum,) = data[:-4], _CHECKSUM.unpack(data[-4:])
    if zlib.crc32(body) != checksum:
        raise IntegrityError("checksum mismatch")

    version, publisher_id, seq, count = _NM_HEADER.unpack_from(body)
    if count != 1:
        raise StructureError("exactly one DataSetMessage required")
    pos = _NM_HEADER.size
    if len(body) < pos + _DSM_HEADER.size:
        raise DecodeError("truncated: dataset_message header")
    writer_id, bssid, field_count = _DSM_HEADER.unpack_from(body, pos)
    pos += _DSM_HEADER.size
    fields = []
    for i in range(field_count):
        if len(body) < pos + _FIELD.size:
            raise DecodeError(f"truncated: field {i}")
        fields.append(_FIELD.unpack_from(body, pos))
        pos += _FIELD.size
    if pos != len(body):
        raise StructureError(f"{len(body) - pos} trailing octets after DataSetMessage")
    msg = NetworkMessage(
        publisher_id=publisher_id,
        sequence_number=seq,
        dataset_messages=(DataSetMessage(writer_id, MacAddress(bssid), tuple(fields)),),
        version=version,
    )
    _check_single(msg)
    return msg


class TupleSubscriber:
    """Receiving end of the multicast group.

    Decodes datagrams, drops corrupted ones and duplicates, and counts
    out-of-order sequence numbers per publisher. Reordered messages are still
    delivered; the station decides whether the tuple is stale.
    """

    def __init__(self) -> None:
        self.last_seq: dict[int, int] = {}
        self.received = 0
        self.integrity_errors = 0
        self.decode_errors = 0
        self.duplicates = 0
        self.reordered = 0

    def receive(self, data: bytes) -> TimestampTuple | None:
        try:
            msg = decode_network_message(data)
        except IntegrityError:
            self.integrity_errors += 1
            return None
        except (DecodeError, StructureError):
            self.decode_errors += 1
            return None
        last = self.last_seq.get(msg.publisher_id)
        if last is not None:
            if msg.sequence_number == last:
                self.duplicates += 1
                return None
            if msg.sequence_number < last:
                self.reordered += 1
        if last is None or msg.sequence_number > last:
            self.last_seq[msg.publisher_id] = msg.sequence_number
        self.received += 1
        return msg.timestamp_tuple()

    def counters(self) -> dict[str, int]:
        return {
            "tuples_received": self.received,
            "tuple_integrity_errors": self.integrity_errors,
            "tuple_decode_errors": self.decode_errors,
            "tuple_duplicates": self.duplicates,
            "tuple_reordered": self.reordered,
        }
