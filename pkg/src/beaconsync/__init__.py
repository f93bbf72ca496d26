"""Beacon-anchored clock synchronization of 802.11 stations to a TSN time domain.

A reference station, synchronized to the TSN grandmaster, timestamps each AP
beacon and multicasts ``(beacon TSF, TSN time)`` tuples; stations that heard
the same beacon convert their local clock to TSN time from that pair.
"""

from .baseline import TwoWayExchange, ptp_offset_estimate
from .clock import ClockModel, GptpResidualModel, read_clock, reference_clock_read
from .frames import BeaconFrame, BeaconObservation, MacAddress, decode_beacon, encode_beacon, tsf_delta
from .protocol import (
    ReferenceState,
    StationSyncState,
    SyncEstimate,
    Unsynchronized,
    estimate_tsn_time,
    reference_on_beacon,
    station_on_beacon,
    station_on_tuple,
)
from .uadp import NetworkMessage, TimestampTuple, decode_network_message, encode_network_message
from .experiment.config import ScenarioConfig, load_scenario
from .experiment.runner import RunResult, run_scenario

__version__ = "0.1.0"
