"""Two-way (IEEE 1588 style) offset estimation run over the wireless link.

The master (the reference station) sends Sync at ``t1``; the slave
timestamps its arrival ``t2`` and answers with Delay_Req at ``t3``; the
master timestamps that at ``t4``. Assuming a symmetric path::

    offset = ((t2 - t1) - (t4 - t3)) / 2

If the downlink takes ``d_ms`` and the uplink ``d_sm``, the estimate is off
by exactly ``(d_ms - d_sm) / 2``. Over a contended wireless channel with
software timestamps this asymmetry is large and unpredictable.

Estimates are returned as :class:`fractions.Fraction` so odd nanosecond
asymmetries keep their half nanosecond.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .clock import S, Duration, SimTime


class IncompleteExchange(ValueError):
    """One of the four timestamps is missing (a message was lost)."""


@dataclass(frozen=True)
class TwoWayExchange:
    t1: SimTime | None = None
    t2: SimTime | None = None
    t3: SimTime | None = None
    t4: SimTime | None = None
    sync_interval: Duration = 1 * S

    @property
    def complete(self) -> bool:
        return None not in (self.t1, self.t2, self.t3, self.t4)


def ptp_offset_estimate(x: TwoWayExchange) -> Fraction:
    """Slave-minus-master clock offset from one exchange, in nanoseconds."""
    if not x.complete:
        missing = [n for n in ("t1", "t2", "t3", "t4") if getattr(x, n) is None]
        raise IncompleteExchange(f"incomplete exchange, missing {', '.join(missing)}")
    return Fraction((x.t2 - x.t1) - (x.t4 - x.t3), 2)


def mean_path_delay(x: TwoWayExchange) -> Fraction:
    if not x.complete:
        raise IncompleteExchange("incomplete exchange")
    return Fraction((x.t2 - x.t1) + (x.t4 - x.t3), 2)


@dataclass(frozen=True)
class ExchangeRecord:
    """A completed exchange together with the delays the simulator actually injected."""

    exchange: TwoWayExchange
    downlink_delay: Duration
    uplink_delay: Duration
    completed_at: SimTime

    @property
    def asymmetry(self) -> Duration:
        return self.downlink_delay - self.uplink_delay

    @property
    def estimate(self) -> Fraction:
        return ptp_offset_estimate(self.exchange)


@dataclass
class PtpSlave:
    """Holds the most recent offset; no servo, every exchange replaces the last."""

    offset: Fraction | None = None
    exchanges: int = 0
    incomplete: int = 0

    def update(self, x: TwoWayExchange) -> Fraction | None:
        try:
            self.offset = ptp_offset_estimate(x)
        except IncompleteExchange:
            self.incomplete += 1
            return None
        self.exchanges += 1
        return self.offset

    def corrected(self, local: SimTime) -> SimTime:
        if self.offset is None:
            raise RuntimeError("no completed exchange yet")
        return local - round(self.offset)
