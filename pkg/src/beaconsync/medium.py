"""Deterministic discrete-event model of the shared wireless medium.

Events are ordered by ``(due, insertion sequence)``, so simultaneous events
fire in the order they were scheduled and a run is a pure function of its
configuration and seed. Every link (transmitter, receiver) owns its own
random stream; removing one AP or station from a scenario leaves every other
link's draws untouched.

Per-receiver delay = propagation_delay + jitter [+ contention burst]. Jitter
is a non-negative excess delay whose standard deviation is ``rx_jitter_std``:

* ``gaussian_truncated``: a normal draw truncated at +/-5 sigma, shifted up by
  5 sigma so the delay never undercuts the propagation delay.
* ``uniform``: uniform on ``[0, sqrt(12) * std]``.
"""

from __future__ import annotations

import heapq
import math
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass, field

import numpy as np

from .clock import PPB, Duration, SimTime, check_int64
from .frames import DEFAULT_BEACON_INTERVAL_TU, TU_US, MacAddress

JITTER_DISTRIBUTIONS = ("gaussian_truncated", "uniform")
TRUNCATE_SIGMAS = 5


class CausalityError(RuntimeError):
    """An event was scheduled in the past."""


@dataclass(frozen=True, slots=True)
class Event:
    due: SimTime
    kind: str
    src: str
    dst: str
    payload: object = None
    detail: str = ""

    def trace_line(self) -> str:
        return f"{self.due},{self.kind},{self.src},{self.dst},{self.detail}"


class EventQueue:
    def __init__(self) -> None:
        self._heap: list[tuple[int, int, Event]] = []
        self._seq = 0
        self.now: SimTime = 0

    def push(self, event: Event) -> None:
        if event.due < self.now:
            raise CausalityError(f"event {event.kind} due {event.due} < now {self.now}")
        check_int64(event.due, "event due time")
        heapq.heappush(self._heap, (event.due, self._seq, event))
        self._seq += 1

    def peek_due(self) -> SimTime | None:
        return self._heap[0][0] if self._heap else None

    def pop(self) -> Event:
        due, _, event = heapq.heappop(self._heap)
        self.now = due
        return event

    def pending(self) -> list[Event]:
        """Events not yet executed, in firing order."""
        return [e for _, _, e in sorted(self._heap)]

    def __len__(self) -> int:
        return len(self._heap)


class Simulation:
    """Single-threaded event loop dispatching on ``Event.kind``."""

    def __init__(self, record_trace: bool = True) -> None:
        self.queue = EventQueue()
        self.handlers: dict[str, Callable[[Event], None]] = {}
        self.trace: list[str] | None = [] if record_trace else None
        self.executed = 0

    @property
    def now(self) -> SimTime:
        return self.queue.now

    def on(self, kind: str, handler: Callable[[Event], None]) -> None:
        self.handlers[kind] = handler

    def schedule(self, event: Event) -> None:
        self.queue.push(event)

    def run(self, until: SimTime) -> None:
        """Execute every event with ``due <= until``."""
        queue, trace, handlers = self.queue, self.trace, self.handlers
        while len(queue) and queue.peek_due() <= until:
            event = queue.pop()
            if trace is not None:
                trace.append(event.trace_line())
            handlers[event.kind](event)
            self.executed += 1


@dataclass(frozen=True)
class Contention:
    """With probability ``burst_prob`` a frame waits an extra uniform ``[extra_min, extra_max]``."""

    burst_prob: float
    extra_min: Duration
    extra_max: Duration

    def __post_init__(self) -> None:
        if not 0.0 <= self.burst_prob <= 1.0:
            raise ValueError("burst_prob must be in [0, 1]")
        if not 0 <= self.extra_min <= self.extra_max:
            raise ValueError("need 0 <= extra_min <= extra_max")


@dataclass(frozen=True)
class LinkModel:
    propagation_delay: Duration = 0
    rx_jitter_std: Duration = 0
    rx_jitter_dist: str = "gaussian_truncated"
    loss_prob: float = 0.0
    contention: Contention | None = None

    def __post_init__(self) -> None:
        if self.propagation_delay < 0:
            raise ValueError("propagation_delay must be >= 0")
        if self.rx_jitter_std < 0:
            raise ValueError("rx_jitter_std must be >= 0")
        if self.rx_jitter_dist not in JITTER_DISTRIBUTIONS:
            raise ValueError(f"rx_jitter_dist must be one of {JITTER_DISTRIBUTIONS}")
        if not 0.0 <= self.loss_prob <= 1.0:
            raise ValueError("loss_prob must be in [0, 1]")

    def sample_jitter(self, rng: np.random.Generator) -> Duration:
        std = self.rx_jitter_std
        if std == 0:
            return 0
        if self.rx_jitter_dist == "uniform":
            return int(round(rng.uniform(0.0, math.sqrt(12.0) * std)))
        z = rng.normal()
        while abs(z) > TRUNCATE_SIGMAS:
            z = rng.normal()
        return int(round((z + TRUNCATE_SIGMAS) * std))

    def sample_delay(self, rng: np.random.Generator) -> Duration | None:
        """One frame's delay over this link, or ``None`` if the frame is lost."""
        if self.loss_prob and rng.random() < self.loss_prob:
            return None
        delay = self.propagation_delay + self.sample_jitter(rng)
        c = self.contention
        if c is not None and c.burst_prob and rng.random() < c.burst_prob:
            delay += int(rng.integers(c.extra_min, c.extra_max, endpoint=True))
        return delay


@dataclass
class Receiver:
    """One end of a link: its name, channel model, private RNG and delivery counters."""

    name: str
    link: LinkModel
    rng: np.random.Generator
    sent: int = 0
    lost: int = 0
    received: int = 0


@dataclass(frozen=True)
class ApModel:
    bssid: MacAddress
    beacon_interval_tu: int = DEFAULT_BEACON_INTERVAL_TU
    tsf_origin: SimTime = 0
    tsf_drift_ppb: int = 0
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "bssid", MacAddress(self.bssid))
        if not self.name:
            object.__setattr__(self, "name", str(self.bssid))
        if not 0 < self.beacon_interval_tu < 2**16:
            raise ValueError("beacon_interval_tu must be in [1, 65535]")
        if self.tsf_drift_ppb <= -PPB:
            raise ValueError("tsf_drift_ppb must exceed -1e9")

    @property
    def interval_us(self) -> int:
        return self.beacon_interval_tu * TU_US

    def beacon_time(self, k: int) -> SimTime:
        """True time of beacon ``k``: the first nanosecond at which AP-local elapsed time reaches ``k`` intervals."""
        local_ns = k * self.interval_us * 1000
        num = local_ns * PPB
        den = PPB + self.tsf_drift_ppb
        return self.tsf_origin + -(-num // den)

    def tsf_at(self, k: int) -> int:
        return k * self.interval_us


def iter_beacons(ap: ApModel, horizon: SimTime, start_k: int = 1) -> Iterator[tuple[int, SimTime, int]]:
    """Yield ``(k, true_time, tsf)`` for beacons with true time ``<= horizon``."""
    k = start_k
    while True:
        t = ap.beacon_time(k)
        if t > horizon:
            return
        yield k, t, ap.tsf_at(k)
        k += 1


def schedule_beacons(ap: ApModel, horizon: SimTime) -> list[Event]:
    if horizon <= ap.tsf_origin:
        raise ValueError("horizon must be after tsf_origin")
    return [
        Event(t, "beacon_tx", ap.name, "*", payload=tsf, detail=f"tsf={tsf}")
        for _, t, tsf in iter_beacons(ap, horizon)
    ]


def _deliver(kind: str, payload: object, src: str, receivers: Sequence[Receiver], now: SimTime, detail: str) -> list[Event]:
    events = []
    for rx in receivers:
        rx.sent += 1
        delay = rx.link.sample_delay(rx.rng)
        if delay is None:
            rx.lost += 1
            continue
        events.append(Event(now + delay, kind, src, rx.name, payload=payload, detail=detail))
    return events


def deliver_broadcast(
    frame: bytes, receivers: Sequence[Receiver], now: SimTime, src: str = "ap", detail: str = ""
) -> list[Event]:
    """One transmission, an independent arrival (or loss) per receiver."""
    return _deliver("beacon_rx", frame, src, receivers, now, detail)


@dataclass
class MulticastGroup:
    publisher: str
    members: dict[str, Receiver] = field(default_factory=dict)

    def join(self, receiver: Receiver) -> None:
        self.members[receiver.name] = receiver

    def leave(self, name: str) -> None:
        self.members.pop(name, None)


def deliver_multicast(msg: bytes, group: MulticastGroup, now: SimTime, detail: str = "") -> list[Event]:
    return _deliver("tuple_rx", msg, group.publisher, list(group.members.values()), now, detail)
