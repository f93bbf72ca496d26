"""Build a simulated topology from a scenario and run it.

Topology: one or more APs broadcast beacons; a reference station (gPTP-synced
to the grandmaster, whose time *is* simulation time) and the stations hear
them over their own links. The reference multicasts one tuple message per
accepted beacon. Every ``eval_tick`` each station reads its clock once and an
offset sample ``estimate - true time`` is recorded per active method.

With ``method`` ``ptp_baseline`` or ``both``, every station additionally runs
a two-way exchange with the reference station every ``baseline.sync_interval``
over the PubSub channel (or the explicit baseline up/down links), with
software timestamps truncated to ``baseline.timestamp_granularity``.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field

from ..baseline import ExchangeRecord, PtpSlave, TwoWayExchange
from ..clock import ClockModel, GptpResidualModel, SimTime, reference_clock_read, stream_key, stream_rng
from ..frames import BeaconFrame, BeaconObservation, MacAddress, decode_beacon, encode_beacon
from ..ingest import IngestStats, extract_beacons, pair_observations, read_pcap
from ..medium import (
    ApModel,
    Contention,
    Event,
    LinkModel,
    MulticastGroup,
    Receiver,
    Simulation,
    deliver_broadcast,
    deliver_multicast,
    iter_beacons,
)
from ..protocol import (
    ReferenceState,
    StationSyncState,
    estimate_tsn_time,
    reference_on_beacon,
    station_on_beacon,
    station_on_tuple,
)
from ..uadp import TupleSubscriber, encode_network_message
from .config import LinkConfig, ScenarioConfig
from .stats import OffsetSample

REFERENCE = "reference"
BEACON, BASELINE = "beacon_sync", "ptp_baseline"


@dataclass
class RunResult:
    config: ScenarioConfig
    samples: list[OffsetSample]
    counters: dict[str, int]
    trace: list[str] | None
    exchanges: dict[str, list[ExchangeRecord]] = field(default_factory=dict)
    # per station: (true arrival time of the matched beacon, error at that instant)
    correction_errors: dict[str, list[tuple[SimTime, int]]] = field(default_factory=dict)
    stations: dict[str, StationSyncState] = field(default_factory=dict)


def link_model(cfg: LinkConfig) -> LinkModel:
    c = cfg.contention
    return LinkModel(
        propagation_delay=cfg.propagation_delay,
        rx_jitter_std=cfg.rx_jitter_std,
        rx_jitter_dist=cfg.rx_jitter_dist,
        loss_prob=cfg.loss_prob,
        contention=None if c is None else Contention(c.burst_prob, c.extra_delay[0], c.extra_delay[1]),
    )


def station_clock(cfg: ScenarioConfig, index: int) -> ClockModel:
    st = cfg.stations[index]
    drift = st.clock.drift_ppb
    if drift is None:
        r = cfg.station_drift_range_ppb
        drift = int(stream_rng(cfg.seed, "drift", st.id).integers(-r, r, endpoint=True))
    return ClockModel(
        offset_at_epoch=st.clock.offset,
        drift_ppb=drift,
        granularity=st.clock.granularity,
        read_noise_std=st.clock.read_noise_std,
        rng_stream_id=stream_key(st.id),
        seed=cfg.seed,
    )


def _floor(value: int, granularity: int) -> int:
    return value - value % granularity


class _Run:
    def __init__(self, cfg: ScenarioConfig) -> None:
        self.cfg = cfg
        self.horizon = cfg.duration
        self.sim = Simulation(record_trace=cfg.record_trace)
        self.beacon_on = cfg.method in (BEACON, "both")
        self.ptp_on = cfg.method in (BASELINE, "both")
        self.samples: list[OffsetSample] = []
        self.counters: dict[str, int] = {}

        ref = cfg.reference
        self.gptp = GptpResidualModel(
            bound=ref.gptp.bound,
            sync_interval=ref.gptp.sync_interval,
            distribution=ref.gptp.distribution,
            seed=cfg.seed,
        )
        self.ref_gran = ref.timestamp_granularity
        self.ref_state = ReferenceState(
            bssid_filter=None if ref.bssid_filter is None else MacAddress(ref.bssid_filter),
            publisher_id=cfg.pubsub.publisher_id,
        )

        self.aps = [
            ApModel(
                bssid=MacAddress(a.bssid),
                beacon_interval_tu=a.beacon_interval_tu,
                tsf_origin=a.tsf_origin,
                tsf_drift_ppb=a.tsf_drift_ppb,
                name=a.name or a.bssid,
            )
            for a in cfg.aps
        ]
        self.names = [s.id for s in cfg.stations]
        self.clocks = {s.id: station_clock(cfg, i) for i, s in enumerate(cfg.stations)}
        self.states = {
            s.id: StationSyncState(
                bssid_filter=MacAddress(s.bssid_filter),
                capacity=s.observation_capacity,
                beacon_interval_tu=self._interval_for(s.bssid_filter),
                drift_compensation=s.drift_compensation,
            )
            for s in cfg.stations
        }
        self.subscribers = {n: TupleSubscriber() for n in self.names}
        self.ignored = {n: 0 for n in self.names}
        self.unsynced_ticks = {n: 0 for n in self.names}
        self.rx_true: dict[str, OrderedDict] = {n: OrderedDict() for n in self.names}
        self.correction_errors: dict[str, list[tuple[int, int]]] = {n: [] for n in self.names}

        # per-AP beacon receivers, each link with its own stream
        self.beacon_rx: dict[str, list[Receiver]] = {}
        for ap in self.aps:
            rxs = [Receiver(REFERENCE, link_model(ref.beacon_link), stream_rng(cfg.seed, "link", ap.name, REFERENCE))]
            rxs += [
                Receiver(s.id, link_model(s.beacon_link), stream_rng(cfg.seed, "link", ap.name, s.id))
                for s in cfg.stations
            ]
            self.beacon_rx[ap.name] = rxs
        pub_link = link_model(cfg.pubsub.link)
        self.group = MulticastGroup(REFERENCE)
        for n in self.names:
            self.group.join(Receiver(n, pub_link, stream_rng(cfg.seed, "link", REFERENCE, n)))

        b = cfg.baseline
        down = link_model(b.downlink or cfg.pubsub.link)
        up = link_model(b.uplink or cfg.pubsub.link)
        stack = LinkModel(rx_jitter_std=b.stack_jitter_std, rx_jitter_dist="uniform")
        self.ptp_gran = b.timestamp_granularity
        self.ptp_down = {n: (down, stream_rng(cfg.seed, "ptp-down", n)) for n in self.names}
        self.ptp_up = {n: (up, stream_rng(cfg.seed, "ptp-up", n)) for n in self.names}
        self.ptp_stack = stack
        self.slaves = {n: PtpSlave() for n in self.names}
        self.exchanges: dict[str, list[ExchangeRecord]] = {n: [] for n in self.names}

        sim = self.sim
        sim.on("beacon_tx", self.on_beacon_tx)
        sim.on("beacon_rx", self.on_beacon_rx)
        sim.on("tuple_rx", self.on_tuple_rx)
        sim.on("tick", self.on_tick)
        sim.on("ptp_sync_tx", self.on_sync_tx)
        sim.on("ptp_sync_rx", self.on_sync_rx)
        sim.on("ptp_req_tx", self.on_req_tx)
        sim.on("ptp_req_rx", self.on_req_rx)
        self._beacon_iters = {}
        self._links: dict[tuple[str, str], Receiver] = {
            (ap_name, rx.name): rx for ap_name, rxs in self.beacon_rx.items() for rx in rxs
        }
        self._links.update({(REFERENCE, rx.name): rx for rx in self.group.members.values()})

    def _interval_for(self, bssid: str) -> int:
        for a in self.cfg.aps:
            if a.bssid == bssid:
                return a.beacon_interval_tu
        return 100

    # -- reference clocks ---------------------------------------------------

    def reference_time(self, t: SimTime) -> SimTime:
        return _floor(reference_clock_read(t, self.gptp), self.ref_gran)

    def master_timestamp(self, t: SimTime) -> SimTime:
        return _floor(reference_clock_read(t, self.gptp), self.ptp_gran)

    def slave_timestamp(self, name: str, t: SimTime) -> SimTime:
        return _floor(self.clocks[name].read(t), self.ptp_gran)

    # -- beacons ------------------------------------------------------------

    def _next_beacon(self, ap: ApModel) -> None:
        it = self._beacon_iters[ap.name]
        nxt = next(it, None)
        if nxt is None:
            return
        k, t, tsf = nxt
        frame = encode_beacon(
            BeaconFrame(bssid=ap.bssid, timestamp=tsf, beacon_interval=ap.beacon_interval_tu, seq_ctl=(k % 4096) << 4)
        )
        self.sim.schedule(Event(t, "beacon_tx", ap.name, "*", payload=(ap, frame), detail=f"bssid={ap.bssid},tsf={tsf}"))

    def on_beacon_tx(self, ev: Event) -> None:
        ap, frame = ev.payload
        for rx_ev in deliver_broadcast(frame, self.beacon_rx[ap.name], ev.due, src=ap.name, detail=ev.detail):
            self.sim.schedule(rx_ev)
        self._next_beacon(ap)

    def on_beacon_rx(self, ev: Event) -> None:
        self._links[(ev.src, ev.dst)].received += 1
        frame = decode_beacon(ev.payload)
        now = ev.due
        if ev.dst == REFERENCE:
            obs = BeaconObservation(frame.bssid, frame.timestamp, self.reference_time(now))
            msg = reference_on_beacon(self.ref_state, obs, obs.local_rx_time)
            if msg is None:
                return
            data = encode_network_message(msg)
            detail = f"seq={msg.sequence_number},t_bf={frame.timestamp}"
            for tup_ev in deliver_multicast(data, self.group, now, detail=detail):
                self.sim.schedule(tup_ev)
            return
        name = ev.dst
        state = self.states[name]
        if frame.bssid != state.bssid_filter:
            # filtered before timestamping, like a capture filter
            self.ignored[name] += 1
            return
        obs = BeaconObservation(frame.bssid, frame.timestamp, self.clocks[name].read(now))
        station_on_beacon(state, obs)
        rx_true = self.rx_true[name]
        rx_true[obs.key] = now
        while len(rx_true) > 4 * state.capacity:
            rx_true.popitem(last=False)

    def on_tuple_rx(self, ev: Event) -> None:
        name = ev.dst
        self._links[(ev.src, name)].received += 1
        tup = self.subscribers[name].receive(ev.payload)
        if tup is None:
            return
        corr = station_on_tuple(self.states[name], tup)
        if corr is None:
            return
        t_arrival = self.rx_true[name].get(tup.key)
        if t_arrival is not None:
            # estimate at the beacon instant is t_tsn_at_bf itself
            self.correction_errors[name].append((t_arrival, corr.t_tsn_at_bf - t_arrival))

    # -- evaluation ---------------------------------------------------------

    def on_tick(self, ev: Event) -> None:
        now = ev.due
        for name in self.names:
            local = self.clocks[name].read(now)
            if self.beacon_on:
                state = self.states[name]
                if state.last_correction is None:
                    self.unsynced_ticks[name] += 1
                else:
                    est = estimate_tsn_time(state, local)
                    self.samples.append(OffsetSample(now, BEACON, name, est.t_tsn_estimate - now))
            if self.ptp_on:
                slave = self.slaves[name]
                if slave.offset is not None:
                    self.samples.append(OffsetSample(now, BASELINE, name, slave.corrected(local) - now))
        nxt = now + self.cfg.eval_tick
        if nxt <= self.horizon:
            self.sim.schedule(Event(nxt, "tick", "eval", "*"))

    # -- two-way baseline ---------------------------------------------------

    def _ptp_delay(self, direction: dict, name: str) -> int | None:
        link, rng = direction[name]
        d = link.sample_delay(rng)
        if d is None:
            return None
        return d + self.ptp_stack.sample_jitter(rng)

    def on_sync_tx(self, ev: Event) -> None:
        name, now = ev.dst, ev.due
        t1 = self.master_timestamp(now)
        d_ms = self._ptp_delay(self.ptp_down, name)
        if d_ms is None:
            self.slaves[name].update(TwoWayExchange(t1=t1))
        else:
            self.sim.schedule(Event(now + d_ms, "ptp_sync_rx", REFERENCE, name, payload=(t1, d_ms), detail=f"t1={t1}"))
        nxt = now + self.cfg.baseline.sync_interval
        if nxt <= self.horizon:
            self.sim.schedule(Event(nxt, "ptp_sync_tx", REFERENCE, name))

    def on_sync_rx(self, ev: Event) -> None:
        name, now = ev.dst, ev.due
        t1, d_ms = ev.payload
        t2 = self.slave_timestamp(name, now)
        self.sim.schedule(
            Event(now + self.cfg.baseline.turnaround, "ptp_req_tx", name, REFERENCE, payload=(t1, t2, d_ms), detail=f"t2={t2}")
        )

    def on_req_tx(self, ev: Event) -> None:
        name, now = ev.src, ev.due
        t1, t2, d_ms = ev.payload
        t3 = self.slave_timestamp(name, now)
        d_sm = self._ptp_delay(self.ptp_up, name)
        if d_sm is None:
            self.slaves[name].update(TwoWayExchange(t1=t1, t2=t2, t3=t3))
            return
        self.sim.schedule(
            Event(now + d_sm, "ptp_req_rx", name, REFERENCE, payload=(t1, t2, t3, d_ms, d_sm), detail=f"t3={t3}")
        )

    def on_req_rx(self, ev: Event) -> None:
        name, now = ev.src, ev.due
        t1, t2, t3, d_ms, d_sm = ev.payload
        x = TwoWayExchange(t1=t1, t2=t2, t3=t3, t4=self.master_timestamp(now), sync_interval=self.cfg.baseline.sync_interval)
        self.slaves[name].update(x)
        self.exchanges[name].append(ExchangeRecord(x, d_ms, d_sm, now))

    # -- driver -------------------------------------------------------------

    def run(self) -> RunResult:
        cfg = self.cfg
        if self.beacon_on:
            for ap in self.aps:
                self._beacon_iters[ap.name] = iter_beacons(ap, self.horizon)
                self._next_beacon(ap)
        if self.ptp_on:
            # stagger the first exchange off the beacon grid
            first = cfg.baseline.sync_interval // 2
            for name in self.names:
                if first <= self.horizon:
                    self.sim.schedule(Event(first, "ptp_sync_tx", REFERENCE, name))
        if cfg.eval_tick <= self.horizon:
            self.sim.schedule(Event(cfg.eval_tick, "tick", "eval", "*"))
        self.sim.run(self.horizon)
        return RunResult(
            config=cfg,
            samples=self.samples,
            counters=self._counters(),
            trace=self.sim.trace,
            exchanges=self.exchanges if self.ptp_on else {},
            correction_errors=self.correction_errors,
            stations=self.states,
        )

    def _counters(self) -> dict[str, int]:
        c: dict[str, int] = {"events_executed": self.sim.executed}
        in_flight: dict[tuple[str, str], int] = {}
        for ev in self.sim.queue.pending():
            if ev.kind in ("beacon_rx", "tuple_rx"):
                in_flight[(ev.src, ev.dst)] = in_flight.get((ev.src, ev.dst), 0) + 1
        for (src, dst), rx in self._links.items():
            kind = "tuples" if src == REFERENCE else "beacons"
            prefix = f"{kind}.{src}->{dst}"
            c[f"{prefix}.sent"] = rx.sent
            c[f"{prefix}.received"] = rx.received
            c[f"{prefix}.lost"] = rx.lost
            c[f"{prefix}.in_flight"] = in_flight.get((src, dst), 0)
        c.update(self.ref_state.counters())
        for n in self.names:
            for k, v in self.states[n].counters().items():
                c[f"{n}.{k}"] = v
            for k, v in self.subscribers[n].counters().items():
                c[f"{n}.{k}"] = v
            c[f"{n}.ignored_beacons"] = self.ignored[n]
            c[f"{n}.unsynchronized_ticks"] = self.unsynced_ticks[n]
            c[f"{n}.corrections"] = len(self.correction_errors[n])
            if self.ptp_on:
                c[f"{n}.completed_exchanges"] = self.slaves[n].exchanges
                c[f"{n}.incomplete_exchanges"] = self.slaves[n].incomplete
        return c


def _run_replay(cfg: ScenarioConfig) -> RunResult:
    rp = cfg.replay
    bssid = MacAddress(cfg.stations[0].bssid_filter)
    name = cfg.stations[0].id
    ref_stats, sta_stats = IngestStats(), IngestStats()
    ref_reader = read_pcap(cfg.resolve(rp.reference_pcap))
    sta_reader = read_pcap(cfg.resolve(rp.station_pcap))
    ref_obs = list(extract_beacons(ref_reader, bssid, ref_stats, rp.use_mac_timestamp))
    sta_obs = list(extract_beacons(sta_reader, bssid, sta_stats, rp.use_mac_timestamp))
    result = pair_observations(ref_obs, sta_obs, bssid)
    samples = [OffsetSample(at, BEACON, name, err) for at, err in result.errors]
    counters = dict(result.counters)
    for prefix, st, reader in (("ingest.reference", ref_stats, ref_reader), ("ingest.station", sta_stats, sta_reader)):
        for k, v in st.as_dict().items():
            counters[f"{prefix}.{k}"] = v
        counters[f"{prefix}.truncated"] = reader.truncated
    trace = [
        f"{c.t_tsn_at_bf},correction,{REFERENCE},{name},t_bf={c.t_bf};t_station={c.t_station_at_bf}"
        for c in result.corrections
    ]
    return RunResult(config=cfg, samples=samples, counters=counters, trace=trace if cfg.record_trace else None)


def run_scenario(cfg: ScenarioConfig) -> RunResult:
    if cfg.replay is not None:
        return _run_replay(cfg)
    return _Run(cfg).run()
