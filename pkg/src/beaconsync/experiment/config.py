"""Scenario files: YAML validated against a strict schema.

Every mapping rejects unknown keys. Durations are either integers (nanoseconds)
or strings ``"<number> <unit>"`` with unit one of ns, us, µs, ms, s, min;
they must resolve to a whole number of nanoseconds. See ``docs/scenario-format.md``.
"""

from __future__ import annotations

import os
from decimal import Decimal, InvalidOperation
from importlib import resources
from pathlib import Path
from typing import Annotated, Literal

import yaml
from pydantic import (
    AfterValidator,
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from ..frames import MacAddress

_UNITS = {
    "ns": 1,
    "us": 1_000,
    "µs": 1_000,
    "ms": 1_000_000,
    "s": 1_000_000_000,
    "min": 60_000_000_000,
}

BUNDLED = ("ideal", "jitter-sweep", "paper-fig7", "multi-ap-filter", "pcap-replay")


class ScenarioError(ValueError):
    pass


def parse_duration(value: object) -> int:
    if isinstance(value, bool):
        raise ValueError("duration must be an integer (ns) or '<number> <unit>'")
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        text = value.strip()
        number, unit = text, "ns"
        for u in sorted(_UNITS, key=len, reverse=True):
            if text.endswith(u):
                number, unit = text[: -len(u)].strip(), u
                break
        try:
            ns = Decimal(number) * _UNITS[unit]
        except InvalidOperation:
            raise ValueError(f"cannot parse duration {value!r}") from None
        if ns != ns.to_integral_value():
            raise ValueError(f"duration {value!r} is not a whole number of nanoseconds")
        return int(ns)
    raise ValueError("duration must be an integer (ns) or '<number> <unit>'")


def _mac(value: str) -> str:
    return str(MacAddress(value))


Dur = Annotated[int, BeforeValidator(parse_duration)]
Mac = Annotated[str, AfterValidator(_mac)]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ContentionConfig(_Strict):
    burst_prob: float = Field(ge=0.0, le=1.0)
    extra_delay: tuple[Dur, Dur]

    @field_validator("extra_delay")
    @classmethod
    def _ordered(cls, v: tuple[int, int]) -> tuple[int, int]:
        if not 0 <= v[0] <= v[1]:
            raise ValueError("extra_delay must be [min, max] with 0 <= min <= max")
        return v


class LinkConfig(_Strict):
    propagation_delay: Dur = Field(0, ge=0)
    rx_jitter_std: Dur = Field(0, ge=0)
    rx_jitter_dist: Literal["gaussian_truncated", "uniform"] = "gaussian_truncated"
    loss_prob: float = Field(0.0, ge=0.0, le=1.0)
    contention: ContentionConfig | None = None


class ApConfig(_Strict):
    name: str | None = None
    bssid: Mac
    beacon_interval_tu: int = Field(100, ge=1, le=65535)
    tsf_origin: Dur = Field(0, ge=0)
    tsf_drift_ppb: int = Field(0, gt=-1_000_000_000)


class ClockConfig(_Strict):
    offset: Dur = 0
    # None: drawn uniformly from +/- station_drift_range_ppb at setup
    drift_ppb: int | None = None
    granularity: Dur = Field(1_000, gt=0)
    read_noise_std: Dur = Field(0, ge=0)


class GptpConfig(_Strict):
    bound: Dur = Field(350, ge=0)
    sync_interval: Dur = Field(31_250_000, gt=0)
    distribution: Literal["uniform_in_bound", "triangular"] = "uniform_in_bound"


class ReferenceConfig(_Strict):
    bssid_filter: Mac | None = None
    timestamp_granularity: Dur = Field(1_000, gt=0)
    gptp: GptpConfig = GptpConfig()
    beacon_link: LinkConfig = LinkConfig()


class StationConfig(_Strict):
    id: str = Field(min_length=1)
    bssid_filter: Mac
    clock: ClockConfig = ClockConfig()
    beacon_link: LinkConfig = LinkConfig()
    observation_capacity: int = Field(32, ge=1)
    drift_compensation: bool = False


class PubSubConfig(_Strict):
    publisher_id: int = Field(1, ge=0, le=65535)
    link: LinkConfig = LinkConfig()


class BaselineConfig(_Strict):
    sync_interval: Dur = Field(1_000_000_000, gt=0)
    turnaround: Dur = Field(100_000, ge=0)
    timestamp_granularity: Dur = Field(1_000, gt=0)
    stack_jitter_std: Dur = Field(0, ge=0)
    # None: same channel as the PubSub link
    downlink: LinkConfig | None = None
    uplink: LinkConfig | None = None


class ReplayConfig(_Strict):
    reference_pcap: str
    station_pcap: str
    use_mac_timestamp: bool = False


class OutputConfig(_Strict):
    samples: str = "samples.csv"
    trace: str = "trace.txt"
    summary: str = "summary"


class ScenarioConfig(_Strict):
    name: str
    description: str = ""
    duration: Dur = Field(gt=0)
    seed: int = Field(0, ge=0, lt=2**64)
    method: Literal["beacon_sync", "ptp_baseline", "both"] = "beacon_sync"
    eval_tick: Dur = Field(10_000_000, gt=0)
    station_drift_range_ppb: int = Field(20_000, ge=0)
    record_trace: bool = True
    aps: list[ApConfig] = Field(min_length=1)
    reference: ReferenceConfig
    stations: list[StationConfig] = Field(min_length=1)
    pubsub: PubSubConfig = PubSubConfig()
    baseline: BaselineConfig = BaselineConfig()
    replay: ReplayConfig | None = None
    output: OutputConfig = OutputConfig()
    base_dir: str = Field(".", exclude=True)

    @model_validator(mode="after")
    def _consistent(self) -> ScenarioConfig:
        names = [s.id for s in self.stations]
        if len(set(names)) != len(names):
            raise ValueError("station ids must be unique")
        if "reference" in names:
            raise ValueError("'reference' is reserved and cannot be a station id")
        ap_names = [a.name or a.bssid for a in self.aps]
        if len(set(ap_names)) != len(ap_names):
            raise ValueError("AP names/bssids must be unique")
        if self.replay is not None:
            if self.method != "beacon_sync":
                raise ValueError("replay scenarios support method beacon_sync only")
            if len(self.stations) != 1:
                raise ValueError("replay scenarios take exactly one station")
        return self

    def resolve(self, path: str) -> str:
        return path if os.path.isabs(path) else os.path.join(self.base_dir, path)


def _format_errors(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        ctx = e.get("ctx") or {}
        kind = e["type"]
        if kind == "greater_than":
            msg = f"{loc} must be > {ctx['gt']}"
        elif kind == "greater_than_equal":
            msg = f"{loc} must be >= {ctx['ge']}"
        elif kind == "less_than_equal":
            msg = f"{loc} must be <= {ctx['le']}"
        elif kind == "extra_forbidden":
            msg = f"{loc}: unknown key"
        elif kind == "missing":
            msg = f"{loc}: required key missing"
        else:
            msg = f"{loc}: {e['msg']}"
        lines.append(msg)
    return "; ".join(lines)


def scenario_from_dict(data: dict, base_dir: str = ".") -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ScenarioError("scenario file must contain a mapping at top level")
    if "base_dir" in data:
        raise ScenarioError("base_dir: unknown key")
    try:
        return ScenarioConfig(**data, base_dir=base_dir)
    except ValidationError as err:
        raise ScenarioError(_format_errors(err)) from None


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("beaconsync.experiment") / "scenarios" / f"{name}.yaml"))


def load_scenario(path: str | os.PathLike) -> ScenarioConfig:
    """Load a scenario file, or a bundled scenario by name (e.g. ``"paper-fig7"``)."""
    p = Path(path)
    if not p.exists() and str(path) in BUNDLED:
        p = bundled_path(str(path))
    with open(p, encoding="utf-8") as f:
        data = yaml.safe_load(f)
    return scenario_from_dict(data, base_dir=str(p.parent))
