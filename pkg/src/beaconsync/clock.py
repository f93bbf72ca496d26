"""Virtual clocks, the grandmaster time source and the gPTP residual model.

All time values are plain Python ``int`` nanosecond counts. ``SimTime`` is an
instant since the simulation epoch and ``Duration`` a signed span; both are
aliases of ``int`` and every value leaving this module is checked against the
signed 64-bit range so that overflow is an error instead of a silent wrap.

Clock readings are *views* over true simulation time: a :class:`ClockModel`
maps the grandmaster (true) time onto what a station's counter would show.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

SimTime = int
Duration = int

NS: Duration = 1
US: Duration = 1_000
MS: Duration = 1_000_000
S: Duration = 1_000_000_000

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

PPB = 1_000_000_000

RESIDUAL_DISTRIBUTIONS = ("uniform_in_bound", "triangular")


def check_int64(value: int, what: str = "time value") -> int:
    """Return ``value`` unchanged, raising ``OverflowError`` outside int64."""
    if not INT64_MIN <= value <= INT64_MAX:
        raise OverflowError(f"{what} {value} overflows signed 64-bit nanoseconds")
    return value


def stream_key(name: str | int) -> int:
    """Stable integer key for a named RNG stream (``hash()`` is salted per process)."""
    if isinstance(name, int):
        return name
    return zlib.crc32(name.encode("utf-8"))


def stream_rng(seed: int, *keys: str | int) -> np.random.Generator:
    """Independent generator for the stream identified by ``keys`` under ``seed``.

    Streams are keyed, not spawned in order, so adding or removing an entity
    from a scenario never perturbs the random draws of the others.
    """
    ss = np.random.SeedSequence(seed, spawn_key=tuple(stream_key(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass
class ClockModel:
    """A free-running local clock.

    ``read(t) = floor_to_granularity(offset_at_epoch + t * (1 + drift_ppb * 1e-9)) + noise``

    Positive ``drift_ppb`` means the clock runs fast. Noise is Gaussian with
    standard deviation ``read_noise_std`` ns, rounded to whole nanoseconds, and
    is drawn from the stream ``(seed, rng_stream_id)`` so repeated runs with the
    same call sequence are bit-identical.
    """

    offset_at_epoch: Duration = 0
    drift_ppb: int = 0
    granularity: Duration = 1
    read_noise_std: Duration = 0
    rng_stream_id: int = 0
    seed: int = 0
    _rng: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.granularity <= 0:
            raise ValueError("granularity must be > 0")
        if self.read_noise_std < 0:
            raise ValueError("read_noise_std must be >= 0")
        check_int64(self.offset_at_epoch, "offset_at_epoch")
        self._rng = stream_rng(self.seed, "clock", self.rng_stream_id)

    def ideal_read(self, true_time: SimTime) -> SimTime:
        """Noise-free reading; consumes no randomness."""
        if true_time < 0:
            raise ValueError(f"true_time {true_time} precedes the simulation epoch")
        local = self.offset_at_epoch + true_time + (true_time * self.drift_ppb) // PPB
        # floor(floor(x) / g) * g == floor(x / g) * g, so one truncation suffices
        local -= local % self.granularity
        return check_int64(local, "clock reading")

    def read(self, true_time: SimTime) -> SimTime:
        local = self.ideal_read(true_time)
        if self.read_noise_std:
            local += int(round(self._rng.normal(0.0, self.read_noise_std)))
        return check_int64(local, "clock reading")


def read_clock(clock: ClockModel, true_time: SimTime) -> SimTime:
    """Read ``clock`` at grandmaster time ``true_time``."""
    return clock.read(true_time)


@dataclass(frozen=True)
class GptpResidualModel:
    """Bounded offset between the reference station and the grandmaster.

    The residual is piecewise constant: it is drawn once per ``sync_interval``
    window of grandmaster time, so any two reads inside one window see the
    same offset. Draws are a pure function of ``(seed, window index)``.
    """

    bound: Duration = 350 * NS
    sync_interval: Duration = 31_250 * US
    distribution: str = "uniform_in_bound"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.bound < 0:
            raise ValueError("bound must be >= 0")
        if self.sync_interval <= 0:
            raise ValueError("sync_interval must be > 0")
        if self.distribution not in RESIDUAL_DISTRIBUTIONS:
            raise ValueError(
                f"distribution must be one of {RESIDUAL_DISTRIBUTIONS}, got {self.distribution!r}"
            )

    def residual(self, gm_time: SimTime) -> Duration:
        if self.bound == 0:
            return 0
        window = gm_time // self.sync_interval
        return _window_residual(self.seed, window, self.bound, self.distribution)


@lru_cache(maxsize=8192)
def _window_residual(seed: int, window: int, bound: int, distribution: str) -> int:
    # window may be negative; fold into an unsigned spawn key
    rng = stream_rng(seed, "gptp", window & 0xFFFF_FFFF_FFFF_FFFF)
    if distribution == "triangular":
        r = int(round(rng.triangular(-bound, 0.0, bound)))
    else:
        r = int(rng.integers(-bound, bound, endpoint=True))
    return max(-bound, min(bound, r))


def reference_clock_read(gm_time: SimTime, model: GptpResidualModel) -> SimTime:
    """Grandmaster time as seen by the gPTP-synchronized reference station."""
    return check_int64(gm_time + model.residual(gm_time), "reference reading")
