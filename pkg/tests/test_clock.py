from fractions import Fraction
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beaconsync.clock import (
    MS,
    S,
    US,
    ClockModel,
    GptpResidualModel,
    read_clock,
    reference_clock_read,
)


def rational_read(offset, drift_ppb, gran, t):
    exact = offset + Fraction(t) * (1 + Fraction(drift_ppb, 10**9))
    return math.floor(exact / gran) * gran


def test_identity_clock():
    assert read_clock(ClockModel(), 5_000_000) == 5_000_000


def test_drift_100ppm_after_one_second():
    clk = ClockModel(drift_ppb=100_000)
    # frozen from rational_read(0, 100_000, 1, 10**9)
    assert read_clock(clk, 1 * S) == 1_000_100_000


def test_granularity_truncates():
    clk = ClockModel(granularity=1 * US)
    assert read_clock(clk, 5_000_123) == 5_000_000


def test_negative_reading_truncates_toward_minus_infinity():
    clk = ClockModel(offset_at_epoch=-1_500, granularity=1 * US)
    assert clk.read(0) == -2_000


@given(
    offset=st.integers(-10**12, 10**12),
    drift=st.integers(-500_000, 500_000),
    gran=st.sampled_from([1, 8, 1_000, 1_024]),
    t=st.integers(0, 10**13),
)
def test_matches_rational_oracle(offset, drift, gran, t):
    clk = ClockModel(offset_at_epoch=offset, drift_ppb=drift, granularity=gran)
    assert clk.read(t) == rational_read(offset, drift, gran, t)


@given(
    drift=st.integers(-200_000, 200_000),
    gran=st.sampled_from([1, 1_000]),
    t=st.integers(0, 10**12),
    dt=st.integers(0, 10**11),
)
def test_monotone_and_linear_within_one_quantum(drift, gran, t, dt):
    clk = ClockModel(drift_ppb=drift, granularity=gran)
    a, b = clk.read(t), clk.read(t + dt)
    assert b >= a
    expected = Fraction(dt) * (1 + Fraction(drift, 10**9))
    assert abs((b - a) - expected) < gran


def test_noise_is_deterministic_per_stream():
    a = ClockModel(read_noise_std=500, rng_stream_id=3, seed=9)
    b = ClockModel(read_noise_std=500, rng_stream_id=3, seed=9)
    c = ClockModel(read_noise_std=500, rng_stream_id=4, seed=9)
    ra = [a.read(t) for t in range(0, 10**9, 10**7)]
    assert ra == [b.read(t) for t in range(0, 10**9, 10**7)]
    assert ra != [c.read(t) for t in range(0, 10**9, 10**7)]
    assert any(r % 1000 for r in ra)


def test_rejects_time_before_epoch_and_overflow():
    with pytest.raises(ValueError):
        ClockModel().read(-1)
    with pytest.raises(OverflowError):
        ClockModel(offset_at_epoch=2**63 - 10).read(100)


def test_rejects_bad_parameters():
    with pytest.raises(ValueError):
        ClockModel(granularity=0)
    with pytest.raises(ValueError):
        ClockModel(read_noise_std=-1)


def test_zero_bound_residual_is_exact():
    m = GptpResidualModel(bound=0)
    for t in (0, 123, 10**12):
        assert reference_clock_read(t, m) == t


@pytest.mark.parametrize("dist", ["uniform_in_bound", "triangular"])
def test_residual_within_350ns(dist):
    m = GptpResidualModel(bound=350, distribution=dist, seed=5)
    res = [reference_clock_read(t, m) - t for t in range(0, 60 * S, 7_777_777)]
    assert max(abs(r) for r in res) <= 350
    assert len(set(res)) > 100


def test_residual_piecewise_constant_per_sync_interval():
    m = GptpResidualModel(seed=1)
    assert m.sync_interval == 31_250_000
    w = 17 * m.sync_interval
    inside = {m.residual(t) for t in (w, w + 1, w + 15 * MS, w + m.sync_interval - 1)}
    assert len(inside) == 1
    windows = {m.residual(k * m.sync_interval) for k in range(200)}
    assert len(windows) > 50


def test_residual_depends_on_seed():
    a = GptpResidualModel(seed=1)
    b = GptpResidualModel(seed=2)
    assert [a.residual(k * a.sync_interval) for k in range(20)] != [
        b.residual(k * b.sync_interval) for k in range(20)
    ]


def test_bad_residual_model():
    with pytest.raises(ValueError):
        GptpResidualModel(distribution="gaussian")
    with pytest.raises(ValueError):
        GptpResidualModel(sync_interval=0)
