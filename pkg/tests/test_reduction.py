import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from twpa_compression.errors import BadWindow, EmptyOverlap, GridMismatch, ValidationError
from twpa_compression.reduction import (
    RawVnaDataset,
    band_average_profile,
    drop_pump_sample,
    iso_power_reconstruct,
    moving_average,
    reconstruct_from_matrix,
    smooth_complex_profile,
)


def brute_moving_average(x, window):
    n = len(x)
    out = []
    for i in range(n):
        h = min(window // 2, i, n - 1 - i)
        out.append(sum(x[i - h:i + h + 1]) / (2 * h + 1))
    return np.array(out)


def brute_nearest(P, lo, hi, target):
    chosen = []
    for j in range(P.shape[1]):
        best, best_d = None, np.inf
        for i in np.argsort(P[:, j], kind="stable"):
            if lo <= P[i, j] <= hi and abs(P[i, j] - target) < best_d:
                best, best_d = i, abs(P[i, j] - target)
        chosen.append(best)
    return np.array(chosen)


def dataset(attenuation, powers=np.arange(-40.0, -9.0, 1.0)):
    f = np.linspace(4e9, 11e9, attenuation.size)
    s21 = (1 + powers[:, None] / 100) * np.exp(1j * f[None, :] / 1e10)
    return RawVnaDataset(powers, f, s21, attenuation)


# moving average

def test_moving_average_constant_and_identity():
    x = np.random.default_rng(0).normal(size=30)
    assert np.array_equal(moving_average(np.full(10, 3.0), 5), np.full(10, 3.0))
    assert np.array_equal(moving_average(x, 1), x)


def test_moving_average_ramp():
    x = np.arange(40.0)
    y = moving_average(x, 11)
    assert np.allclose(y, brute_moving_average(list(x), 11), rtol=0, atol=1e-12)
    # symmetric windows keep a ramp unchanged everywhere
    assert np.allclose(y, x, atol=1e-12)


def test_moving_average_against_brute_force():
    x = np.random.default_rng(1).normal(size=57)
    assert np.allclose(moving_average(x, 11), brute_moving_average(list(x), 11), atol=1e-13)


@pytest.mark.parametrize("window", [0, 2, 4, 31, 2.5])
def test_moving_average_bad_window(window):
    with pytest.raises(BadWindow):
        moving_average(np.arange(30.0), window)


@settings(max_examples=60, deadline=None)
@given(
    arrays(float, 25, elements=st.floats(-1e3, 1e3)),
    arrays(float, 25, elements=st.floats(-1e3, 1e3)),
    st.floats(-10, 10), st.floats(-10, 10), st.sampled_from([1, 3, 5, 11, 25]),
)
def test_moving_average_linear(x, y, a, b, w):
    lhs = moving_average(a * x + b * y, w)
    rhs = a * moving_average(x, w) + b * moving_average(y, w)
    assert np.allclose(lhs, rhs, atol=1e-9 * (1 + np.max(np.abs(a * x)) + np.max(np.abs(b * y))))


def test_moving_average_reduces_white_noise_variance():
    rng = np.random.default_rng(7)
    noise = rng.normal(0, 1.0, size=(1000, 200))
    smooth = np.array([moving_average(row, 11) for row in noise])
    ratio = noise[:, 5:-5].var() / smooth[:, 5:-5].var()
    assert ratio == pytest.approx(11, rel=0.05)


# band-averaged profiles

def test_band_average_without_pump_is_plain_smoothing():
    f = np.linspace(4e9, 11e9, 50)
    v = np.sin(f / 1e9)
    f_out, v_out = band_average_profile(f, v, 7.55e9)
    assert np.array_equal(f_out, f)
    assert np.array_equal(v_out, moving_average(v, 11))


def test_band_average_removes_pump_spike():
    f = np.linspace(4e9, 11e9, 71)
    v = np.zeros(71)
    v[35] = 100.0
    assert f[35] == 7.5e9
    f_out, v_out = band_average_profile(f, v, 7.5e9)
    assert f_out.size == 70 and 7.5e9 not in f_out
    assert np.all(v_out == 0.0)


def test_band_average_requires_sorted():
    with pytest.raises(ValidationError):
        band_average_profile([2.0, 1.0, 3.0] * 5, np.zeros(15), 0.0)


def test_drop_pump_sample_tolerance():
    f, v = drop_pump_sample([1.0, 2.0, 3.0], [4, 5, 6], 2.2, tol_hz=0.1)
    assert f.size == 3
    f, v = drop_pump_sample([1.0, 2.0, 3.0], [4, 5, 6], 2.2)
    assert list(v) == [4, 6]


def test_smooth_complex_profile_preserves_smooth_trace():
    f = np.linspace(0, 1, 100)
    s = 0.5 * np.exp(1j * 40 * f)  # phase winds several times
    out = smooth_complex_profile(s, 5)
    assert np.allclose(out, s, atol=1e-12)


# iso-power reconstruction

def test_dataset_validation():
    with pytest.raises(GridMismatch):
        RawVnaDataset([0.0, 1.0], [1.0, 2.0], np.zeros((2, 3)), [0.0, 0.0])
    with pytest.raises(GridMismatch):
        RawVnaDataset([0.0, 1.0], [1.0, 2.0], np.zeros((2, 2)), [0.0])
    with pytest.raises(ValidationError):
        RawVnaDataset([0.0, 1.0], [1.0, 2.0], np.zeros((2, 2)), [0.0, np.inf])
    with pytest.raises(ValidationError):
        RawVnaDataset([1.0, 0.0], [1.0, 2.0], np.zeros((2, 2)), [0.0, 0.0])


def test_flat_attenuation_is_identity():
    raw = dataset(np.full(40, 60.0))
    profiles = iso_power_reconstruct(raw)
    assert len(profiles) == raw.room_temp_powers.size
    for i, prof in enumerate(profiles):
        assert np.all(prof.source_row == i)
        assert prof.scatter_db == 0.0
        assert np.array_equal(prof.s21, raw.complex_s21[i])


def test_sloped_attenuation_scatter_and_oracle():
    att = np.linspace(58.0, 61.0, 40)
    raw = dataset(att)
    P = raw.device_powers
    lo, hi = np.max(P.min(axis=0)), np.min(P.max(axis=0))
    profiles = iso_power_reconstruct(raw)
    assert profiles
    for prof in profiles:
        assert prof.scatter_db <= 0.5 + 1e-12
        assert np.array_equal(prof.source_row, brute_nearest(P, lo, hi, prof.power_dbm))
        assert np.all((prof.selected_power_dbm >= lo) & (prof.selected_power_dbm <= hi))


def test_tie_goes_to_lower_power():
    P = np.array([[0.0, -1.0], [1.0, 0.0], [2.0, 1.0]])
    profiles = reconstruct_from_matrix(P, [1.0, 2.0], np.ones((3, 2)))
    # second row averages to 0.5: column 0 ties between 0 and 1
    prof = [p for p in profiles if p.power_dbm == 0.5][0]
    assert prof.selected_power_dbm[0] == 0.0
    assert prof.selected_power_dbm[1] == 0.0


def test_watt_average_option():
    att = np.linspace(58.0, 61.0, 40)
    a = iso_power_reconstruct(dataset(att), power_average="dbm")
    b = iso_power_reconstruct(dataset(att), power_average="watt")
    assert len(a) == len(b)
    assert all(pb.power_dbm >= pa.power_dbm for pa, pb in zip(a, b))
    with pytest.raises(ValueError):
        iso_power_reconstruct(dataset(att), power_average="median")


def test_empty_overlap():
    P = np.array([[0.0, 10.0], [1.0, 11.0]])
    with pytest.raises(EmptyOverlap):
        reconstruct_from_matrix(P, [1.0, 2.0], np.ones((2, 2)))


def test_reconstruct_shape_checks():
    with pytest.raises(ValidationError):
        reconstruct_from_matrix(np.zeros((1, 3)), [1, 2, 3], np.zeros((1, 3)))
    with pytest.raises(GridMismatch):
        reconstruct_from_matrix(np.zeros((2, 3)), [1, 2], np.zeros((2, 3)))


def test_reconstruction_idempotent():
    raw = dataset(np.linspace(58.0, 61.0, 40))
    first = iso_power_reconstruct(raw)
    # the output grid assigns each profile its band-averaged power at every frequency
    grid = np.array([np.full(raw.frequencies.size, p.power_dbm) for p in first])
    s21 = np.array([p.s21 for p in first])
    second = reconstruct_from_matrix(grid, raw.frequencies, s21)
    assert len(second) == len(first)
    for a, b in zip(first, second):
        assert b.power_dbm == pytest.approx(a.power_dbm, abs=1e-12)
        assert np.array_equal(b.s21, a.s21)


def test_second_pass_reuses_selected_samples():
    raw = dataset(np.linspace(58.0, 61.0, 40))
    first = iso_power_reconstruct(raw)
    P = np.array([p.selected_power_dbm for p in first])
    second = reconstruct_from_matrix(P, raw.frequencies, np.array([p.s21 for p in first]))
    pool = {complex(v) for p in first for v in p.s21}
    assert all(complex(v) in pool for p in second for v in p.s21)
