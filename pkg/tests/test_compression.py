import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twpa_compression.compression import (
    AnalyticGainModel,
    CompressionSummary,
    analytic_gain,
    analytic_p1db,
    analytic_summary,
    compression_summary,
    extract_p1db,
    interior_local_maxima,
    max_drawdown,
    stability_map,
)
from twpa_compression.constants import dbm_to_watt
from twpa_compression.device import (
    DeviceParams,
    LossModel,
    dispersion_k,
    solve_operating_point,
    tan_delta_lookup,
)
from twpa_compression.errors import DegenerateFrequency, NoCrossing, NonMonotonicWarning, ValidationError
from twpa_compression.response import PumpTone, ResponseSurface, SweepGrid

import oracles

P_PUMP_DBM = -78.4


def synthetic_curve(g_lin_db, p_pump_dbm=P_PUMP_DBM, step=0.25, lo=-140.0, hi=-80.0):
    model = AnalyticGainModel.from_db(g_lin_db, p_pump_dbm)
    p = np.arange(lo, hi + step / 2, step)
    return p, 10 * np.log10(analytic_gain(model, dbm_to_watt(p))), model


# analytic law

def test_analytic_model_validation():
    with pytest.raises(ValidationError):
        AnalyticGainModel(0.0, 1e-11)
    with pytest.raises(ValidationError):
        AnalyticGainModel(100.0, -1.0)
    with pytest.raises(ValidationError):
        analytic_gain(AnalyticGainModel(100.0, 1e-11), -1e-15)


def test_analytic_gain_limits():
    m = AnalyticGainModel(100.0, 1e-11)
    assert analytic_gain(m, 0.0) == 100.0
    assert analytic_gain(m, m.pump_power / (2 * m.g_lin)) == pytest.approx(50.0)
    assert analytic_gain(m, np.array([0.0, 1.0])).shape == (2,)


def test_analytic_p1db_worked_example():
    m = AnalyticGainModel.from_db(20.0, P_PUMP_DBM)
    assert analytic_p1db(m) == pytest.approx(-107.27855, abs=1e-5)
    assert analytic_p1db(m) == pytest.approx(-107.3, abs=0.05)


@pytest.mark.parametrize("g_db", [10.0, 15.0, 20.0, 25.0])
def test_analytic_p1db_against_bisection(g_db):
    m = AnalyticGainModel.from_db(g_db, P_PUMP_DBM)
    assert analytic_p1db(m) == pytest.approx(oracles.invert_analytic_gain(m.g_lin, m.pump_power), abs=1e-5)


def test_p1db_drops_3db_per_gain_doubling():
    a = analytic_p1db(AnalyticGainModel(100.0, 1e-11))
    b = analytic_p1db(AnalyticGainModel(200.0, 1e-11))
    assert a - b == pytest.approx(10 * math.log10(2), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(1.0, 1e4), st.floats(-100.0, -50.0))
def test_p1db_scaling_invariant(g_lin, p_pump_dbm):
    m = AnalyticGainModel(g_lin, dbm_to_watt(p_pump_dbm))
    lhs = analytic_p1db(m) + 10 * math.log10(2 * g_lin)
    assert lhs == pytest.approx(p_pump_dbm + 10 * math.log10(10 ** 0.1 - 1), abs=1e-9)


# extraction

@pytest.mark.parametrize("g_db", [10.0, 15.0, 20.0, 25.0])
def test_extract_recovers_analytic(g_db):
    p, g, m = synthetic_curve(g_db)
    p1db, g_lin = extract_p1db(p, g)
    assert p1db == pytest.approx(analytic_p1db(m), abs=0.1)
    # the lowest sampled power already compresses by a few mdB at high gain
    assert g_lin == pytest.approx(g_db, abs=0.01)


def test_extract_no_crossing():
    p = np.linspace(-130, -90, 40)
    with pytest.raises(NoCrossing):
        extract_p1db(p, np.full(p.size, 15.0))


def test_extract_validation():
    p = np.linspace(-130, -90, 40)
    with pytest.raises(ValidationError):
        extract_p1db(p[:8], np.zeros(8))
    with pytest.raises(ValidationError):
        extract_p1db(p[::-1], np.zeros(40))
    with pytest.raises(ValidationError):
        extract_p1db(p, np.zeros(39))


@settings(max_examples=50, deadline=None)
@given(st.floats(-30.0, 30.0))
def test_extract_offset_invariance(offset):
    p, g, _ = synthetic_curve(20.0, step=1.0)
    a, ga = extract_p1db(p, g)
    b, gb = extract_p1db(p, g + offset)
    assert b == pytest.approx(a, abs=1e-9)
    assert gb - ga == pytest.approx(offset, abs=1e-9)


def test_extract_warns_on_recovery():
    p = np.linspace(-130, -90, 41)
    g = np.where(p < -110, 20.0, 17.0)
    g[p > -100] = 20.0
    with pytest.warns(NonMonotonicWarning):
        p1db, _ = extract_p1db(p, g)
    assert -112 < p1db < -108


# summaries

def _analytic_surface(g_lin_dbs, powers):
    freqs = np.linspace(5e9, 6e9, len(g_lin_dbs))
    grid = SweepGrid(tuple(freqs), tuple(powers), 7.5e9, P_PUMP_DBM)
    gain = np.column_stack([
        10 * np.log10(analytic_gain(AnalyticGainModel.from_db(g, P_PUMP_DBM), dbm_to_watt(powers)))
        for g in g_lin_dbs
    ])
    pump = -np.linspace(0, 3, powers.size)[:, None] * np.ones(len(g_lin_dbs))
    return ResponseSurface(grid, gain, pump)


def test_summary_matches_analytic_summary():
    g_lin = [10.0, 15.0, 20.0, 25.0]
    powers = np.arange(-140.0, -80.0, 0.25)
    s = compression_summary(_analytic_surface(g_lin, powers))
    ref = analytic_summary(s.frequencies, g_lin, P_PUMP_DBM)
    assert np.allclose(s.p1db_dbm, ref.p1db_dbm, atol=0.1)
    assert np.allclose(s.g_lin_db, g_lin, atol=0.01)
    assert np.allclose(s.pout_at_p1db_dbm, s.p1db_dbm + s.g_lin_db - 1.0, atol=1e-12)
    assert np.all(np.isnan(ref.pump_s21_at_p1db_db))
    assert np.all(s.pump_s21_at_p1db_db < 0)


def test_summary_nan_where_no_crossing():
    powers = np.arange(-140.0, -120.0, 1.0)
    s = compression_summary(_analytic_surface([10.0, 30.0], powers))
    assert math.isnan(s.p1db_dbm[0]) and math.isnan(s.pump_s21_at_p1db_db[0])
    assert not math.isnan(s.g_lin_db[0])
    assert s == s


def test_summary_equality_is_nan_aware():
    a = CompressionSummary([1.0], [math.nan], [math.nan], [math.nan], [1.0])
    b = CompressionSummary([1.0], [math.nan], [math.nan], [math.nan], [1.0])
    assert a == b
    assert a != CompressionSummary([1.0], [0.0], [math.nan], [math.nan], [1.0])


# stability map

DEVICE = DeviceParams.reference()
PUMP = PumpTone(7.5e9, P_PUMP_DBM)


def test_stability_map_shape_and_origin():
    m = stability_map([6e9, 9e9], -94.6, PUMP, DEVICE, LossModel.reference(), n_cells=50)
    assert m.gain_db.shape == (51, 2)
    assert np.all(m.gain_db[0] == 0.0)
    assert np.array_equal(m.positions, np.arange(51))
    assert np.array_equal(m.column(6.01e9), m.gain_db[:, 0])


def test_stability_map_rejects_pump_and_bad_length():
    with pytest.raises(DegenerateFrequency):
        stability_map([7.5e9], -94.6, PUMP, DEVICE, LossModel.reference())
    with pytest.raises(ValidationError):
        stability_map([6e9], -94.6, PUMP, DEVICE, LossModel.reference(), n_cells=0)


def test_stability_map_without_nonlinearity_is_loss_slope():
    # r = 1/27 cancels the quartic term of the SNAIL potential
    dev = DeviceParams(700, 8.7e-6, 1 / 27, 1.4e-6, 31e-15, 223.5e-15, DEVICE.external_flux)
    losses = LossModel.reference()
    m = stability_map([6e9], -94.6, PUMP, dev, losses)
    op = solve_operating_point(dev)
    k = dispersion_k(2 * math.pi * 6e9, op, dev, warn=False)
    k_imag = tan_delta_lookup(losses, "signal", -94.6) * k / 2
    x = m.positions * dev.cell_length
    expected = -20 * math.log10(math.e) * k_imag * x
    assert np.allclose(m.gain_db[:, 0], expected, atol=1e-6)


def test_interior_maxima_and_drawdown():
    c = np.array([0.0, 1.0, 2.0, 1.5, 1.7, 1.0])
    assert interior_local_maxima(c) == [2, 4]
    assert interior_local_maxima(c, tol_db=0.5) == [2, 4]
    assert interior_local_maxima(c, tol_db=0.8) == [2]
    assert interior_local_maxima(np.arange(5.0)) == []
    assert max_drawdown(c) == pytest.approx(1.0)
    assert max_drawdown(np.arange(5.0)) == 0.0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=3, max_size=30))
def test_monotone_columns_have_no_drawdown(values):
    c = np.sort(np.array(values))
    assert max_drawdown(c) == 0.0
    assert interior_local_maxima(c) == []
