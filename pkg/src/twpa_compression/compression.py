"""1-dB compression points, the pump-depletion gain law and gain-vs-position maps."""
from __future__ import annotations

from dataclasses import dataclass
import math
import warnings

import numpy as np

from .cme import FrequencyTriple, IntegratorConfig, initial_state, integrate, nonlinear_coefficients
from .constants import dbm_to_watt, watt_to_dbm
from .device import char_impedance, solve_operating_point
from .errors import DegenerateFrequency, NoCrossing, NonMonotonicWarning, ValidationError
from .reduction import moving_average
from .response import PumpTone, ResponseSurface

ONE_DB = 10 ** 0.1


@dataclass(frozen=True)
class AnalyticGainModel:
    """Pump-depletion-only gain law ``G = G_lin / (1 + 2 G_lin P_sig / P_p)``.

    ``g_lin`` is a linear power ratio, ``pump_power`` in W.
    """

    g_lin: float
    pump_power: float

    def __post_init__(self):
        if not self.g_lin > 0:
            raise ValidationError("g_lin must be > 0")
        if not self.pump_power > 0:
            raise ValidationError("pump_power must be > 0")

    @classmethod
    def from_db(cls, g_lin_db, pump_power_dbm):
        return cls(10 ** (g_lin_db / 10), dbm_to_watt(pump_power_dbm))


def analytic_gain(model: AnalyticGainModel, p_sig):
    """Gain (power ratio) at signal power ``p_sig`` in W; accepts arrays."""
    p = np.asarray(p_sig, dtype=float)
    if np.any(p < 0):
        raise ValidationError("signal power must be >= 0")
    g = model.g_lin / (1 + 2 * model.g_lin * p / model.pump_power)
    return float(g) if g.ndim == 0 else g


def analytic_p1db(model: AnalyticGainModel):
    """Input 1-dB compression point of the analytic law, in dBm."""
    return watt_to_dbm(model.pump_power) + 10 * math.log10((ONE_DB - 1) / (2 * model.g_lin))


def extract_p1db(powers_dbm, gains_db, smoothing_window=5):
    """1-dB compression point of a gain-versus-input-power curve.

    The curve is smoothed with a centered moving average; the linear gain is
    the smoothed value at the lowest power and the compression point is the
    first downward crossing of ``G_lin - 1 dB``, linearly interpolated.

    Returns
    -------
    (p1db_dbm, g_lin_db)

    Raises
    ------
    NoCrossing
        If the smoothed curve never drops 1 dB below its low-power value.
    """
    p = np.asarray(powers_dbm, dtype=float)
    g = np.asarray(gains_db, dtype=float)
    if p.shape != g.shape or p.ndim != 1:
        raise ValidationError("powers and gains must be 1-D arrays of equal length")
    if p.size < 2 * smoothing_window:
        raise ValidationError(f"need at least {2 * smoothing_window} points, got {p.size}")
    if np.any(np.diff(p) <= 0):
        raise ValidationError("powers must be strictly increasing")
    smooth = moving_average(g, smoothing_window)
    g_lin = float(smooth[0])
    threshold = g_lin - 1.0
    below = np.flatnonzero(smooth <= threshold)
    if below.size == 0:
        raise NoCrossing(f"gain never compresses by 1 dB (G_lin = {g_lin:.3f} dB)")
    i = int(below[0])
    g0, g1 = smooth[i - 1], smooth[i]
    p1db = float(p[i] if g1 == threshold else p[i - 1] + (threshold - g0) * (p[i] - p[i - 1]) / (g1 - g0))
    if np.any(smooth[i:] > threshold):
        warnings.warn(
            f"smoothed gain re-crosses G_lin - 1 dB above P1dB = {p1db:.2f} dBm",
            NonMonotonicWarning,
            stacklevel=2,
        )
    return p1db, g_lin


@dataclass
class CompressionSummary:
    """Per-frequency compression figures; NaN marks an undefined entry."""

    frequencies: np.ndarray
    p1db_dbm: np.ndarray
    pout_at_p1db_dbm: np.ndarray
    pump_s21_at_p1db_db: np.ndarray
    g_lin_db: np.ndarray

    def __post_init__(self):
        for name in ("frequencies", "p1db_dbm", "pout_at_p1db_dbm", "pump_s21_at_p1db_db", "g_lin_db"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))

    def __eq__(self, other):
        if not isinstance(other, CompressionSummary):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, n), getattr(other, n), equal_nan=True)
            for n in ("frequencies", "p1db_dbm", "pout_at_p1db_dbm", "pump_s21_at_p1db_db", "g_lin_db")
        )


def compression_summary(surface: ResponseSurface, smoothing_window=5) -> CompressionSummary:
    """Column-wise :func:`extract_p1db` over a response surface.

    Pump transmission at the compression point is read from the pump
    surface, smoothed along power the same way, at ``P_sig = P1dB``.
    """
    powers = surface.powers
    if powers.size < 2:
        raise ValidationError("surface needs at least two power rows")
    n_f = surface.frequencies.size
    p1db = np.full(n_f, np.nan)
    g_lin = np.full(n_f, np.nan)
    pump_at = np.full(n_f, np.nan)
    for j in range(n_f):
        g_lin[j] = moving_average(surface.gain_db[:, j], smoothing_window)[0]
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", NonMonotonicWarning)
                p1db[j], _ = extract_p1db(powers, surface.gain_db[:, j], smoothing_window)
        except NoCrossing:
            continue
        pump_smooth = moving_average(surface.pump_s21_db[:, j], smoothing_window)
        pump_at[j] = np.interp(p1db[j], powers, pump_smooth)
    return CompressionSummary(
        frequencies=surface.frequencies,
        p1db_dbm=p1db,
        pout_at_p1db_dbm=p1db + g_lin - 1.0,
        pump_s21_at_p1db_db=pump_at,
        g_lin_db=g_lin,
    )


def analytic_summary(frequencies, g_lin_db, pump_power_dbm) -> CompressionSummary:
    """Compression figures predicted by the analytic law for each linear gain."""
    g_lin_db = np.asarray(g_lin_db, dtype=float)
    p1db = np.array([analytic_p1db(AnalyticGainModel.from_db(g, pump_power_dbm)) for g in g_lin_db])
    return CompressionSummary(
        frequencies=frequencies,
        p1db_dbm=p1db,
        pout_at_p1db_dbm=p1db + g_lin_db - 1.0,
        pump_s21_at_p1db_db=np.full(g_lin_db.shape, np.nan),
        g_lin_db=g_lin_db,
    )


@dataclass
class StabilityMap:
    """Signal gain (dB) versus unit-cell index and signal frequency."""

    positions: np.ndarray  # cell index 0..N
    frequencies: np.ndarray  # Hz
    gain_db: np.ndarray  # [position x frequency]

    def column(self, frequency):
        j = int(np.argmin(np.abs(self.frequencies - frequency)))
        return self.gain_db[:, j]


def stability_map(frequencies, p_sig_dbm, pump: PumpTone, device, losses,
                  cfg: IntegratorConfig = IntegratorConfig(), n_cells=None) -> StabilityMap:
    """Signal gain ``|A_s(x) / A_s(0)|^2`` along the line for each frequency.

    ``n_cells`` extends (or shortens) the simulated line beyond the device
    length while keeping every other parameter.
    """
    n = device.n_cells if n_cells is None else int(n_cells)
    if n < 1:
        raise ValidationError("n_cells must be >= 1")
    frequencies = np.asarray(frequencies, dtype=float)
    if np.any(frequencies == pump.frequency):
        raise DegenerateFrequency("pump frequency cannot be a signal frequency")
    op = solve_operating_point(device)
    z0 = char_impedance(op, device)
    p_sig = dbm_to_watt(p_sig_dbm)
    cfg_dense = IntegratorConfig(cfg.rel_tol, cfg.abs_tol, cfg.max_step, n + 1, cfg.method)
    gain = np.empty((n + 1, frequencies.size))
    for j, f in enumerate(frequencies):
        triple = FrequencyTriple.from_pump_signal(pump.frequency, float(f))
        coeffs = nonlinear_coefficients(triple, op, device, losses, p_sig, pump.power_w)
        state0 = initial_state(p_sig, pump.power_w, triple, z0)
        traj = integrate(state0, coeffs, n * device.cell_length, cfg_dense)
        gain[:, j] = 10 * np.log10(np.abs(traj.a_s / state0.a_s) ** 2)
    gain[0, :] = 0.0
    return StabilityMap(np.arange(n + 1), frequencies, gain)


def interior_local_maxima(column, tol_db=0.0):
    """Indices of strict interior local maxima that rise above both neighbours by > ``tol_db``."""
    c = np.asarray(column, dtype=float)
    idx = []
    for i in range(1, c.size - 1):
        if c[i] > c[i - 1] and c[i] >= c[i + 1]:
            # require a genuine decline after the peak, not float noise
            if c[i] - np.min(c[i:]) > tol_db:
                idx.append(i)
    return idx


def max_drawdown(column):
    """Largest drop below the running maximum (dB, >= 0)."""
    c = np.asarray(column, dtype=float)
    return float(np.max(np.maximum.accumulate(c) - c))
