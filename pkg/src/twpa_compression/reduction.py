"""Processing of measured VNA data.

Iso-power reconstruction: the input line attenuation depends on frequency,
so one room-temperature source power maps to different device-input powers
across the band. Traces are re-assembled so every frequency of a profile
sees (nearly) the same device-input power. Also moving-average smoothing
and band-averaged profiles.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadWindow, EmptyOverlap, GridMismatch, ValidationError


@dataclass
class RawVnaDataset:
    """Raw transmissions for several room-temperature source powers.

    ``attenuation_db`` is the positive input-line loss per frequency, so the
    device-input power is ``P_RT - attenuation``.
    """

    room_temp_powers: np.ndarray  # dBm, increasing
    frequencies: np.ndarray  # Hz
    complex_s21: np.ndarray  # [power x frequency]
    attenuation_db: np.ndarray  # dB per frequency

    def __post_init__(self):
        self.room_temp_powers = np.asarray(self.room_temp_powers, dtype=float)
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        self.complex_s21 = np.asarray(self.complex_s21, dtype=complex)
        self.attenuation_db = np.asarray(self.attenuation_db, dtype=float)
        shape = (self.room_temp_powers.size, self.frequencies.size)
        if self.complex_s21.shape != shape:
            raise GridMismatch(f"s21 shape {self.complex_s21.shape} != {shape}")
        if self.attenuation_db.shape != (self.frequencies.size,):
            raise GridMismatch("attenuation must have one value per frequency")
        if not np.all(np.isfinite(self.attenuation_db)):
            raise ValidationError("attenuation must be finite")
        if np.any(np.diff(self.room_temp_powers) <= 0):
            raise ValidationError("room-temperature powers must be strictly increasing")

    @property
    def device_powers(self):
        """Device-input power matrix ``P(P_RT, f)`` in dBm."""
        return self.room_temp_powers[:, None] - self.attenuation_db[None, :]


@dataclass
class IsoPowerProfile:
    power_dbm: float  # band-averaged device-input power
    frequencies: np.ndarray
    selected_power_dbm: np.ndarray  # actual device-input power of each selected sample
    source_row: np.ndarray  # index of the raw power row used at each frequency
    s21: np.ndarray

    @property
    def scatter_db(self):
        return float(np.max(np.abs(self.selected_power_dbm - self.power_dbm)))


def iso_power_reconstruct(raw: RawVnaDataset, power_average="dbm") -> list[IsoPowerProfile]:
    return reconstruct_from_matrix(raw.device_powers, raw.frequencies, raw.complex_s21,
                                   power_average=power_average)


def reconstruct_from_matrix(device_powers, frequencies, s21,
                            power_average="dbm") -> list[IsoPowerProfile]:
    """Iso-power profiles from a device-input power matrix ``[row x frequency]``.

    The usable window ``[P_min, P_max]`` is the power range reached at every
    frequency. Rows lying entirely inside the window define the target
    powers (their frequency average, arithmetic in dBm, or in W with
    ``power_average="watt"``); each frequency then takes the in-window sample
    nearest to the target, the lower one on a tie.
    """
    if power_average not in ("dbm", "watt"):
        raise ValueError("power_average must be 'dbm' or 'watt'")
    P = np.asarray(device_powers, dtype=float)
    s21 = np.asarray(s21, dtype=complex)
    frequencies = np.asarray(frequencies, dtype=float)
    if P.ndim != 2 or P.shape[0] < 2:
        raise ValidationError("need at least two power rows")
    if s21.shape != P.shape or frequencies.shape != (P.shape[1],):
        raise GridMismatch("power matrix, s21 and frequency axis disagree")
    order = np.argsort(P, axis=0, kind="stable")
    lowest = np.take_along_axis(P, order[:1], axis=0)[0]
    highest = np.take_along_axis(P, order[-1:], axis=0)[0]
    p_min = float(np.max(lowest))
    p_max = float(np.min(highest))
    if p_min > p_max:
        raise EmptyOverlap(f"no power common to all frequencies (P_min={p_min}, P_max={p_max})")
    inside = (P >= p_min) & (P <= p_max)
    profiles = []
    cols = np.arange(P.shape[1])
    for row in np.flatnonzero(inside.all(axis=1)):
        if power_average == "dbm":
            target = float(np.mean(P[row]))
        else:
            target = float(10 * np.log10(np.mean(10 ** (P[row] / 10))))
        distance = np.where(inside, np.abs(P - target), np.inf)
        best = np.min(distance, axis=0)
        # ties broken towards the lower power
        candidates = np.where(distance == best[None, :], P, np.inf)
        chosen = np.argmin(candidates, axis=0)
        profiles.append(IsoPowerProfile(
            power_dbm=target,
            frequencies=frequencies.copy(),
            selected_power_dbm=P[chosen, cols],
            source_row=chosen,
            s21=s21[chosen, cols],
        ))
    return profiles


def moving_average(series, window):
    """Centered moving average with symmetric windows shrinking at the edges.

    Sample ``i`` is averaged over ``i - h .. i + h`` with
    ``h = min(window // 2, i, n - 1 - i)``; output length equals input length.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if int(window) != window or window < 1 or window % 2 == 0 or window > n:
        raise BadWindow(f"window must be odd, >= 1 and <= {n}, got {window}")
    half = window // 2
    out = np.empty(n)
    for i in range(n):
        h = min(half, i, n - 1 - i)
        out[i] = x[i - h:i + h + 1].mean()
    return out


def drop_pump_sample(frequencies, values, pump_frequency, tol_hz=0.5):
    f = np.asarray(frequencies, dtype=float)
    v = np.asarray(values)
    keep = np.abs(f - pump_frequency) > tol_hz
    return f[keep], v[keep]


def band_average_profile(frequencies, values, pump_frequency, window=11):
    """Remove the sample at the pump frequency, then smooth along frequency."""
    f = np.asarray(frequencies, dtype=float)
    if np.any(np.diff(f) <= 0):
        raise ValidationError("profile must be sorted by frequency")
    f, v = drop_pump_sample(f, values, pump_frequency)
    return f, moving_average(v, window)


def smooth_complex_profile(s21, window):
    """Smooth a complex trace on dB magnitude and unwrapped phase separately."""
    s21 = np.asarray(s21, dtype=complex)
    mag_db = moving_average(20 * np.log10(np.abs(s21)), window)
    phase = moving_average(np.unwrap(np.angle(s21)), window)
    return 10 ** (mag_db / 20) * np.exp(1j * phase)
