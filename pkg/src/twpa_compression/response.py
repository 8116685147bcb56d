"""Normalized signal gain and pump transmission over frequency/power grids.

Each grid cell needs three integrations: pump and signal together, the
signal alone (pump OFF reference) and the pump alone (signal OFF
reference). The two reference runs are cached because they depend on a
subset of the cell coordinates only.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np

from .cme import FrequencyTriple, IntegratorConfig, run_point
from .constants import dbm_to_watt
from .device import DeviceParams, LossModel, solve_operating_point
from .errors import DegenerateFrequency, SweepCellError, TwpaError, ValidationError


@dataclass(frozen=True)
class PumpTone:
    frequency: float  # Hz
    power_dbm: float  # at the device input

    @property
    def power_w(self):
        return dbm_to_watt(self.power_dbm)


@dataclass(frozen=True)
class SweepGrid:
    """Signal frequencies (Hz) and device-input signal powers (dBm) at a fixed pump."""

    signal_frequencies: tuple
    signal_powers: tuple
    pump_frequency: float
    pump_power: float

    def __post_init__(self):
        freqs = tuple(float(f) for f in self.signal_frequencies)
        powers = tuple(float(p) for p in self.signal_powers)
        object.__setattr__(self, "signal_frequencies", freqs)
        object.__setattr__(self, "signal_powers", powers)
        if not freqs or not powers:
            raise ValidationError("grid needs at least one frequency and one power")
        if any(f <= 0 for f in freqs):
            raise ValidationError("signal frequencies must be positive")
        if any(b <= a for a, b in zip(freqs, freqs[1:])):
            raise ValidationError("signal frequencies must be strictly increasing")
        if any(b <= a for a, b in zip(powers, powers[1:])):
            raise ValidationError("signal powers must be strictly increasing")
        if self.pump_frequency in freqs:
            raise DegenerateFrequency("pump frequency must not be one of the signal frequencies")

    @classmethod
    def span(cls, f_start, f_stop, n_freq, p_start, p_stop, n_power, pump_frequency, pump_power):
        """Evenly spaced grid; a sample falling on the pump frequency is dropped."""
        freqs = np.linspace(f_start, f_stop, n_freq)
        freqs = [float(f) for f in freqs if not math.isclose(f, pump_frequency, rel_tol=0, abs_tol=1.0)]
        powers = [float(p) for p in np.linspace(p_start, p_stop, n_power)]
        return cls(tuple(freqs), tuple(powers), float(pump_frequency), float(pump_power))

    @property
    def pump(self):
        return PumpTone(self.pump_frequency, self.pump_power)

    @property
    def shape(self):
        return len(self.signal_powers), len(self.signal_frequencies)


@dataclass
class ResponseSurface:
    """Gain and pump transmission in dB, rows indexed by power, columns by frequency."""

    grid: SweepGrid
    gain_db: np.ndarray
    pump_s21_db: np.ndarray

    def __post_init__(self):
        self.gain_db = np.asarray(self.gain_db, dtype=float)
        self.pump_s21_db = np.asarray(self.pump_s21_db, dtype=float)
        if self.gain_db.shape != self.grid.shape or self.pump_s21_db.shape != self.grid.shape:
            raise ValidationError(
                f"surface shape {self.gain_db.shape} does not match grid {self.grid.shape}"
            )

    @property
    def frequencies(self):
        return np.array(self.grid.signal_frequencies)

    @property
    def powers(self):
        return np.array(self.grid.signal_powers)

    def __eq__(self, other):
        if not isinstance(other, ResponseSurface):
            return NotImplemented
        return (
            self.grid == other.grid
            and np.array_equal(self.gain_db, other.gain_db)
            and np.array_equal(self.pump_s21_db, other.pump_s21_db)
        )


def _signal_only(f_signal, p_sig_w, device, losses, cfg):
    # with the pump off the idler is never generated and the signal only
    # sees its own Kerr phase and loss, so a degenerate triple is exact
    triple = FrequencyTriple.degenerate(2 * math.pi * f_signal)
    s21_s, _ = run_point(p_sig_w, 0.0, triple, device, losses, cfg)
    return s21_s


def _pump_only(f_pump, p_pump_w, device, losses, cfg):
    triple = FrequencyTriple.degenerate(2 * math.pi * f_pump)
    _, s21_p = run_point(0.0, p_pump_w, triple, device, losses, cfg)
    return s21_p


_signal_only_cached = lru_cache(maxsize=4096)(_signal_only)
_pump_only_cached = lru_cache(maxsize=256)(_pump_only)


def clear_reference_cache():
    _signal_only_cached.cache_clear()
    _pump_only_cached.cache_clear()


def gain_point(f_signal, p_sig_dbm, pump: PumpTone, device: DeviceParams, losses: LossModel,
               cfg: IntegratorConfig = IntegratorConfig(), use_cache=True):
    """Normalized signal gain and pump transmission (both dB) at one grid cell."""
    if f_signal == pump.frequency:
        raise DegenerateFrequency("signal frequency equals pump frequency")
    p_sig_w = dbm_to_watt(p_sig_dbm)
    p_pump_w = pump.power_w
    op_point = solve_operating_point(device)
    triple = FrequencyTriple.from_pump_signal(pump.frequency, f_signal)
    s_on, p_on = run_point(p_sig_w, p_pump_w, triple, device, losses, cfg, op_point)
    sig_ref = _signal_only_cached if use_cache else _signal_only
    pump_ref = _pump_only_cached if use_cache else _pump_only
    s_off = sig_ref(float(f_signal), p_sig_w, device, losses, cfg)
    p_off = pump_ref(float(pump.frequency), p_pump_w, device, losses, cfg)
    return 10 * math.log10(s_on / s_off), 10 * math.log10(p_on / p_off)


def _cell(args):
    f_signal, p_sig_dbm, pump, device, losses, cfg = args
    try:
        return gain_point(f_signal, p_sig_dbm, pump, device, losses, cfg)
    except TwpaError as exc:
        raise SweepCellError(f_signal, p_sig_dbm, exc) from exc


def sweep(grid: SweepGrid, device: DeviceParams, losses: LossModel,
          cfg: IntegratorConfig = IntegratorConfig(), workers=1) -> ResponseSurface:
    """Evaluate :func:`gain_point` over the whole grid.

    Cells are computed independently (optionally in ``workers`` processes)
    and assembled in row-major order, so the result does not depend on the
    worker count.
    """
    pump = grid.pump
    cells = [
        (f, p, pump, device, losses, cfg)
        for p in grid.signal_powers
        for f in grid.signal_frequencies
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cell, cells, chunksize=max(1, len(cells) // (4 * workers))))
    else:
        results = [_cell(c) for c in cells]
    values = np.array(results, dtype=float).reshape(grid.shape + (2,))
    return ResponseSurface(grid, values[..., 0], values[..., 1])
