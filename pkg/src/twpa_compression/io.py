"""CSV and JSON readers/writers for surfaces, summaries, trajectories and traces.

Floats are written with ``repr`` so re-reading a file reproduces the
in-memory arrays exactly. Frequencies are stored in GHz as the decimal
text of the Hz value with the point shifted, so reading them back
recovers the original float bit for bit.
"""
from __future__ import annotations

import csv
from decimal import Decimal
import io
import json
import math
from pathlib import Path

import numpy as np

from .cme import Trajectory
from .compression import CompressionSummary, StabilityMap
from .errors import GridMismatch, ParseError, ValidationError
from .reduction import IsoPowerProfile
from .response import ResponseSurface, SweepGrid

SWEEP_COLUMNS = ("f_sig_GHz", "P_sig_dBm", "gain_dB", "pump_s21_dB")
SUMMARY_COLUMNS = ("f_sig_GHz", "P1dB_dBm", "G_lin_dB", "Pout_dBm", "pump_s21_at_P1dB_dB")
TRAJECTORY_COLUMNS = (
    "x_m", "cell_index", "Re_Ap_Wb", "Im_Ap_Wb", "Re_As_Wb", "Im_As_Wb", "Re_Ai_Wb", "Im_Ai_Wb",
)
PROFILE_COLUMNS = ("P_sig_dBm", "f_GHz", "selected_P_dBm", "source_row", "Re_S21", "Im_S21")


def hz_to_ghz(f):
    """Exact GHz text for a frequency in Hz."""
    d = Decimal(repr(float(f))).scaleb(-9).normalize()
    text = format(d, "f")
    return text if "." in text else text + ".0"


def ghz_to_hz(text):
    """Inverse of :func:`hz_to_ghz`; also accepts plain numbers."""
    if not isinstance(text, str):
        text = repr(float(text))
    return float(Decimal(text.strip()).scaleb(9))


def _num(x):
    x = float(x)
    return "nan" if math.isnan(x) else repr(x)


def _write_rows(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    Path(path).write_text(buf.getvalue())


def _read_rows(path, header, ghz_columns=()):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            got = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file", 1) from None
        if tuple(got) != tuple(header):
            raise ParseError(f"{path}: expected header {','.join(header)}, got {','.join(got)}", 1)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ParseError(f"{path}: expected {len(header)} fields", lineno)
            try:
                rows.append([ghz_to_hz(v) if k in ghz_columns else float(v) for k, v in enumerate(row)])
            except (ValueError, ArithmeticError) as exc:
                raise ParseError(f"{path}: bad number on this row: {exc!r}", lineno) from None
    return np.array(rows, dtype=float).reshape(-1, len(header))


# response surface

def write_surface_csv(surface: ResponseSurface, path):
    g = surface.grid
    rows = [
        (hz_to_ghz(f), _num(p), _num(surface.gain_db[i, j]), _num(surface.pump_s21_db[i, j]))
        for i, p in enumerate(g.signal_powers)
        for j, f in enumerate(g.signal_frequencies)
    ]
    _write_rows(path, SWEEP_COLUMNS, rows)


def read_surface_csv(path, pump_frequency, pump_power) -> ResponseSurface:
    data = _read_rows(path, SWEEP_COLUMNS, ghz_columns=(0,))
    freqs = list(dict.fromkeys(data[:, 0]))
    powers = list(dict.fromkeys(data[:, 1]))
    shape = (len(powers), len(freqs))
    if data.shape[0] != shape[0] * shape[1]:
        raise GridMismatch(f"{path}: rows do not form a complete power x frequency grid")
    grid = SweepGrid(tuple(float(f) for f in freqs), tuple(float(p) for p in powers),
                     pump_frequency, pump_power)
    return ResponseSurface(grid, data[:, 2].reshape(shape), data[:, 3].reshape(shape))


def surface_to_json(surface: ResponseSurface):
    g = surface.grid
    return {
        "pump_frequency_Hz": g.pump_frequency,
        "pump_power_dBm": g.pump_power,
        "signal_frequencies_Hz": list(g.signal_frequencies),
        "signal_powers_dBm": list(g.signal_powers),
        "gain_dB": surface.gain_db.tolist(),
        "pump_s21_dB": surface.pump_s21_db.tolist(),
    }


def surface_from_json(d) -> ResponseSurface:
    grid = SweepGrid(tuple(d["signal_frequencies_Hz"]), tuple(d["signal_powers_dBm"]),
                     d["pump_frequency_Hz"], d["pump_power_dBm"])
    return ResponseSurface(grid, np.array(d["gain_dB"]), np.array(d["pump_s21_dB"]))


# compression summary

def write_summary_csv(summary: CompressionSummary, path):
    rows = [
        (hz_to_ghz(f), _num(p), _num(g), _num(o), _num(s))
        for f, p, g, o, s in zip(summary.frequencies, summary.p1db_dbm, summary.g_lin_db,
                                 summary.pout_at_p1db_dbm, summary.pump_s21_at_p1db_db)
    ]
    _write_rows(path, SUMMARY_COLUMNS, rows)


def read_summary_csv(path) -> CompressionSummary:
    d = _read_rows(path, SUMMARY_COLUMNS, ghz_columns=(0,))
    return CompressionSummary(
        frequencies=d[:, 0],
        p1db_dbm=d[:, 1], g_lin_db=d[:, 2], pout_at_p1db_dbm=d[:, 3], pump_s21_at_p1db_db=d[:, 4],
    )


def _nan_to_none(values):
    return [None if math.isnan(v) else float(v) for v in values]


def summary_to_json(summary: CompressionSummary):
    return {
        "frequencies_Hz": [float(f) for f in summary.frequencies],
        "P1dB_dBm": _nan_to_none(summary.p1db_dbm),
        "G_lin_dB": _nan_to_none(summary.g_lin_db),
        "Pout_dBm": _nan_to_none(summary.pout_at_p1db_dbm),
        "pump_s21_at_P1dB_dB": _nan_to_none(summary.pump_s21_at_p1db_db),
    }


def summary_from_json(d) -> CompressionSummary:
    def arr(key):
        return np.array([math.nan if v is None else v for v in d[key]], dtype=float)

    return CompressionSummary(np.array(d["frequencies_Hz"], dtype=float), arr("P1dB_dBm"),
                              arr("Pout_dBm"), arr("pump_s21_at_P1dB_dB"), arr("G_lin_dB"))


# trajectory

def write_trajectory_csv(traj: Trajectory, cell_length, path):
    rows = []
    for k in range(len(traj)):
        a = traj.amplitudes[:, k]
        rows.append((
            _num(traj.x[k]), _num(traj.x[k] / cell_length),
            _num(a[0].real), _num(a[0].imag), _num(a[1].real), _num(a[1].imag),
            _num(a[2].real), _num(a[2].imag),
        ))
    _write_rows(path, TRAJECTORY_COLUMNS, rows)


def read_trajectory_csv(path) -> Trajectory:
    d = _read_rows(path, TRAJECTORY_COLUMNS)
    amps = np.vstack([d[:, 2] + 1j * d[:, 3], d[:, 4] + 1j * d[:, 5], d[:, 6] + 1j * d[:, 7]])
    return Trajectory(d[:, 0], amps)


# stability map

def write_stability_csv(smap: StabilityMap, path):
    header = ("cell_index",) + tuple(f"gain_dB@{hz_to_ghz(f)}GHz" for f in smap.frequencies)
    rows = [
        (str(int(pos)),) + tuple(_num(v) for v in smap.gain_db[i])
        for i, pos in enumerate(smap.positions)
    ]
    _write_rows(path, header, rows)


def read_stability_csv(path) -> StabilityMap:
    with open(path, newline="") as fh:
        header = next(csv.reader(fh))
    if header[0] != "cell_index":
        raise ParseError(f"{path}: first column must be cell_index", 1)
    freqs = np.array([ghz_to_hz(h[len("gain_dB@"):-len("GHz")]) for h in header[1:]])
    d = _read_rows(path, header)
    return StabilityMap(d[:, 0].astype(int), freqs, d[:, 1:])


# analytic curves

def write_analytic_csv(powers_dbm, gains_db, path):
    _write_rows(path, ("P_sig_dBm", "gain_dB"),
                [(_num(p), _num(g)) for p, g in zip(powers_dbm, gains_db)])


def read_analytic_csv(path):
    d = _read_rows(path, ("P_sig_dBm", "gain_dB"))
    return d[:, 0], d[:, 1]


# iso-power profiles

def write_profiles_csv(profiles, path):
    rows = []
    for prof in profiles:
        for f, sp, row, s in zip(prof.frequencies, prof.selected_power_dbm, prof.source_row, prof.s21):
            rows.append((_num(prof.power_dbm), hz_to_ghz(f), _num(sp), str(int(row)),
                         _num(s.real), _num(s.imag)))
    _write_rows(path, PROFILE_COLUMNS, rows)


def read_profiles_csv(path):
    d = _read_rows(path, PROFILE_COLUMNS, ghz_columns=(1,))
    profiles = []
    for p in dict.fromkeys(d[:, 0]):
        sel = d[d[:, 0] == p]
        profiles.append(IsoPowerProfile(
            power_dbm=float(p),
            frequencies=sel[:, 1],
            selected_power_dbm=sel[:, 2],
            source_row=sel[:, 3].astype(int),
            s21=sel[:, 4] + 1j * sel[:, 5],
        ))
    return profiles


# input data for fits and reduction

def read_columns(path, required):
    """Read a headed numeric CSV and return ``{column: array}`` for the required columns."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: empty file", 1) from None
        missing = [c for c in required if c not in header]
        if missing:
            raise ParseError(f"{path}: missing column(s) {missing}", 1)
        cols = {h: [] for h in header}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}: expected {len(header)} fields", lineno)
            for h, v in zip(header, row):
                try:
                    cols[h].append(float(v))
                except ValueError:
                    raise ParseError(f"{path}: not a number: {v!r}", lineno) from None
    if not cols[required[0]]:
        raise ValidationError(f"{path}: no data rows")
    return {h: np.array(v) for h, v in cols.items()}


def write_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())
