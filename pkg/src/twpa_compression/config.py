"""Run configuration: a sectioned ``key = value`` text format with unit suffixes.

Example::

    [device]
    n_cells = 700
    cell_length = 8.7 um
    critical_current = 1.4 uA

Every dimensional value must carry a unit. Unknown sections or keys are
rejected. Missing sections fall back to the defaults of :data:`DEFAULTS`.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from decimal import Decimal
import math
import re
from importlib import resources
from pathlib import Path

from .cme import IntegratorConfig
from .constants import PHI0
from .device import DeviceParams, LossModel
from .errors import ConfigError, ParseError, UnitError, UnknownKey, ValidationError
from .response import PumpTone, SweepGrid

# multipliers to SI for each accepted unit, grouped by dimension
UNITS = {
    "frequency": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9},
    "power": {"dBm": 1.0},
    "inductance": {"H": 1.0, "nH": 1e-9, "pH": 1e-12},
    "capacitance": {"F": 1.0, "pF": 1e-12, "fF": 1e-15},
    "current": {"A": 1.0, "mA": 1e-3, "uA": 1e-6, "nA": 1e-9},
    "length": {"m": 1.0, "mm": 1e-3, "um": 1e-6},
    "flux": {"Wb": 1.0, "Phi0": PHI0},
    "none": {"": 1.0},
}

# canonical unit used when writing a config back out
CANONICAL = {
    "frequency": "GHz", "power": "dBm", "inductance": "pH", "capacitance": "fF",
    "current": "uA", "length": "um", "flux": "Phi0", "none": "",
}

SCHEMA = {
    "device": {
        "n_cells": "int",
        "cell_length": "length",
        "junction_ratio": "none",
        "critical_current": "current",
        "snail_capacitance": "capacitance",
        "ground_capacitance": "capacitance",
        "external_flux": "flux",
    },
    "loss": {
        "pump_tan_delta": "none",
        "signal_table": "table",
    },
    "pump": {
        "frequency": "frequency",
        "power": "power",
    },
    "sweep": {
        "f_start": "frequency",
        "f_stop": "frequency",
        "n_frequencies": "int",
        "p_start": "power",
        "p_stop": "power",
        "n_powers": "int",
        "signal_frequency": "frequency",
        "signal_power": "power",
        "stability_power": "power",
        "smoothing_window": "int",
        "analytic_gain": "gain",
    },
    "integrator": {
        "rel_tol": "none",
        "abs_tol": "none",
        "max_step": "length",
    },
    "output": {
        "directory": "str",
        "formats": "str",
    },
}

DEFAULTS = {
    "device": {
        "n_cells": 700,
        "cell_length": 8.7e-6,
        "junction_ratio": 0.062,
        "critical_current": 1.4e-6,
        "snail_capacitance": 31e-15,
        "ground_capacitance": 223.5e-15,
        "external_flux": PHI0 / 2,
    },
    "loss": {
        "pump_tan_delta": LossModel.reference().pump_tan_delta,
        "signal_table": LossModel.reference().signal_table,
    },
    "pump": {"frequency": 7.5e9, "power": -78.4},
    "sweep": {
        "f_start": 4e9,
        "f_stop": 11e9,
        "n_frequencies": 71,
        "p_start": -125.0,
        "p_stop": -85.0,
        "n_powers": 20,
        "signal_frequency": 6e9,
        "signal_power": -113.0,
        "stability_power": -94.6,
        "smoothing_window": 5,
        "analytic_gain": 20.0,
    },
    "integrator": {"rel_tol": 1e-9, "abs_tol": 1e-24, "max_step": math.inf},
    "output": {"directory": "out", "formats": "csv,json"},
}

FORMATS = ("csv", "json", "svg")

_SECTION = re.compile(r"^\[\s*([A-Za-z_][A-Za-z0-9_]*)\s*\]$")
_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?inf"
_QUANTITY = re.compile(rf"^({_NUMBER})\s*([A-Za-z0-9]*)$")


@dataclass(frozen=True)
class SweepSettings:
    f_start: float
    f_stop: float
    n_frequencies: int
    p_start: float
    p_stop: float
    n_powers: int
    signal_frequency: float
    signal_power: float
    stability_power: float
    smoothing_window: int
    analytic_gain: float  # dB


@dataclass(frozen=True)
class OutputSettings:
    directory: str
    formats: tuple = ("csv", "json")


@dataclass(frozen=True)
class RunConfig:
    device: DeviceParams
    loss: LossModel
    pump: PumpTone
    sweep: SweepSettings
    integrator: IntegratorConfig
    output: OutputSettings
    defaulted: tuple = field(default=(), compare=False)

    def grid(self) -> SweepGrid:
        s = self.sweep
        return SweepGrid.span(s.f_start, s.f_stop, s.n_frequencies, s.p_start, s.p_stop,
                              s.n_powers, self.pump.frequency, self.pump.power_dbm)

    def with_output(self, directory=None, formats=None):
        out = self.output
        return replace(self, output=OutputSettings(
            directory if directory is not None else out.directory,
            tuple(formats) if formats is not None else out.formats,
        ))


def _parse_quantity(text, dimension, where):
    m = _QUANTITY.match(text.strip())
    if not m:
        raise ParseError(f"cannot parse quantity {text!r}", *where)
    number, unit = m.group(1), m.group(2)
    units = UNITS[dimension]
    if unit not in units:
        expected = ", ".join(u or "(none)" for u in units)
        raise UnitError(f"unit {unit or '(none)'!r} not valid for a {dimension}; expected {expected} "
                        f"(line {where[0]})")
    if "inf" in number:
        return float(number)
    # exact decimal product, rounded once
    return float(Decimal(number) * Decimal(repr(units[unit])))


def _parse_value(text, kind, where):
    text = text.strip()
    if kind == "str":
        return text
    if kind == "int":
        try:
            return int(text)
        except ValueError:
            raise ParseError(f"expected an integer, got {text!r}", *where) from None
    if kind == "gain":
        m = _QUANTITY.match(text)
        if not m or m.group(2) != "dB":
            raise UnitError(f"gain needs a 'dB' suffix, got {text!r} (line {where[0]})")
        return float(m.group(1))
    if kind == "table":
        nodes = []
        for item in text.split(","):
            if ":" not in item:
                raise ParseError(f"table entry {item.strip()!r} is not 'power dBm: tan_delta'", *where)
            p, t = item.split(":", 1)
            nodes.append((_parse_quantity(p, "power", where), _parse_quantity(t, "none", where)))
        return tuple(nodes)
    return _parse_quantity(text, kind, where)


def parse_config(text, source="<string>"):
    """Parse config text into ``{section: {key: SI value}}``; no defaults applied."""
    values = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        col = len(line) - len(line.lstrip()) + 1
        stripped = line.strip()
        m = _SECTION.match(stripped)
        if m:
            section = m.group(1)
            if section not in SCHEMA:
                raise UnknownKey(f"unknown section [{section}] in {source} (line {lineno})")
            if section in values:
                raise ParseError(f"duplicate section [{section}]", lineno, col)
            values[section] = {}
            continue
        if stripped.startswith("["):
            raise ParseError(f"malformed section header {stripped!r}", lineno, col)
        if "=" not in line:
            raise ParseError("expected 'key = value'", lineno, col)
        if section is None:
            raise ParseError("key outside of any section", lineno, col)
        key, value = line.split("=", 1)
        key = key.strip()
        if key not in SCHEMA[section]:
            raise UnknownKey(f"unknown key {key!r} in section [{section}] (line {lineno})")
        if key in values[section]:
            raise ParseError(f"duplicate key {key!r}", lineno, col)
        value_col = line.index("=") + 2
        values[section][key] = _parse_value(value, SCHEMA[section][key], (lineno, value_col))
    return values


def build_config(values) -> RunConfig:
    """Fill defaults and validate parsed values."""
    merged = {}
    defaulted = []
    for section, keys in SCHEMA.items():
        given = values.get(section, {})
        merged[section] = {}
        for key in keys:
            if key in given:
                merged[section][key] = given[key]
            else:
                merged[section][key] = DEFAULTS[section][key]
                defaulted.append(f"{section}.{key}")
    d, lo, pu, sw, it, out = (merged[s] for s in SCHEMA)
    try:
        formats = tuple(f.strip() for f in out["formats"].split(",") if f.strip())
        bad = [f for f in formats if f not in FORMATS]
        if bad:
            raise ConfigError(f"unknown output format(s) {bad}; choose from {FORMATS}")
        sweep = SweepSettings(**sw)
        if sweep.n_frequencies < 1 or sweep.n_powers < 1:
            raise ValidationError("n_frequencies and n_powers must be >= 1")
        if sweep.smoothing_window < 1 or sweep.smoothing_window % 2 == 0:
            raise ValidationError("smoothing_window must be odd and >= 1")
        if not pu["frequency"] > 0:
            raise ValidationError("pump frequency must be > 0")
        return RunConfig(
            device=DeviceParams(**d),
            loss=LossModel(lo["pump_tan_delta"], lo["signal_table"]),
            pump=PumpTone(pu["frequency"], pu["power"]),
            sweep=sweep,
            integrator=IntegratorConfig(it["rel_tol"], it["abs_tol"], it["max_step"]),
            output=OutputSettings(out["directory"], formats),
            defaulted=tuple(defaulted),
        )
    except ConfigError:
        raise
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def loads(text, source="<string>") -> RunConfig:
    return build_config(parse_config(text, source))


def load_config(path) -> RunConfig:
    path = Path(path)
    return loads(path.read_text(), str(path))


def example_config_text():
    return resources.files("twpa_compression").joinpath("data/reference_device.cfg").read_text()


def _fmt(value, dimension):
    unit = CANONICAL[dimension]
    if isinstance(value, float) and math.isinf(value):
        scaled = value
    else:
        # decimal division keeps e.g. 8.7e-6 m -> 8.7 um exact in the text
        scaled = float(Decimal(repr(float(value))) / Decimal(repr(UNITS[dimension][unit])))
    text = repr(scaled)
    return f"{text} {unit}" if unit else text


def dumps(cfg: RunConfig) -> str:
    """Serialize a config; ``loads(dumps(cfg)) == cfg``."""
    d, s = cfg.device, cfg.sweep
    sections = {
        "device": {
            "n_cells": str(d.n_cells),
            "cell_length": _fmt(d.cell_length, "length"),
            "junction_ratio": _fmt(d.junction_ratio, "none"),
            "critical_current": _fmt(d.critical_current, "current"),
            "snail_capacitance": _fmt(d.snail_capacitance, "capacitance"),
            "ground_capacitance": _fmt(d.ground_capacitance, "capacitance"),
            "external_flux": _fmt(d.external_flux, "flux"),
        },
        "loss": {
            "pump_tan_delta": repr(cfg.loss.pump_tan_delta),
            "signal_table": ", ".join(f"{p!r} dBm: {t!r}" for p, t in cfg.loss.signal_table),
        },
        "pump": {
            "frequency": _fmt(cfg.pump.frequency, "frequency"),
            "power": _fmt(cfg.pump.power_dbm, "power"),
        },
        "sweep": {
            "f_start": _fmt(s.f_start, "frequency"),
            "f_stop": _fmt(s.f_stop, "frequency"),
            "n_frequencies": str(s.n_frequencies),
            "p_start": _fmt(s.p_start, "power"),
            "p_stop": _fmt(s.p_stop, "power"),
            "n_powers": str(s.n_powers),
            "signal_frequency": _fmt(s.signal_frequency, "frequency"),
            "signal_power": _fmt(s.signal_power, "power"),
            "stability_power": _fmt(s.stability_power, "power"),
            "smoothing_window": str(s.smoothing_window),
            "analytic_gain": f"{s.analytic_gain!r} dB",
        },
        "integrator": {
            "rel_tol": repr(cfg.integrator.rel_tol),
            "abs_tol": repr(cfg.integrator.abs_tol),
            "max_step": _fmt(cfg.integrator.max_step, "length"),
        },
        "output": {
            "directory": cfg.output.directory,
            "formats": ",".join(cfg.output.formats),
        },
    }
    lines = []
    for name, keys in sections.items():
        lines.append(f"[{name}]")
        lines.extend(f"{k} = {v}" for k, v in keys.items())
        lines.append("")
    return "\n".join(lines)
