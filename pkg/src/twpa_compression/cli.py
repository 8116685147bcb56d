"""Command-line entry point ``twpa``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 I/O error.
On failure a JSON object ``{"error": ..., "type": ..., "exit_code": ...}``
is printed to stderr and no partial output files are left behind.
Every flag can also be given through an environment variable with the
``TWPA_`` prefix (``TWPA_CONFIG``, ``TWPA_WORKERS``, ``TWPA_OUT``,
``TWPA_PLOT``, ``TWPA_SEED``); command-line flags take precedence.
"""
from __future__ import annotations

import argparse
from importlib import metadata
import json
import logging
import os
from pathlib import Path
import shutil
import sys
import tempfile
import warnings

import numpy as np

from . import io as tio
from . import plots
from .calibration import (
    MagnitudeTrace,
    NoisePowerTrace,
    PhaseTrace,
    fit_dispersion,
    fit_inductance_flux,
    fit_loss_tangent,
    fit_noise_calibration,
)
from .cme import FrequencyTriple, IntegratorConfig, initial_state, integrate, nonlinear_coefficients
from .compression import AnalyticGainModel, analytic_gain, analytic_p1db, compression_summary, stability_map
from .config import example_config_text, load_config, loads
from .constants import PHI0, dbm_to_watt
from .device import char_impedance, solve_operating_point
from .errors import TwpaError, ValidationError
from .reduction import RawVnaDataset, iso_power_reconstruct
from .response import gain_point, sweep

log = logging.getLogger("twpa_compression")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4
ENV_PREFIX = "TWPA_"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _report(ValidationError(message), EXIT_VALIDATION)
        raise SystemExit(EXIT_VALIDATION)


def _env(name, default=None):
    return os.environ.get(ENV_PREFIX + name, default)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=_env("CONFIG"),
                        help="run configuration file (default: bundled 700-cell example)")
    common.add_argument("--workers", type=int, default=int(_env("WORKERS", "1")))
    common.add_argument("--out", default=_env("OUT"), help="output directory")
    common.add_argument("--plot", action="store_true",
                        default=_env("PLOT", "0").lower() in ("1", "true", "yes"))
    common.add_argument("--seed", type=int, default=int(_env("SEED", "0")),
                        help="seed recorded for Monte-Carlo generators")

    parser = _Parser(prog="twpa", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("simulate", parents=[common], help="envelope trajectory at one point")
    sub.add_parser("sweep", parents=[common], help="gain / pump transmission surface")
    sub.add_parser("p1db", parents=[common], help="1-dB compression summary")
    sub.add_parser("stability", parents=[common], help="gain versus position map")
    sub.add_parser("analytic", parents=[common], help="pump-depletion-only gain curve")
    sub.add_parser("example-config", parents=[common], help="print the bundled config")

    fit = sub.add_parser("fit", parents=[common], help="calibration fits on CSV input")
    fit.add_argument("kind", choices=("dispersion", "inductance", "loss", "noise"))
    fit.add_argument("--input", required=True)
    fit.add_argument("--free-cj", action="store_true", help="dispersion: leave CJ free")
    fit.add_argument("--stage", choices=("one", "two"), default="one")
    fit.add_argument("--cg-fF", type=float, help="dispersion stage two: fixed Cg in fF")
    fit.add_argument("--theta0", type=float, help="dispersion stage two: fixed offset in rad")
    fit.add_argument("--power-dbm", type=float, default=0.0, help="loss: trace input power")
    fit.add_argument("--bandwidth", type=float, default=1.0, help="noise: bandwidth in Hz")

    red = sub.add_parser("reduce", parents=[common], help="iso-power profile reconstruction")
    red.add_argument("--input", required=True, help="CSV with P_RT_dBm,f_Hz,Re_S21,Im_S21")
    red.add_argument("--attenuation", required=True, help="CSV with f_Hz,attenuation_dB")
    red.add_argument("--power-average", choices=("dbm", "watt"), default="dbm")
    return parser


def _report(exc, code):
    print(json.dumps({"error": str(exc), "type": type(exc).__name__, "exit_code": code}),
          file=sys.stderr)


# commands; each writes into ``out`` and returns the list of files written

def _simulate(cfg, args, out):
    s = cfg.sweep
    device, pump = cfg.device, cfg.pump
    op = solve_operating_point(device)
    triple = FrequencyTriple.from_pump_signal(pump.frequency, s.signal_frequency)
    p_sig = dbm_to_watt(s.signal_power)
    coeffs = nonlinear_coefficients(triple, op, device, cfg.loss, p_sig, pump.power_w)
    state0 = initial_state(p_sig, pump.power_w, triple, char_impedance(op, device))
    dense = IntegratorConfig(cfg.integrator.rel_tol, cfg.integrator.abs_tol,
                             cfg.integrator.max_step, device.n_cells + 1)
    traj = integrate(state0, coeffs, device.length, dense)
    files = []
    if "csv" in cfg.output.formats:
        tio.write_trajectory_csv(traj, device.cell_length, out / "trajectory.csv")
        files.append("trajectory.csv")
    if "json" in cfg.output.formats:
        gain, pump_s21 = gain_point(s.signal_frequency, s.signal_power, pump, device, cfg.loss,
                                    cfg.integrator)
        tio.write_json({
            "signal_frequency_Hz": s.signal_frequency, "signal_power_dBm": s.signal_power,
            "gain_dB": gain, "pump_s21_dB": pump_s21,
            "coefficients": coeffs.as_dict(),
        }, out / "point.json")
        files.append("point.json")
    if args.plot:
        plots.plot_trajectory(traj, device.cell_length, out / "trajectory.svg")
        files.append("trajectory.svg")
    return files


def _write_surface(cfg, surface, out, args):
    files = []
    if "csv" in cfg.output.formats:
        tio.write_surface_csv(surface, out / "sweep.csv")
        files.append("sweep.csv")
    if "json" in cfg.output.formats:
        tio.write_json(tio.surface_to_json(surface), out / "sweep.json")
        files.append("sweep.json")
    if args.plot:
        plots.plot_surface(surface, out / "sweep.svg")
        files.append("sweep.svg")
    return files


def _sweep(cfg, args, out):
    surface = sweep(cfg.grid(), cfg.device, cfg.loss, cfg.integrator, workers=args.workers)
    return _write_surface(cfg, surface, out, args)


def _p1db(cfg, args, out):
    surface = sweep(cfg.grid(), cfg.device, cfg.loss, cfg.integrator, workers=args.workers)
    files = _write_surface(cfg, surface, out, args)
    summary = compression_summary(surface, cfg.sweep.smoothing_window)
    if "csv" in cfg.output.formats:
        tio.write_summary_csv(summary, out / "summary.csv")
        files.append("summary.csv")
    if "json" in cfg.output.formats:
        tio.write_json(tio.summary_to_json(summary), out / "summary.json")
        files.append("summary.json")
    if args.plot:
        plots.plot_summary(summary, out / "summary.svg")
        files.append("summary.svg")
    return files


def _stability(cfg, args, out):
    freqs = cfg.grid().signal_frequencies
    smap = stability_map(freqs, cfg.sweep.stability_power, cfg.pump, cfg.device, cfg.loss,
                         cfg.integrator)
    tio.write_stability_csv(smap, out / "stability.csv")
    files = ["stability.csv"]
    if args.plot:
        plots.plot_stability(smap, out / "stability.svg")
        files.append("stability.svg")
    return files


def _analytic(cfg, args, out):
    s = cfg.sweep
    model = AnalyticGainModel.from_db(s.analytic_gain, cfg.pump.power_dbm)
    powers = np.linspace(s.p_start, s.p_stop, s.n_powers)
    gains = 10 * np.log10(analytic_gain(model, dbm_to_watt(powers)))
    files = []
    tio.write_analytic_csv(powers, gains, out / "analytic.csv")
    files.append("analytic.csv")
    if "json" in cfg.output.formats:
        tio.write_json({"G_lin_dB": s.analytic_gain, "pump_power_dBm": cfg.pump.power_dbm,
                        "P1dB_dBm": analytic_p1db(model)}, out / "analytic.json")
        files.append("analytic.json")
    if args.plot:
        plots.plot_analytic(powers, gains, out / "analytic.svg")
        files.append("analytic.svg")
    return files


def _fit(cfg, args, out):
    path = args.input
    if args.kind == "dispersion":
        c = tio.read_columns(path, ("f_Hz", "phase_rad"))
        trace = PhaseTrace.from_wrapped(c["f_Hz"], c["phase_rad"])
        cj = None if args.free_cj else cfg.device.snail_capacitance
        cg = args.cg_fF * 1e-15 if args.cg_fF is not None else None
        results = [fit_dispersion(trace, cfg.device.n_cells, cj, args.stage, cg, args.theta0)]
    elif args.kind == "inductance":
        c = tio.read_columns(path, ("flux_Phi0", "L_H"))
        results = [fit_inductance_flux(c["flux_Phi0"] * PHI0, c["L_H"])]
    elif args.kind == "loss":
        c = tio.read_columns(path, ("f_Hz", "s21_dB", "kl_rad"))
        trace = MagnitudeTrace(c["f_Hz"], c["s21_dB"], args.power_dbm)
        results = [fit_loss_tangent(trace, c["kl_rad"])]
    else:
        c = tio.read_columns(path, ("f_Hz", "T_K", "P_W"))
        freqs = np.unique(c["f_Hz"])
        temps = np.unique(c["T_K"])
        power = np.full((temps.size, freqs.size), np.nan)
        power[np.searchsorted(temps, c["T_K"]), np.searchsorted(freqs, c["f_Hz"])] = c["P_W"]
        if np.any(np.isnan(power)):
            raise ValidationError("noise data must contain every (temperature, frequency) pair")
        results = fit_noise_calibration(NoisePowerTrace(freqs, temps, power, args.bandwidth))
    tio.write_json({"kind": args.kind, "fits": [r.as_dict() for r in results]}, out / "fit.json")
    return ["fit.json"]


def _reduce(cfg, args, out):
    c = tio.read_columns(args.input, ("P_RT_dBm", "f_Hz", "Re_S21", "Im_S21"))
    a = tio.read_columns(args.attenuation, ("f_Hz", "attenuation_dB"))
    powers = np.unique(c["P_RT_dBm"])
    freqs = a["f_Hz"]
    s21 = np.full((powers.size, freqs.size), np.nan + 0j)
    rows = np.searchsorted(powers, c["P_RT_dBm"])
    cols = np.searchsorted(freqs, c["f_Hz"])
    if np.any(cols >= freqs.size) or np.any(freqs[np.minimum(cols, freqs.size - 1)] != c["f_Hz"]):
        raise ValidationError("S21 frequencies do not match the attenuation grid")
    s21[rows, cols] = c["Re_S21"] + 1j * c["Im_S21"]
    if np.any(np.isnan(s21)):
        raise ValidationError("S21 data must contain every (power, frequency) pair")
    raw = RawVnaDataset(powers, freqs, s21, a["attenuation_dB"])
    profiles = iso_power_reconstruct(raw, args.power_average)
    tio.write_profiles_csv(profiles, out / "profiles.csv")
    files = ["profiles.csv"]
    if args.plot:
        plots.plot_profiles(profiles, out / "profiles.svg")
        files.append("profiles.svg")
    return files


COMMANDS = {
    "simulate": _simulate, "sweep": _sweep, "p1db": _p1db, "stability": _stability,
    "analytic": _analytic, "fit": _fit, "reduce": _reduce,
}


def _log_warnings(caught):
    # one line per warning category instead of one per integration
    seen = {}
    for w in caught:
        seen.setdefault(w.category.__name__, [0, str(w.message)])[0] += 1
    for name, (count, first) in seen.items():
        log.warning("%s x%d (first: %s)", name, count, first)


def _version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def run(argv=None):
    """Execute a command; returns the process exit code."""
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_VALIDATION
    if args.command == "example-config":
        sys.stdout.write(example_config_text())
        return EXIT_OK
    staging = None
    try:
        if args.workers < 1:
            raise ValidationError("--workers must be >= 1")
        cfg = load_config(args.config) if args.config else loads(example_config_text(), "<bundled>")
        for key in cfg.defaulted:
            log.info("default applied: %s", key)
        if args.plot and "svg" not in cfg.output.formats:
            cfg = cfg.with_output(formats=cfg.output.formats + ("svg",))
        out = Path(args.out or cfg.output.directory)
        out.mkdir(parents=True, exist_ok=True)
        staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=out))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            files = COMMANDS[args.command](cfg, args, staging)
        _log_warnings(caught)
        manifest = {
            "command": args.command,
            "argv": list(sys.argv[1:] if argv is None else argv),
            "config": str(args.config) if args.config else "<bundled>",
            "defaults_applied": list(cfg.defaulted),
            "files": files,
            "workers": args.workers,
            "seed": args.seed,
            "version": _version(),
        }
        tio.write_json(manifest, staging / "manifest.json")
        for name in files + ["manifest.json"]:
            os.replace(staging / name, out / name)
        log.info("wrote %s to %s", ", ".join(files), out)
        return EXIT_OK
    except ValidationError as exc:
        err, code = exc, EXIT_VALIDATION
    except TwpaError as exc:
        err, code = exc, EXIT_NUMERICAL
    except OSError as exc:
        err, code = exc, EXIT_IO
    finally:
        if staging is not None and staging.exists():
            shutil.rmtree(staging, ignore_errors=True)
    _report(err, code)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
