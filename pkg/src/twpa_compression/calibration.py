"""Calibration fits for measured TWPA data.

Dispersion from transmission phase, inductance versus flux, loss tangent
from the transmission-magnitude slope and system gain / noise temperature
from a variable-temperature thermal source.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math
import warnings

import numpy as np
from scipy.optimize import least_squares

from .constants import HBAR, KB, PHI0_REDUCED
from .device import _find_phase_root
from .errors import (
    DegenerateAbscissa,
    GridMismatch,
    NegativeGain,
    NoConvergence,
    SingularJacobian,
    UnphysicalWavevectorWarning,
    ValidationError,
)

# at most this many Levenberg-Marquardt iterations (function evaluations)
MAX_ITERATIONS = 200
PARAM_STEP_TOL = 1e-10


@dataclass
class PhaseTrace:
    """Unwrapped transmission phase of the device (PCB contribution removed)."""

    frequencies: np.ndarray  # Hz, increasing
    phase: np.ndarray  # rad, unwrapped
    external_flux: float = 0.0  # Wb

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        self.phase = np.asarray(self.phase, dtype=float)
        if self.frequencies.shape != self.phase.shape or self.frequencies.ndim != 1:
            raise GridMismatch("frequencies and phase must be 1-D and of equal length")
        if np.any(np.diff(self.frequencies) <= 0):
            raise ValidationError("frequencies must be strictly increasing")
        if np.any(np.abs(np.diff(self.phase)) > math.pi):
            raise ValidationError("phase has jumps larger than pi; unwrap it first")

    @classmethod
    def from_wrapped(cls, frequencies, wrapped_phase, external_flux=0.0):
        return cls(frequencies, unwrap_phase(wrapped_phase), external_flux)

    @property
    def omega(self):
        return 2 * math.pi * self.frequencies


@dataclass
class MagnitudeTrace:
    frequencies: np.ndarray  # Hz
    s21_db: np.ndarray
    input_power: float  # dBm

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        self.s21_db = np.asarray(self.s21_db, dtype=float)
        if self.frequencies.shape != self.s21_db.shape:
            raise GridMismatch("frequencies and s21_db must have equal length")
        if not np.all(np.isfinite(self.s21_db)):
            raise ValidationError("s21_db must be finite")


@dataclass
class NoisePowerTrace:
    """Output noise power for several thermal-source temperatures."""

    frequencies: np.ndarray  # Hz
    temperatures: np.ndarray  # K, increasing
    power: np.ndarray  # W, [temperature x frequency]
    bandwidth: float  # Hz

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        self.temperatures = np.asarray(self.temperatures, dtype=float)
        self.power = np.asarray(self.power, dtype=float)
        if self.power.shape != (self.temperatures.size, self.frequencies.size):
            raise GridMismatch(
                f"power shape {self.power.shape} != "
                f"({self.temperatures.size}, {self.frequencies.size})"
            )
        if np.any(np.diff(self.temperatures) <= 0) or np.any(self.temperatures < 0):
            raise ValidationError("temperatures must be >= 0 and strictly increasing")
        if np.any(self.power <= 0):
            raise ValidationError("measured powers must be positive")
        if not self.bandwidth > 0:
            raise ValidationError("bandwidth must be > 0")


@dataclass
class FitResult:
    """Outcome of a calibration fit.

    ``residuals`` are ``model(values) - data`` in the units of the data.
    ``fixed`` records the parameters that were held constant.
    """

    names: tuple
    values: tuple
    units: tuple
    stderr: tuple
    residuals: np.ndarray
    fixed: dict = field(default_factory=dict)

    @property
    def residual_norm(self):
        return float(np.linalg.norm(self.residuals))

    def __getitem__(self, name):
        return self.values[self.names.index(name)]

    def error(self, name):
        return self.stderr[self.names.index(name)]

    def relative_error(self, name):
        return abs(self.error(name) / self[name])

    def as_dict(self):
        return {
            "parameters": {
                n: {"value": v, "unit": u, "stderr": None if math.isnan(s) else s}
                for n, v, u, s in zip(self.names, self.values, self.units, self.stderr)
            },
            "residual_norm": self.residual_norm,
            "residuals": [float(r) for r in self.residuals],
            "fixed": dict(self.fixed),
        }

    @classmethod
    def from_dict(cls, d):
        params = d["parameters"]
        names = tuple(params)
        return cls(
            names=names,
            values=tuple(float(params[n]["value"]) for n in names),
            units=tuple(params[n]["unit"] for n in names),
            stderr=tuple(math.nan if params[n]["stderr"] is None else float(params[n]["stderr"])
                         for n in names),
            residuals=np.asarray(d["residuals"], dtype=float),
            fixed=dict(d.get("fixed", {})),
        )


def unwrap_phase(phase):
    """Remove 2 pi jumps from a wrapped phase series."""
    return np.unwrap(np.asarray(phase, dtype=float))


def _covariance(jac, residuals):
    """Linearized parameter covariance ``s^2 (J^T J)^-1`` at the optimum."""
    m, n = jac.shape
    _, s, vt = np.linalg.svd(jac, full_matrices=False)
    tol = s[0] * max(m, n) * np.finfo(float).eps if s.size else 0.0
    if s.size < n or np.any(s <= tol):
        raise SingularJacobian("Jacobian is rank deficient at the optimum")
    dof = m - n
    if dof <= 0:
        return np.full((n, n), np.nan)
    s2 = float(residuals @ residuals) / dof
    return (vt.T / s**2) @ vt * s2


def _least_squares(residual, p0, scale, method="lm", bounds=None):
    """Scaled Levenberg-Marquardt fit; returns physical parameters, residuals, covariance."""
    p0 = np.asarray(p0, dtype=float)
    scale = np.asarray(scale, dtype=float)

    def fun(u):
        return residual(u * scale)

    kwargs = {}
    if bounds is not None:
        kwargs["bounds"] = (np.asarray(bounds[0]) / scale, np.asarray(bounds[1]) / scale)
    sol = least_squares(
        fun, p0 / scale, method=method,
        xtol=PARAM_STEP_TOL, ftol=1e-15, gtol=1e-15,
        max_nfev=MAX_ITERATIONS * (p0.size + 1), **kwargs,
    )
    if sol.status == 0:
        raise NoConvergence(f"no convergence after {sol.nfev} evaluations")
    if sol.status < 0:
        raise NoConvergence(sol.message)
    p = sol.x * scale
    cov_u = _covariance(sol.jac, sol.fun)
    cov = cov_u * np.outer(scale, scale)
    return p, sol.fun, cov


# dispersion

def dispersion_phase(omega, theta0, inductance, ground_capacitance, snail_capacitance, n_cells):
    """Accumulated phase ``theta0 + N w sqrt(L Cg) / sqrt(1 - L CJ w^2)``."""
    w = np.asarray(omega, dtype=float)
    return theta0 + n_cells * w * np.sqrt(inductance * ground_capacitance) / np.sqrt(
        1 - inductance * snail_capacitance * w**2
    )


def _phase_from_products(omega, theta0, lcg, lcj, n_cells):
    return theta0 + n_cells * omega * np.sqrt(lcg) / np.sqrt(1 - lcj * omega**2)


def _polynomial_guess(omega, theta):
    # theta ~ c0 + c1 w + c3 w^3 at low frequency: c1 = N sqrt(L Cg), c3/c1 = L CJ / 2
    w0 = np.max(omega)
    u = omega / w0
    A = np.column_stack([np.ones_like(u), u, u**3])
    c0, c1, c3 = np.linalg.lstsq(A, theta, rcond=None)[0]
    return c0, c1 / w0, c3 / w0**3


def fit_dispersion(trace: PhaseTrace, n_cells, snail_capacitance=None, stage="one",
                   ground_capacitance=None, theta0=None, p0=None) -> FitResult:
    """Fit the SNAIL-chain dispersion relation to an unwrapped phase trace.

    Parameters
    ----------
    trace : PhaseTrace
    n_cells : int
        Number of cells ``N``.
    snail_capacitance : float or None
        Fixed ``CJ`` in F. With ``None`` it is left free; only the products
        ``L Cg`` and ``L CJ`` enter the phase, so the fit then returns
        ``(theta0, L_Cg, L_CJ)``.
    stage : {"one", "two"}
        Stage one fits ``(theta0, L, Cg)`` with ``CJ`` fixed. Stage two fits
        ``L`` alone with ``Cg`` and ``theta0`` fixed, which requires both
        ``ground_capacitance`` and ``theta0``.
    p0 : sequence, optional
        Initial guess in the order of the fitted parameters; by default a
        cubic polynomial fit of the low-order expansion is used.
    """
    w = trace.omega
    theta = trace.phase
    if w.size < 4:
        raise ValidationError("need at least 4 points")
    if stage not in ("one", "two"):
        raise ValidationError("stage must be 'one' or 'two'")
    c0, c1, c3 = _polynomial_guess(w, theta)
    lcg0 = (c1 / n_cells) ** 2
    lcj0 = 2 * c3 / c1 if c3 / c1 > 0 else 0.1 / np.max(w) ** 2

    if stage == "two":
        if snail_capacitance is None or ground_capacitance is None or theta0 is None:
            raise ValidationError("stage two needs snail_capacitance, ground_capacitance and theta0")
        cj, cg, th0 = snail_capacitance, ground_capacitance, theta0
        guess = np.array(p0 if p0 is not None else [lcg0 / cg], dtype=float)

        def residual(p):
            return dispersion_phase(w, th0, p[0], cg, cj, n_cells) - theta

        p, res, cov = _least_squares(residual, guess, np.abs(guess))
        return FitResult(("L",), (float(p[0]),), ("H",), (float(math.sqrt(cov[0, 0])),), res,
                         {"theta0": th0, "Cg": cg, "CJ": cj, "n_cells": n_cells, "stage": "two"})

    if snail_capacitance is None:
        guess = np.array(p0 if p0 is not None else [c0, lcg0, lcj0], dtype=float)
        scale = np.array([1.0, abs(guess[1]), abs(guess[2])])

        def residual(p):
            return _phase_from_products(w, p[0], p[1], p[2], n_cells) - theta

        p, res, cov = _least_squares(residual, guess, scale)
        return FitResult(
            ("theta0", "L_Cg", "L_CJ"), tuple(float(v) for v in p), ("rad", "s^2", "s^2"),
            tuple(float(v) for v in np.sqrt(np.diag(cov))), res,
            {"n_cells": n_cells, "stage": "one"},
        )

    cj = snail_capacitance
    L0 = lcj0 / cj
    guess = np.array(p0 if p0 is not None else [c0, L0, lcg0 / L0], dtype=float)
    scale = np.array([1.0, abs(guess[1]), abs(guess[2])])

    def residual(p):
        return dispersion_phase(w, p[0], p[1], p[2], cj, n_cells) - theta

    p, res, cov = _least_squares(residual, guess, scale)
    return FitResult(
        ("theta0", "L", "Cg"), tuple(float(v) for v in p), ("rad", "H", "F"),
        tuple(float(v) for v in np.sqrt(np.diag(cov))), res,
        {"CJ": cj, "n_cells": n_cells, "stage": "one"},
    )


def two_stage_dispersion(traces, n_cells, snail_capacitance):
    """Stage-one fits per flux, freeze ``Cg`` at its mean, refit ``L`` alone.

    Returns ``(stage_one, stage_two, cg_mean)``; each trace keeps its own
    stage-one ``theta0`` in the second stage.
    """
    first = [fit_dispersion(t, n_cells, snail_capacitance) for t in traces]
    cg_mean = float(np.mean([f["Cg"] for f in first]))
    second = [
        fit_dispersion(t, n_cells, snail_capacitance, stage="two",
                       ground_capacitance=cg_mean, theta0=f["theta0"], p0=[f["L"]])
        for t, f in zip(traces, first)
    ]
    return first, second, cg_mean


def k_from_phase(trace: PhaseTrace, theta0, length):
    """Absolute wavevector ``(theta + theta0) / l`` per frequency, rad/m."""
    if not length > 0:
        raise ValidationError("device length must be > 0")
    k = (trace.phase + theta0) / length
    if np.any(k < 0):
        warnings.warn("negative wavevector obtained; check the sign of theta0",
                      UnphysicalWavevectorWarning, stacklevel=2)
    return k


# inductance versus flux

def alpha_tilde(junction_ratio, external_flux):
    """First-order SNAIL expansion coefficient at the current-free bias point."""
    phi_ext = external_flux / PHI0_REDUCED
    phi = _find_phase_root(phi_ext, junction_ratio)
    return junction_ratio * math.cos(phi) + math.cos((phi - phi_ext) / 3.0) / 3.0


def inductance_vs_flux(external_flux, junction_ratio, critical_current):
    """Linear inductance ``phi0 / (alpha(flux) Ic)`` for each flux value."""
    flux = np.atleast_1d(np.asarray(external_flux, dtype=float))
    alpha = np.array([alpha_tilde(junction_ratio, f) for f in flux])
    return PHI0_REDUCED / (alpha * critical_current)


def fit_inductance_flux(external_flux, inductance, p0=(0.05, 1e-6)) -> FitResult:
    """Fit ``(r, Ic)`` of the SNAIL model to inductances measured versus flux.

    The junction ratio is bounded to ``[0, 1/3)``, where the bias point is
    unique and the inductance stays finite near half a flux quantum.
    """
    flux = np.asarray(external_flux, dtype=float)
    L = np.asarray(inductance, dtype=float)
    if flux.shape != L.shape or flux.size < 3:
        raise ValidationError("need at least 3 (flux, inductance) pairs")
    if np.ptp(flux) == 0:
        raise DegenerateAbscissa("all flux values are identical")

    def residual(p):
        r, ic = p
        alpha = np.array([alpha_tilde(r, f) for f in flux])
        with np.errstate(divide="ignore"):
            model = PHI0_REDUCED / (alpha * ic)
        # relative residuals keep the large-inductance points from dominating
        return np.where(alpha > 0, model / L - 1.0, 1e3)

    guess = np.asarray(p0, dtype=float)
    scale = np.array([0.1, guess[1]])
    bounds = ([0.0, 1e-12], [1 / 3 - 1e-9, np.inf])
    p, res, cov = _least_squares(residual, guess, scale, method="trf", bounds=bounds)
    return FitResult(("r", "Ic"), (float(p[0]), float(p[1])), ("", "A"),
                     tuple(float(v) for v in np.sqrt(np.diag(cov))), res * L)


# loss tangent

def tan_delta_from_slope(slope_db_per_rad):
    """Convert a transmission slope (dB per radian of ``k l``) to a loss tangent."""
    return -slope_db_per_rad * 2 * math.log(10) / 20


def fit_loss_tangent(magnitude: MagnitudeTrace, k_times_l) -> FitResult:
    """Regress ``S21 [dB]`` against ``k l`` and convert the slope to ``tan(delta)``.

    The intercept absorbs any frequency-independent offset, so only the
    slope matters.
    """
    kl = np.asarray(k_times_l, dtype=float)
    y = magnitude.s21_db
    if kl.shape != y.shape:
        raise GridMismatch("k*l series must align with the magnitude trace")
    if kl.size < 2 or np.ptp(kl) == 0:
        raise DegenerateAbscissa("k*l has zero variance")
    A = np.column_stack([np.ones_like(kl), kl])
    (intercept, slope), *_ = np.linalg.lstsq(A, y, rcond=None)
    res = A @ np.array([intercept, slope]) - y
    dof = kl.size - 2
    if dof > 0:
        s2 = float(res @ res) / dof
        slope_err = math.sqrt(s2 / np.sum((kl - kl.mean()) ** 2))
    else:
        slope_err = math.nan
    td = tan_delta_from_slope(slope)
    return FitResult(
        ("tan_delta", "slope", "intercept"),
        (float(td), float(slope), float(intercept)),
        ("", "dB/rad", "dB"),
        (abs(tan_delta_from_slope(slope_err)), slope_err, math.nan),
        res,
        {"input_power_dbm": magnitude.input_power},
    )


# thermal noise source

def n_source(temperature, omega):
    """Noise temperature of a thermal source including zero-point fluctuations, K."""
    T = np.asarray(temperature, dtype=float)
    half = HBAR * np.asarray(omega, dtype=float) / (2 * KB)
    with np.errstate(divide="ignore"):
        x = np.where(T > 0, half / np.where(T > 0, T, 1.0), np.inf)
    out = half / np.tanh(x)
    return float(out) if out.ndim == 0 else out


def fit_noise_calibration(trace: NoisePowerTrace) -> list[FitResult]:
    """Per-frequency linear fit of ``P = (N_source(T) + N_sys) G_sys kB df``.

    Reports ``G_sys`` in dB and ``N_sys`` in K.
    """
    if trace.temperatures.size < 2:
        raise ValidationError("need at least 2 source temperatures")
    results = []
    scale = KB * trace.bandwidth
    for j, f in enumerate(trace.frequencies):
        x = n_source(trace.temperatures, 2 * math.pi * f)
        y = trace.power[:, j] / scale
        A = np.column_stack([x, np.ones_like(x)])
        (g, offset), *_ = np.linalg.lstsq(A, y, rcond=None)
        if not g > 0:
            raise NegativeGain(f"non-positive system gain at {f:.6g} Hz")
        n_sys = offset / g
        res = (A @ np.array([g, offset]) - y) * scale
        dof = x.size - 2
        if dof > 0:
            s2 = float((res / scale) @ (res / scale)) / dof
            cov = s2 * np.linalg.inv(A.T @ A)
            g_err = math.sqrt(cov[0, 0])
            # n_sys = offset / g
            grad = np.array([-offset / g**2, 1 / g])
            n_err = math.sqrt(grad @ cov @ grad)
            g_db_err = 10 / math.log(10) * g_err / g
        else:
            n_err = g_db_err = math.nan
        results.append(FitResult(
            ("G_sys", "N_sys"), (float(10 * math.log10(g)), float(n_sys)), ("dB", "K"),
            (g_db_err, n_err), res, {"frequency": float(f), "bandwidth": trace.bandwidth},
        ))
    return results


def input_line_attenuation(full_s21_db, g_sys_db, frequencies_full=None, frequencies_gain=None):
    """Input-line transmission ``full - G_sys`` in dB (negative for a lossy line)."""
    full = np.asarray(full_s21_db, dtype=float)
    g = np.asarray(g_sys_db, dtype=float)
    if full.shape != g.shape:
        raise GridMismatch(f"series lengths differ: {full.shape} vs {g.shape}")
    if frequencies_full is not None or frequencies_gain is not None:
        if frequencies_full is None or frequencies_gain is None or not np.array_equal(
            np.asarray(frequencies_full, dtype=float), np.asarray(frequencies_gain, dtype=float)
        ):
            raise GridMismatch("frequency grids differ")
    return full - g
