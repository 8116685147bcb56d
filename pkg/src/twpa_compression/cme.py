"""Coupled-mode equations for degenerate-pump four-wave mixing.

Pump, signal and idler envelopes ``A_j(x)`` (flux amplitudes in Wb) obey

    dA_s/dx = i a_sp|A_p|^2 A_s + i k_si A_p^2 A_i* e^{i dk x}
              + i a_ss|A_s|^2 A_s + i a_si|A_i|^2 A_s - k_s'' A_s
    dA_i/dx = (same with s <-> i)
    dA_p/dx = i a_pp|A_p|^2 A_p + i a_pi|A_i|^2 A_p + i a_ps|A_s|^2 A_p
              + i k_psi A_s A_i A_p* e^{-i dk x} - k_p'' A_p

with ``dk = 2 k_p - k_s - k_i`` the linear mismatch. The complex system is
integrated as six real equations with an adaptive Dormand-Prince 5(4) pair.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace
import cmath
import math
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .device import (
    DeviceParams,
    LossModel,
    SnailOperatingPoint,
    char_impedance,
    dispersion_k,
    loss_k_imag,
    solve_operating_point,
    tan_delta_lookup,
)
from .constants import watt_to_dbm
from .errors import (
    DegenerateFrequency,
    NonFiniteState,
    NumericalError,
    StepSizeUnderflow,
    ValidationError,
)


@dataclass(frozen=True)
class FrequencyTriple:
    omega_p: float
    omega_s: float
    omega_i: float

    def __post_init__(self):
        if min(self.omega_p, self.omega_s, self.omega_i) <= 0:
            raise ValidationError("all three angular frequencies must be positive")
        if not math.isclose(self.omega_s + self.omega_i, 2 * self.omega_p, rel_tol=1e-14):
            raise ValidationError("energy conservation 2 w_p = w_s + w_i violated")

    @classmethod
    def from_pump_signal(cls, f_pump, f_signal):
        """Build the triple from pump and signal frequencies in Hz."""
        if not 0 < f_signal < 2 * f_pump:
            raise ValidationError(
                f"signal frequency {f_signal} Hz must lie in (0, 2 f_pump) for a positive idler"
            )
        omega_p = 2 * math.pi * f_pump
        omega_s = 2 * math.pi * f_signal
        # idler by subtraction keeps 2 w_p - w_s - w_i at rounding level
        return cls(omega_p, omega_s, 2 * omega_p - omega_s)

    @classmethod
    def degenerate(cls, omega):
        return cls(omega, omega, omega)


@dataclass(frozen=True)
class NonlinearCoefficients:
    """Kerr, mixing, mismatch and loss coefficients of the coupled-mode equations.

    Kerr and mixing coefficients are in 1/(m Wb^2), ``delta_k`` in rad/m
    and the loss rates in Np/m.
    """

    alpha_pp: float
    alpha_ss: float
    alpha_ii: float
    alpha_sp: float
    alpha_ip: float
    alpha_si: float
    alpha_is: float
    alpha_ps: float
    alpha_pi: float
    kappa_si: float
    kappa_is: float
    kappa_psi: float
    delta_k: float
    loss_p: float
    loss_s: float
    loss_i: float

    def scaled(self, kerr=1.0, mixing=1.0, loss=1.0):
        """Copy with Kerr, mixing and loss terms multiplied by the given factors."""
        return replace(
            self,
            **{n: getattr(self, n) * kerr for n in _KERR_FIELDS},
            **{n: getattr(self, n) * mixing for n in _MIXING_FIELDS},
            **{n: getattr(self, n) * loss for n in _LOSS_FIELDS},
        )

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


_KERR_FIELDS = (
    "alpha_pp", "alpha_ss", "alpha_ii", "alpha_sp", "alpha_ip",
    "alpha_si", "alpha_is", "alpha_ps", "alpha_pi",
)
_MIXING_FIELDS = ("kappa_si", "kappa_is", "kappa_psi")
_LOSS_FIELDS = ("loss_p", "loss_s", "loss_i")


@dataclass(frozen=True)
class EnvelopeState:
    x: float
    a_p: complex
    a_s: complex
    a_i: complex

    def as_array(self):
        return np.array([self.a_p, self.a_s, self.a_i], dtype=complex)


@dataclass(frozen=True)
class IntegratorConfig:
    """Settings of the adaptive Runge-Kutta 5(4) integrator.

    ``abs_tol`` is in Wb; flux amplitudes at the device input are of order
    1e-16 Wb for the pump and smaller for the signal.
    """

    rel_tol: float = 1e-9
    abs_tol: float = 1e-24
    max_step: float = math.inf
    dense_output_points: int = 2
    method: str = "RK45"

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValidationError("rel_tol and abs_tol must be > 0")
        if self.dense_output_points < 2:
            raise ValidationError("dense_output_points must be >= 2")
        if not self.max_step > 0:
            raise ValidationError("max_step must be > 0")
        if self.method != "RK45":
            raise ValidationError("only the embedded RK 5(4) pair 'RK45' is supported")

    def tightened(self, factor=0.5):
        return replace(self, rel_tol=self.rel_tol * factor, abs_tol=self.abs_tol * factor)


class Trajectory(Sequence):
    """Envelope samples along the device; indexing yields ``EnvelopeState``."""

    def __init__(self, x, amplitudes):
        self.x = np.asarray(x, dtype=float)
        # rows: pump, signal, idler
        self.amplitudes = np.asarray(amplitudes, dtype=complex)

    def __len__(self):
        return self.x.size

    def __getitem__(self, index):
        if isinstance(index, slice):
            return Trajectory(self.x[index], self.amplitudes[:, index])
        a_p, a_s, a_i = self.amplitudes[:, index]
        return EnvelopeState(float(self.x[index]), complex(a_p), complex(a_s), complex(a_i))

    @property
    def a_p(self):
        return self.amplitudes[0]

    @property
    def a_s(self):
        return self.amplitudes[1]

    @property
    def a_i(self):
        return self.amplitudes[2]

    @property
    def final(self):
        return self[-1]


def nonlinear_coefficients(
    freqs: FrequencyTriple,
    op_point: SnailOperatingPoint,
    params: DeviceParams,
    losses: LossModel,
    p_sig: float,
    p_pump: float,
) -> NonlinearCoefficients:
    """Evaluate the coupled-mode coefficients for one frequency triple.

    ``p_sig`` and ``p_pump`` are input powers in W; they only select the
    loss tangents (signal and idler use the table at the signal power).
    """
    w_p, w_s, w_i = freqs.omega_p, freqs.omega_s, freqs.omega_i
    k_p, k_s, k_i = (dispersion_k(w, op_point, params) for w in (w_p, w_s, w_i))
    L = op_point.inductance
    a = params.cell_length
    pref = op_point.kerr_scale * a**4 / (params.ground_capacitance * params.critical_current**2 * L**3)

    def cross(k_j, k_m, w_j):
        return pref * k_m**2 * k_j**3 / (8.0 * w_j**2)

    def self_(k_j, w_j):
        return pref * k_j**5 / (16.0 * w_j**2)

    mix = pref * k_s * k_i * k_p**2
    p_sig_dbm = watt_to_dbm(p_sig) if p_sig > 0 else -math.inf
    p_pump_dbm = watt_to_dbm(p_pump) if p_pump > 0 else -math.inf
    tan_p = tan_delta_lookup(losses, "pump", p_pump_dbm)
    tan_s = tan_delta_lookup(losses, "signal", p_sig_dbm)
    tan_i = tan_delta_lookup(losses, "idler", p_sig_dbm)
    return NonlinearCoefficients(
        alpha_pp=self_(k_p, w_p),
        alpha_ss=self_(k_s, w_s),
        alpha_ii=self_(k_i, w_i),
        alpha_sp=cross(k_s, k_p, w_s),
        alpha_ip=cross(k_i, k_p, w_i),
        alpha_si=cross(k_s, k_i, w_s),
        alpha_is=cross(k_i, k_s, w_i),
        alpha_ps=cross(k_p, k_s, w_p),
        alpha_pi=cross(k_p, k_i, w_p),
        kappa_si=mix * (2 * k_p - k_i) / (16.0 * w_s**2),
        kappa_is=mix * (2 * k_p - k_s) / (16.0 * w_i**2),
        kappa_psi=mix * (k_s + k_i - k_p) / (8.0 * w_p**2),
        delta_k=2 * k_p - k_s - k_i,
        loss_p=loss_k_imag(k_p, tan_p),
        loss_s=loss_k_imag(k_s, tan_s),
        loss_i=loss_k_imag(k_i, tan_i),
    )


def initial_state(p_sig, p_pump, freqs: FrequencyTriple, z0) -> EnvelopeState:
    """Input flux amplitudes ``sqrt(P Z0) / omega``, zero phase, no idler."""
    if p_sig < 0 or p_pump < 0:
        raise ValidationError("input powers must be >= 0")
    a_s = math.sqrt(p_sig * z0) / freqs.omega_s
    a_p = math.sqrt(p_pump * z0) / freqs.omega_p
    return EnvelopeState(0.0, complex(a_p), complex(a_s), 0j)


def _make_rhs(c: NonlinearCoefficients):
    a_pp, a_ss, a_ii = c.alpha_pp, c.alpha_ss, c.alpha_ii
    a_sp, a_ip, a_si, a_is, a_ps, a_pi = (
        c.alpha_sp, c.alpha_ip, c.alpha_si, c.alpha_is, c.alpha_ps, c.alpha_pi,
    )
    k_si, k_is, k_psi = c.kappa_si, c.kappa_is, c.kappa_psi
    dk, l_p, l_s, l_i = c.delta_k, c.loss_p, c.loss_s, c.loss_i
    exp = cmath.exp
    isfinite = math.isfinite

    def rhs(x, y):
        ap = complex(y[0], y[1])
        as_ = complex(y[2], y[3])
        ai = complex(y[4], y[5])
        np_ = ap.real * ap.real + ap.imag * ap.imag
        ns = as_.real * as_.real + as_.imag * as_.imag
        ni = ai.real * ai.real + ai.imag * ai.imag
        ph = exp(1j * dk * x)
        ap2 = ap * ap
        dap = 1j * ((a_pp * np_ + a_pi * ni + a_ps * ns) * ap
                    + k_psi * as_ * ai * ap.conjugate() * ph.conjugate()) - l_p * ap
        das = 1j * ((a_sp * np_ + a_ss * ns + a_si * ni) * as_
                    + k_si * ap2 * ai.conjugate() * ph) - l_s * as_
        dai = 1j * ((a_ip * np_ + a_ii * ni + a_is * ns) * ai
                    + k_is * ap2 * as_.conjugate() * ph) - l_i * ai
        out = (dap.real, dap.imag, das.real, das.imag, dai.real, dai.imag)
        if not all(isfinite(v) for v in out):
            raise NonFiniteState(f"non-finite derivative at x = {x:.6g} m")
        return out

    return rhs


def integrate(state0: EnvelopeState, coeffs: NonlinearCoefficients, length: float,
              cfg: IntegratorConfig = IntegratorConfig()) -> Trajectory:
    """Integrate the coupled-mode equations from ``state0.x`` over ``length`` metres.

    The returned trajectory holds ``cfg.dense_output_points`` evenly spaced
    samples, the first at the start and the last at the end of the device.
    """
    if not length > 0:
        raise ValidationError("length must be > 0")
    x0 = state0.x
    x1 = x0 + length
    y0 = np.array([
        state0.a_p.real, state0.a_p.imag,
        state0.a_s.real, state0.a_s.imag,
        state0.a_i.real, state0.a_i.imag,
    ])
    x_eval = np.linspace(x0, x1, cfg.dense_output_points)
    sol = solve_ivp(
        _make_rhs(coeffs), (x0, x1), y0,
        method=cfg.method, t_eval=x_eval,
        rtol=cfg.rel_tol, atol=cfg.abs_tol, max_step=cfg.max_step,
    )
    if sol.status != 0:
        if "step size" in sol.message.lower():
            raise StepSizeUnderflow(sol.message)
        raise NumericalError(sol.message)
    y = sol.y
    if not np.all(np.isfinite(y)):
        raise NonFiniteState("integration produced non-finite amplitudes")
    amplitudes = y[0::2] + 1j * y[1::2]
    return Trajectory(sol.t, amplitudes)


def raw_transmissions(p_sig, p_pump, freqs: FrequencyTriple, device: DeviceParams,
                      losses: LossModel, cfg: IntegratorConfig = IntegratorConfig(),
                      op_point: SnailOperatingPoint | None = None):
    """Signal and pump power transmissions ``|A_j(l) / A_j(0)|^2`` of one run.

    A tone that is not injected gets the loss-only transmission
    ``exp(-2 k'' l)`` so that reference runs remain usable for normalization.
    """
    if freqs.omega_s == freqs.omega_p:
        raise DegenerateFrequency("signal frequency equals pump frequency")
    return run_point(p_sig, p_pump, freqs, device, losses, cfg, op_point)


def run_point(p_sig, p_pump, freqs, device, losses, cfg=IntegratorConfig(), op_point=None):
    """Same as :func:`raw_transmissions` without the degenerate-frequency guard."""
    if op_point is None:
        op_point = solve_operating_point(device)
    coeffs = nonlinear_coefficients(freqs, op_point, device, losses, p_sig, p_pump)
    z0 = char_impedance(op_point, device)
    state0 = initial_state(p_sig, p_pump, freqs, z0)
    traj = integrate(state0, coeffs, device.length, cfg)
    return _ratios(state0, traj.final, coeffs, device.length)


def _ratios(state0, final, coeffs, length):
    if state0.a_s != 0:
        s21_s = abs(final.a_s / state0.a_s) ** 2
    else:
        s21_s = math.exp(-2 * coeffs.loss_s * length)
    if state0.a_p != 0:
        s21_p = abs(final.a_p / state0.a_p) ** 2
    else:
        s21_p = math.exp(-2 * coeffs.loss_p * length)
    return s21_s, s21_p
