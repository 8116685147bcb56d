"""SNAIL-chain device model.

Current-phase relation of the SNAIL, the flux-dependent linear inductance
and Kerr coefficient obtained from its Taylor expansion, the discrete
transmission-line dispersion relation and the dielectric loss model.

All quantities are SI internally. Phases are handled as reduced fluxes
``phi = Phi / phi0`` inside the root finder only.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math
import warnings

import numpy as np

from .constants import PHI0, PHI0_REDUCED
from .errors import (
    AbovePlasmaFrequency,
    ContinuumLimitWarning,
    EmptyTable,
    NonpositiveAlpha,
    NoRoot,
    ValidationError,
)

# phase advance per cell above which the continuum equation of motion is suspect
CONTINUUM_KA_LIMIT = 0.5


@dataclass(frozen=True)
class DeviceParams:
    """Linear and nonlinear parameters of a SNAIL transmission line.

    Parameters
    ----------
    n_cells : int
        Number of SNAIL unit cells ``N``.
    cell_length : float
        Unit cell length ``a`` in m.
    junction_ratio : float
        Small-to-large junction critical current ratio ``r``.
    critical_current : float
        Critical current of the large junctions ``Ic`` in A.
    snail_capacitance : float
        Equivalent SNAIL capacitance ``CJ`` in F.
    ground_capacitance : float
        Ground capacitance per cell ``Cg`` in F.
    external_flux : float
        Flux threading each SNAIL loop in Wb.
    """

    n_cells: int
    cell_length: float
    junction_ratio: float
    critical_current: float
    snail_capacitance: float
    ground_capacitance: float
    external_flux: float

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 1:
            raise ValidationError(f"n_cells must be a positive integer, got {self.n_cells!r}")
        positive = {
            "cell_length": self.cell_length,
            "critical_current": self.critical_current,
            "snail_capacitance": self.snail_capacitance,
            "ground_capacitance": self.ground_capacitance,
        }
        for name, value in positive.items():
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"{name} must be > 0, got {value!r}")
        if not (0.0 <= self.junction_ratio < 1.0):
            raise ValidationError(f"junction_ratio must be in [0, 1), got {self.junction_ratio!r}")
        if not math.isfinite(self.external_flux):
            raise ValidationError("external_flux must be finite")

    @property
    def length(self):
        """Device length ``l = N a`` in m."""
        return self.n_cells * self.cell_length

    @classmethod
    def reference(cls):
        """Parameters of the measured 700-cell device, biased at half a flux quantum."""
        return cls(
            n_cells=700,
            cell_length=8.7e-6,
            junction_ratio=0.062,
            critical_current=1.4e-6,
            snail_capacitance=31e-15,
            ground_capacitance=223.5e-15,
            external_flux=PHI0 / 2,
        )


@dataclass(frozen=True)
class SnailOperatingPoint:
    phase_bias: float  # Wb
    alpha_tilde: float
    gamma_tilde: float
    inductance: float  # H

    @property
    def kerr_scale(self):
        """xi = 6 gamma / alpha^3."""
        return 6.0 * self.gamma_tilde / self.alpha_tilde**3


@dataclass(frozen=True)
class LossModel:
    """Dielectric loss tangents.

    ``signal_table`` holds ``(power_dBm, tan_delta)`` nodes with strictly
    increasing powers; lookups interpolate linearly in dBm and clamp outside
    the table. The pump uses the single ``pump_tan_delta`` value.
    """

    pump_tan_delta: float
    signal_table: tuple = field(default_factory=tuple)

    def __post_init__(self):
        table = tuple((float(p), float(t)) for p, t in self.signal_table)
        object.__setattr__(self, "signal_table", table)
        if not (self.pump_tan_delta >= 0):
            raise ValidationError("pump_tan_delta must be >= 0")
        if any(t < 0 or not math.isfinite(t) for _, t in table):
            raise ValidationError("tan_delta values must be finite and >= 0")
        powers = [p for p, _ in table]
        if any(b <= a for a, b in zip(powers, powers[1:])):
            raise ValidationError("signal_table powers must be strictly increasing")

    @classmethod
    def constant(cls, pump_tan_delta, signal_tan_delta):
        return cls(pump_tan_delta, ((0.0, signal_tan_delta),))

    @classmethod
    def reference(cls):
        # pump value as fitted at the largest power; the signal nodes are a
        # TLS-like power dependence (lower loss at higher power) bracketing it
        return cls(
            pump_tan_delta=2.19e-3,
            signal_table=(
                (-130.0, 3.8e-3),
                (-120.0, 3.6e-3),
                (-110.0, 3.4e-3),
                (-100.0, 3.1e-3),
                (-90.0, 2.8e-3),
            ),
        )

    @property
    def signal_range(self):
        values = [t for _, t in self.signal_table]
        return min(values), max(values)


def snail_current(phi, phi_ext, r):
    """Normalized SNAIL current I / Ic as a function of reduced fluxes."""
    return r * np.sin(phi) + np.sin((phi - phi_ext) / 3.0)


def _snail_current_scalar(phi, phi_ext, r):
    return r * math.sin(phi) + math.sin((phi - phi_ext) / 3.0)


def _snail_current_slope(phi, phi_ext, r):
    return r * math.cos(phi) + math.cos((phi - phi_ext) / 3.0) / 3.0


def _find_phase_root(phi_ext, r, tol=1e-15, max_iter=200):
    lo, hi = phi_ext - math.pi, phi_ext + math.pi
    f_lo, f_hi = _snail_current_scalar(lo, phi_ext, r), _snail_current_scalar(hi, phi_ext, r)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi > 0:
        raise NoRoot(f"current-phase relation does not change sign on [{lo}, {hi}]")
    # bisection down to a narrow bracket, then safeguarded Newton
    for _ in range(max_iter):
        if hi - lo < 1e-3:
            break
        mid = 0.5 * (lo + hi)
        f_mid = _snail_current_scalar(mid, phi_ext, r)
        if f_mid == 0.0:
            return mid
        if f_lo * f_mid < 0:
            hi, f_hi = mid, f_mid
        else:
            lo, f_lo = mid, f_mid
    phi = 0.5 * (lo + hi)
    for _ in range(max_iter):
        f = _snail_current_scalar(phi, phi_ext, r)
        if abs(f) <= tol:
            return phi
        if f_lo * f < 0:
            hi = phi
        else:
            lo, f_lo = phi, f
        slope = _snail_current_slope(phi, phi_ext, r)
        step = f / slope if slope != 0 else math.inf
        candidate = phi - step
        if not (lo < candidate < hi):
            candidate = 0.5 * (lo + hi)
        if candidate == phi:
            return phi
        phi = candidate
    raise NoRoot("root refinement did not converge")


def solve_operating_point(params: DeviceParams) -> SnailOperatingPoint:
    """Solve ``I(Phi*) = 0`` and expand the current-phase relation there.

    Returns the flux bias point with the linear (``alpha_tilde``) and cubic
    (``gamma_tilde``) expansion coefficients and ``L = phi0 / (alpha Ic)``.
    """
    r = params.junction_ratio
    phi_ext = params.external_flux / PHI0_REDUCED
    phi = _find_phase_root(phi_ext, r)
    c_small = r * math.cos(phi)
    c_large = math.cos((phi - phi_ext) / 3.0)
    alpha = c_small + c_large / 3.0
    gamma = (c_small + c_large / 27.0) / 6.0
    if alpha <= 0:
        raise NonpositiveAlpha(f"alpha_tilde = {alpha:.4g} <= 0, inductance undefined")
    inductance = PHI0_REDUCED / (alpha * params.critical_current)
    return SnailOperatingPoint(
        phase_bias=phi * PHI0_REDUCED,
        alpha_tilde=alpha,
        gamma_tilde=gamma,
        inductance=inductance,
    )


def plasma_frequency(op_point, params):
    """Angular frequency 1/sqrt(L CJ) at which the dispersion relation diverges."""
    return 1.0 / math.sqrt(op_point.inductance * params.snail_capacitance)


def dispersion_k(omega, op_point, params, warn=True):
    """Wavevector ``k(omega)`` of the linear SNAIL chain, rad/m.

    Accepts scalars or arrays. Raises ``AbovePlasmaFrequency`` if any
    frequency is at or above the plasma frequency.
    """
    L = op_point.inductance
    w = np.asarray(omega, dtype=float)
    denom = 1.0 - L * params.snail_capacitance * w**2
    if np.any(denom <= 0):
        raise AbovePlasmaFrequency(
            f"omega >= plasma frequency {plasma_frequency(op_point, params):.6g} rad/s"
        )
    k = w * math.sqrt(L * params.ground_capacitance) / (params.cell_length * np.sqrt(denom))
    if warn and np.any(k * params.cell_length > CONTINUUM_KA_LIMIT):
        warnings.warn(
            f"k*a = {float(np.max(k)) * params.cell_length:.3f} rad exceeds "
            f"{CONTINUUM_KA_LIMIT}; continuum approximation is marginal",
            ContinuumLimitWarning,
            stacklevel=2,
        )
    return float(k) if k.ndim == 0 else k


def loss_k_imag(k, tan_delta):
    """Imaginary wavevector ``k'' = tan(delta) k / 2`` in Np/m."""
    return tan_delta * k / 2.0


def char_impedance(op_point, params):
    return math.sqrt(op_point.inductance / params.ground_capacitance)


def tan_delta_lookup(model: LossModel, role: str, power_dbm: float) -> float:
    """Loss tangent seen by a tone.

    The pump always gets ``model.pump_tan_delta``. Signal and idler
    interpolate the fitted table at the signal input power.
    """
    if role == "pump":
        return model.pump_tan_delta
    if role not in ("signal", "idler"):
        raise ValueError(f"unknown role {role!r}")
    if not model.signal_table:
        raise EmptyTable("signal loss table is empty")
    powers = [p for p, _ in model.signal_table]
    values = [t for _, t in model.signal_table]
    return float(np.interp(power_dbm, powers, values))
