"""Gain-compression simulation and calibration toolkit for four-wave-mixing Josephson TWPAs."""
from .calibration import (
    FitResult,
    MagnitudeTrace,
    NoisePowerTrace,
    PhaseTrace,
    fit_dispersion,
    fit_inductance_flux,
    fit_loss_tangent,
    fit_noise_calibration,
    input_line_attenuation,
    k_from_phase,
    n_source,
)
from .cme import (
    EnvelopeState,
    FrequencyTriple,
    IntegratorConfig,
    NonlinearCoefficients,
    Trajectory,
    initial_state,
    integrate,
    nonlinear_coefficients,
    raw_transmissions,
)
from .compression import (
    AnalyticGainModel,
    CompressionSummary,
    StabilityMap,
    analytic_gain,
    analytic_p1db,
    compression_summary,
    extract_p1db,
    stability_map,
)
from .config import RunConfig, load_config
from .constants import CONSTANTS, PhysicalConstants
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
from .reduction import (
    IsoPowerProfile,
    RawVnaDataset,
    band_average_profile,
    iso_power_reconstruct,
    moving_average,
)
from .response import PumpTone, ResponseSurface, SweepGrid, gain_point, sweep

__all__ = [name for name in dir() if not name.startswith("_")]
