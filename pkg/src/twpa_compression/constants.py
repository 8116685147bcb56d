"""Physical constants (CODATA 2018 exact values via scipy.constants).

Every module reads constants from here so that a single table is in use.
"""
from dataclasses import dataclass
import math

import numpy as np
import scipy.constants as sc


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = sc.hbar
    electron_charge: float = sc.e
    boltzmann: float = sc.k

    @property
    def reduced_flux_quantum(self):
        """phi0 = hbar / 2e, in Wb."""
        return self.hbar / (2.0 * self.electron_charge)

    @property
    def flux_quantum(self):
        """Phi0 = 2 pi phi0, in Wb."""
        return 2.0 * math.pi * self.reduced_flux_quantum


CONSTANTS = PhysicalConstants()

HBAR = CONSTANTS.hbar
KB = CONSTANTS.boltzmann
PHI0_REDUCED = CONSTANTS.reduced_flux_quantum
PHI0 = CONSTANTS.flux_quantum


def _scalar_or_array(out):
    return float(out) if out.ndim == 0 else out


def dbm_to_watt(p_dbm):
    return _scalar_or_array(1e-3 * 10.0 ** (np.asarray(p_dbm, dtype=float) / 10.0))


def watt_to_dbm(p_w):
    return _scalar_or_array(10.0 * np.log10(np.asarray(p_w, dtype=float) / 1e-3))
