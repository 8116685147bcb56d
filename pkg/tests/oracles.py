"""Independent reference computations used by the tests.

Written as straight-line code from the physical formulas, sharing nothing
with the package except the input numbers. High-precision arithmetic uses
mpmath; the frozen-pump gain uses a dense matrix exponential.
"""
import math

import mpmath as mp
import numpy as np
from scipy.linalg import expm

mp.mp.dps = 40

HBAR = mp.mpf("6.62607015e-34") / (2 * mp.pi)
E_CHARGE = mp.mpf("1.602176634e-19")
KB = mp.mpf("1.380649e-23")
PHI0_RED = HBAR / (2 * E_CHARGE)
PHI0 = 2 * mp.pi * PHI0_RED

TABLE_ONE = dict(
    N=700, a=mp.mpf("8.7e-6"), r=mp.mpf("0.062"), Ic=mp.mpf("1.4e-6"),
    CJ=mp.mpf("31e-15"), Cg=mp.mpf("223.5e-15"),
)


def bias_phase_scan(r, phi_ext, n=10**6):
    """Brute-force zero of r sin(phi) + sin((phi - phi_ext)/3) on a fine grid."""
    phi = np.linspace(phi_ext - np.pi, phi_ext + np.pi, n + 1)
    f = r * np.sin(phi) + np.sin((phi - phi_ext) / 3)
    i = np.flatnonzero(np.sign(f[:-1]) != np.sign(f[1:]))[0]
    # one secant step inside the bracketing cell
    return phi[i] - f[i] * (phi[i + 1] - phi[i]) / (f[i + 1] - f[i])


def expansion(r, phi, phi_ext):
    r = mp.mpf(r)
    phi = mp.mpf(phi)
    phi_ext = mp.mpf(phi_ext)
    alpha = r * mp.cos(phi) + mp.cos((phi - phi_ext) / 3) / 3
    gamma = (r * mp.cos(phi) + mp.cos((phi - phi_ext) / 3) / 27) / 6
    return alpha, gamma


def reference_point():
    """alpha, gamma, L, xi, Z0 at half a flux quantum (bias phase exactly pi)."""
    p = TABLE_ONE
    alpha, gamma = expansion(p["r"], mp.pi, mp.pi)
    L = PHI0_RED / (alpha * p["Ic"])
    xi = 6 * gamma / alpha**3
    z0 = mp.sqrt(L / p["Cg"])
    return alpha, gamma, L, xi, z0


def wavevector(f, L, Cg=TABLE_ONE["Cg"], CJ=TABLE_ONE["CJ"], a=TABLE_ONE["a"]):
    w = 2 * mp.pi * mp.mpf(f)
    return w * mp.sqrt(L * Cg) / (a * mp.sqrt(1 - L * CJ * w**2))


def coefficients(f_p, f_s, L, xi, Cg=TABLE_ONE["Cg"], Ic=TABLE_ONE["Ic"], a=TABLE_ONE["a"]):
    """The twelve Kerr / mixing coefficients and the linear mismatch."""
    f_i = 2 * mp.mpf(f_p) - mp.mpf(f_s)
    wp, ws, wi = (2 * mp.pi * mp.mpf(f) for f in (f_p, f_s, f_i))
    kp, ks, ki = (wavevector(f, L) for f in (f_p, f_s, f_i))
    D = Cg * Ic**2 * L**3
    c = xi * a**4 / D
    out = {}
    out["alpha_pp"] = c * kp**5 / (16 * wp**2)
    out["alpha_ss"] = c * ks**5 / (16 * ws**2)
    out["alpha_ii"] = c * ki**5 / (16 * wi**2)
    out["alpha_sp"] = c * kp**2 * ks**3 / (8 * ws**2)
    out["alpha_ip"] = c * kp**2 * ki**3 / (8 * wi**2)
    out["alpha_si"] = c * ki**2 * ks**3 / (8 * ws**2)
    out["alpha_is"] = c * ks**2 * ki**3 / (8 * wi**2)
    out["alpha_ps"] = c * ks**2 * kp**3 / (8 * wp**2)
    out["alpha_pi"] = c * ki**2 * kp**3 / (8 * wp**2)
    out["kappa_si"] = c * ks * ki * kp**2 * (2 * kp - ki) / (16 * ws**2)
    out["kappa_is"] = c * ks * ki * kp**2 * (2 * kp - ks) / (16 * wi**2)
    out["kappa_psi"] = c * ks * ki * kp**2 * (ks + ki - kp) / (8 * wp**2)
    out["delta_k"] = 2 * kp - ks - ki
    return out


def invert_analytic_gain(g_lin, p_pump_w, target_db=-1.0, tol_db=1e-6):
    """Bisection for the signal power (dBm) where G/g_lin reaches ``target_db``."""
    lo, hi = -200.0, 0.0

    def drop(p_dbm):
        p = 1e-3 * 10 ** (p_dbm / 10)
        return 10 * math.log10(1 / (1 + 2 * g_lin * p / p_pump_w))

    while True:
        mid = 0.5 * (lo + hi)
        d = drop(mid)
        if abs(d - target_db) < tol_db:
            return mid
        if d > target_db:
            lo = mid
        else:
            hi = mid


def frozen_pump_gain(a_p0, length, alpha_pp, alpha_sp, alpha_ip, kappa_si, kappa_is, delta_k):
    """Linearized signal power gain for an undepleted pump with self-phase modulation.

    In the frame rotating with half the pump-induced phase, the pair
    (B_s, conj(B_i)) obeys a constant-coefficient linear system.
    """
    P = abs(a_p0) ** 2
    theta = 0.5 * (2 * alpha_pp * P + delta_k)
    A2 = a_p0**2
    M = np.array([
        [1j * (alpha_sp * P - theta), 1j * kappa_si * A2],
        [-1j * kappa_is * np.conj(A2), -1j * (alpha_ip * P - theta)],
    ])
    v = expm(M * length) @ np.array([1.0, 0.0])
    return abs(v[0]) ** 2
