"""Static SVG figures of sweeps, compression summaries and stability maps."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed hash salt and no date stamp keep the SVG text reproducible
plt.rcParams["svg.hashsalt"] = "twpa"
_META = {"Date": None}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)


def plot_trajectory(traj, cell_length, path):
    """Power-like ``|A_j|^2`` of the three tones along the line."""
    fig, ax = plt.subplots(figsize=(6, 4))
    cells = traj.x / cell_length
    for row, label in zip(traj.amplitudes, ("pump", "signal", "idler")):
        ax.plot(cells, np.abs(row) ** 2, label=label)
    ax.set_yscale("log")
    ax.set_xlabel("cell index")
    ax.set_ylabel(r"$|A|^2$ (Wb$^2$)")
    ax.legend()
    _save(fig, path)


def plot_surface(surface, path):
    """Gain and pump transmission maps versus signal frequency and power."""
    f = surface.frequencies / 1e9
    p = surface.powers
    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
    for ax, data, title in zip(axes, (surface.gain_db, surface.pump_s21_db),
                               ("signal gain (dB)", "pump S21 (dB)")):
        mesh = ax.pcolormesh(f, p, data, shading="nearest")
        fig.colorbar(mesh, ax=ax)
        ax.set_title(title)
        ax.set_xlabel("signal frequency (GHz)")
    axes[0].set_ylabel("signal power (dBm)")
    _save(fig, path)


def plot_summary(summary, path):
    f = summary.frequencies / 1e9
    fig, axes = plt.subplots(3, 1, figsize=(6, 8), sharex=True)
    axes[0].plot(f, summary.p1db_dbm, "o-", ms=3)
    axes[0].set_ylabel("P1dB (dBm)")
    axes[1].plot(f, summary.pout_at_p1db_dbm, "o-", ms=3)
    axes[1].set_ylabel("Pout at P1dB (dBm)")
    axes[2].plot(f, summary.pump_s21_at_p1db_db, "o-", ms=3)
    axes[2].set_ylabel("pump S21 at P1dB (dB)")
    axes[2].set_xlabel("signal frequency (GHz)")
    _save(fig, path)


def plot_stability(smap, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    mesh = ax.pcolormesh(smap.frequencies / 1e9, smap.positions, smap.gain_db, shading="nearest")
    fig.colorbar(mesh, ax=ax, label="signal gain (dB)")
    ax.set_xlabel("signal frequency (GHz)")
    ax.set_ylabel("cell index")
    _save(fig, path)


def plot_analytic(powers_dbm, gains_db, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(powers_dbm, gains_db)
    ax.axhline(gains_db[0] - 1.0, ls="--", c="k", lw=0.8)
    ax.set_xlabel("signal power (dBm)")
    ax.set_ylabel("gain (dB)")
    _save(fig, path)


def plot_profiles(profiles, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    for prof in profiles:
        ax.plot(prof.frequencies / 1e9, 20 * np.log10(np.abs(prof.s21)),
                label=f"{prof.power_dbm:.1f} dBm")
    ax.set_xlabel("frequency (GHz)")
    ax.set_ylabel("|S21| (dB)")
    if len(profiles) <= 10:
        ax.legend(fontsize="small")
    _save(fig, path)
