"""Figure rendering for reports. Figures are written to files only."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .metrics import phase_errors  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.0,
    "savefig.dpi": 150,
    # fixed metadata keeps repeated renders byte-stable
    "svg.hashsalt": "srfpll",
}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    return path


def plot_bode(omega, mag_db, phase_deg, path, omega_c=None, phi_m=None, corners=()) -> Path:
    """Gain/phase plot of the open loop, marking crossover and corner frequencies."""
    with plt.rc_context(RC):
        fig, (ax_m, ax_p) = plt.subplots(2, 1, sharex=True, figsize=(5.5, 5))
        ax_m.semilogx(omega, mag_db, color="C0")
        ax_m.axhline(0.0, color="k", lw=0.6)
        ax_m.set_ylabel("|H| [dB]")
        ax_p.semilogx(omega, phase_deg, color="C1")
        ax_p.axhline(-180.0, color="k", lw=0.6)
        ax_p.set_ylabel("arg H [deg]")
        ax_p.set_xlabel(r"$\omega$ [rad/s]")
        for w in corners:
            for ax in (ax_m, ax_p):
                ax.axvline(w, color="0.5", ls=":", lw=0.8)
        if omega_c is not None:
            for ax in (ax_m, ax_p):
                ax.axvline(omega_c, color="C3", ls="--", lw=0.8)
            title = rf"$\omega_c$ = {omega_c:.4g} rad/s"
            if phi_m is not None:
                title += rf", $\varphi_m$ = {phi_m:.2f} deg"
            ax_m.set_title(title)
        return _save(fig, path)


def plot_run(trace, out_dir, name: str = "run") -> list[Path]:
    """Angle, frequency and waveform panels for a closed-loop trace."""
    out_dir = Path(out_dir)
    t = trace.t
    paths = []
    with plt.rc_context(RC):
        fig, (ax_a, ax_e) = plt.subplots(2, 1, sharex=True, figsize=(6.5, 4.5))
        if np.isfinite(trace.theta_true).any():
            ax_a.plot(t, trace.theta_true, label=r"$\theta$")
            ax_e.plot(t, phase_errors(trace.theta_star, trace.theta_true), color="C3")
        ax_a.plot(t, trace.theta_star, label=r"$\theta^*$", ls="--")
        ax_a.set_ylim(-0.2, 2 * math.pi + 0.2)
        ax_a.set_ylabel("angle [rad]")
        ax_a.legend(loc="upper right")
        ax_e.set_ylabel(r"wrapped $\Delta\theta$ [rad]")
        ax_e.set_xlabel("t [s]")
        ax_a.set_title(name)
        paths.append(_save(fig, out_dir / f"{name}_angle.png"))

        fig, ax = plt.subplots(figsize=(6.5, 3.2))
        if np.isfinite(trace.omega_true).any():
            ax.plot(t, trace.omega_true, label=r"$\omega$", color="k")
        ax.plot(t, trace.omega_star, label=r"$\omega^*$", alpha=0.7)
        if np.any(trace.omega_tilde != 0):
            ax.plot(t, trace.omega_tilde, label=r"$\tilde\omega$", alpha=0.8)
        ax.set_ylabel("frequency [rad/s]")
        ax.set_xlabel("t [s]")
        ax.legend(loc="best")
        paths.append(_save(fig, out_dir / f"{name}_frequency.png"))

        fig, ax = plt.subplots(figsize=(6.5, 3.2))
        # last three electrical periods, or the last 0.2 s when omega is unknown
        w_end = trace.omega_star[-1]
        span = 3 * 2 * math.pi / w_end if w_end > 1 else 0.2
        sel = t >= t[-1] - span
        ax.plot(t[sel], trace.zbar_a[sel], label=r"$\bar Z_a$")
        ax.plot(t[sel], trace.zbar_a_star[sel], label=r"$\bar Z_a^*$", ls="--")
        ax.set_xlabel("t [s]")
        ax.set_ylabel("normalized phase a")
        ax.legend(loc="upper right")
        paths.append(_save(fig, out_dir / f"{name}_waveform.png"))
    return paths
