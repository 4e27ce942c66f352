"""The three figure kinds: arrival-time distribution with the simulated
emission rate, the correlation comb with its noise band, and the
emission-profile fit."""

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .reader import read_csv, read_json

_STYLE = {
    "figure.dpi": 120,
    "savefig.dpi": 120,
    "font.size": 9,
    "axes.linewidth": 0.8,
    "svg.hashsalt": "plotview",
}


def _save(fig, out_path):
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    # no metadata so the bytes depend only on the inputs
    fig.savefig(out, metadata={"Software": None})
    plt.close(fig)
    return out


def plot_arrival(in_dir, out_path):
    """Measured-style arrival histogram overlaid with the simulated
    emission rate, pump window shaded."""
    arr = read_csv(Path(in_dir) / "arrival.csv", "arrival")
    flux = read_csv(Path(in_dir) / "emission_flux.csv", "emission_flux")
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5.2, 3.2))
        if arr["time_us"].size:
            width = (arr["time_us"][1] - arr["time_us"][0]
                     if arr["time_us"].size > 1 else 0.1)
            ax.bar(arr["time_us"], arr["counts"], width=width,
                   color="0.75", label="all clicks")
            ax.bar(arr["time_us"], arr["counts_strong"], width=width,
                   color="C0", label="strongly coupled")
        ax2 = ax.twinx()
        if flux["time_us"].size:
            ax2.plot(flux["time_us"], flux["flux_per_s"] / 1e6, "C3-",
                     lw=1.2, label="simulated emission rate")
            on = flux["time_us"][flux["flux_per_s"] > 0]
            if on.size:
                ax.axvspan(0.0, 2.0, color="C1", alpha=0.08)
        ax.set_xlabel("time within period (us)")
        ax.set_ylabel("clicks per bin")
        ax2.set_ylabel("photons / us")
        h1, l1 = ax.get_legend_handles_labels()
        h2, l2 = ax2.get_legend_handles_labels()
        ax.legend(h1 + h2, l1 + l2, fontsize=7, loc="upper right")
        ax.set_title("photon arrival-time distribution")
        fig.tight_layout()
        return _save(fig, out_path)


def plot_correlation(in_dir, out_path):
    """Noise-subtracted correlation comb with the flat detector-noise
    band hatched."""
    g2 = read_csv(Path(in_dir) / "g2.csv", "g2")
    floor = 0.0
    summary_path = Path(in_dir) / "summary.json"
    if summary_path.exists():
        doc = read_json(summary_path, "summary")
        floor = doc.get("g2_noise_floor") or 0.0
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5.6, 3.2))
        if g2["lag_us"].size:
            width = (g2["lag_us"][1] - g2["lag_us"][0]
                     if g2["lag_us"].size > 1 else 0.1)
            ax.bar(g2["lag_us"], g2["g2"], width=width, color="C0",
                   label="g2")
            if floor:
                ax.fill_between([g2["lag_us"][0], g2["lag_us"][-1]],
                                0.0, floor, hatch="////", facecolor="none",
                                edgecolor="0.4", lw=0.5,
                                label="detector-noise correlations")
        ax.set_xlabel("lag (us)")
        ax.set_ylabel("second-order correlation")
        ax.legend(fontsize=7, loc="upper right")
        ax.set_title("photon-stream cross-correlation")
        fig.tight_layout()
        return _save(fig, out_path)


def plot_pemit(in_dir, out_path):
    """Fitted Gaussian emission profile with the conditional-probability
    peaks it was deconvolved from."""
    fit = read_json(Path(in_dir) / "pemit_fit.json", "pemit_fit")
    conds = read_json(Path(in_dir) / "conditionals.json", "conditionals")
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(1, 2, figsize=(7.2, 3.0))
        lags = np.asarray(conds.get("lags_periods", []), dtype=float)
        probs = np.asarray(conds.get("probabilities", []), dtype=float)
        if lags.size:
            ax[0].plot(lags, probs * 100, "o-")
        ax[0].set_xlabel("pulse lag")
        ax[0].set_ylabel("conditional probability (%)")
        ax[0].set_title("comb peak areas")
        amp, sigma_um = fit.get("amplitude"), fit.get("sigma_z_um")
        if amp is not None and sigma_um is not None:
            z = np.linspace(-3 * sigma_um, 3 * sigma_um, 301)
            ax[1].plot(z, amp * np.exp(-(z / sigma_um) ** 2))
            ax[1].set_title(f"P_emit(z) = {amp:.2f} "
                            f"exp[-(z/{sigma_um:.1f} um)^2]")
        ax[1].set_xlabel("vertical position z (um)")
        ax[1].set_ylabel("emission probability")
        fig.tight_layout()
        return _save(fig, out_path)
