"""Optional report figures rendered to PNG files next to the CSV output."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def profile_figure(times, states, path) -> None:
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    picks = np.unique(np.linspace(0, len(states) - 1, 6).astype(int))
    for k in picks:
        ax.plot(states[k].xs, states[k].values, label=f"t = {times[k]:.3g}")
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def energy_figure(report, path) -> None:
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.plot(report.times, report.energy, marker="o", ms=3, label="energy")
    if not np.array_equal(report.modified_energy, report.energy):
        ax.plot(report.times, report.modified_energy, marker="s", ms=3,
                label="modified energy")
    ax.set_xlabel("t")
    ax.set_ylabel("E")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def wave_figure(wave, path) -> None:
    xs, us = wave.profile
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.plot(xs, us)
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    ax.set_title(wave.kind.replace("_", " "))
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def limits_figure(rows, path) -> None:
    ells = [r.ell for r in rows]
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.loglog(ells, [r.l1_distance for r in rows], marker="o",
              label="L1 distance")
    ax.loglog(ells, [max(r.mu_proxy, 1e-300) for r in rows], marker="s",
              label="mu proxy")
    ax.loglog(ells, [max(r.nu_gap, 1e-300) for r in rows], marker="^",
              label="nu gap")
    ax.set_xlabel("kernel width")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
