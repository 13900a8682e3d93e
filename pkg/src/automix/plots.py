"""Matplotlib figures rendered next to the CSV report data."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .effects import POSITION_RANGE


def save_convergence_plot(trace_values: Sequence[float], path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6.0, 3.5))
    if len(trace_values):
        ax.plot(range(1, len(trace_values) + 1), trace_values, lw=1.2)
    ax.set_xlabel("iteration")
    ax.set_ylabel("best objective")
    ax.set_title("Search convergence")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_spectrum_plot(spectra, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6.0, 3.5))
    for summary in spectra:
        ax.semilogx(summary.frequency_hz[1:], summary.mean_power_db[1:], lw=1.0,
                    label=summary.label)
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel("mean power (dB)")
    ax.set_title("Long-term average spectra")
    ax.set_xlim(20, 20000)
    ax.grid(alpha=0.3, which="both")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_positions_plot(positions: dict[str, tuple[float, float, float]], path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    for track_id, (x, _y, z) in positions.items():
        ax.scatter(x, z, s=40)
        ax.annotate(track_id, (x, z), textcoords="offset points", xytext=(5, 5), fontsize=8)
    ax.scatter(0.0, 0.0, marker="^", s=60, color="black")
    ax.annotate("listener", (0.0, 0.0), textcoords="offset points", xytext=(5, -12), fontsize=8)
    lo, hi = POSITION_RANGE
    pad = 0.3
    ax.set_xlim(lo - pad, hi + pad)
    ax.set_ylim(lo - pad, hi + pad)
    ax.set_xlabel("x (left/right)")
    ax.set_ylabel("z (front)")
    ax.set_title("Source positions")
    ax.grid(alpha=0.3)
    ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_all(result, spectra, out_dir: Path) -> list[Path]:
    """Standard figure set for one run: convergence, spectra, positions."""
    out_dir = Path(out_dir)
    return [
        save_convergence_plot(result.trace.best_values, out_dir / "trace.png"),
        save_spectrum_plot(spectra, out_dir / "spectra.png"),
        save_positions_plot(
            {tid: p.position_xyz for tid, p in result.per_track_params.items()},
            out_dir / "positions.png",
        ),
    ]
