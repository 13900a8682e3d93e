"""Final mix rendering and analysis artifacts.

Renders the winning parameters to stems and a clip-protected stereo mix,
rebuilds the loudness table (per track before/after plus a total row),
and serializes everything: ``mix.wav``, a versioned ``report.json``, CSVs
for the objective trace, long-term average spectra and source positions,
and matching PNG figures.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import AnalysisError, InvariantError, SilentTrackError
from .effects import EffectParams, render_track
from .loudness import measure_lufs, normalize_to_target
from .masking import MaskingReport, mix_masking_report
from .optimizer import ObjectiveTrace
from . import psychoacoustics as psy
from .session_io import Session, StereoBuffer, TrackBuffer, write_wav

REPORT_SCHEMA = 1
PEAK_CEILING = 0.99
_FLOAT_DECIMALS = 6


@dataclass
class LoudnessRow:
    track_id: str
    lufs_before: float | None
    lufs_after: float | None


@dataclass
class SpectrumSummary:
    """Long-term average spectrum of one signal."""

    label: str
    frequency_hz: np.ndarray
    mean_power_db: np.ndarray


@dataclass
class MixResult:
    """Everything the report writer needs about one finished run."""

    mix: StereoBuffer
    per_track_params: dict[str, EffectParams]
    loudness_table: list[LoudnessRow]
    masking_report: MaskingReport
    trace: ObjectiveTrace
    stems: dict[str, StereoBuffer] = field(default_factory=dict)
    scenario: str = ""
    seed: int = 0
    objective_weights: tuple[float, float] = (1.0, 1.0)

    @property
    def combined_objective(self) -> float:
        w_total, w_imbalance = self.objective_weights
        return w_total * self.masking_report.total + w_imbalance * self.masking_report.imbalance


def normalize_session(
    session: Session, target_lufs: float | None = None
) -> tuple[list[TrackBuffer], dict[str, float | None]]:
    """Normalize every track to the session target.

    Returns the gained tracks plus each track's pre-gain loudness; silent
    tracks pass through unchanged with a ``None`` marker instead of failing
    the whole session.
    """
    target = session.manifest.target_lufs if target_lufs is None else target_lufs
    normalized: list[TrackBuffer] = []
    before: dict[str, float | None] = {}
    for track in session.tracks:
        try:
            gained, measurement = normalize_to_target(track, target)
        except SilentTrackError:
            normalized.append(track)
            before[track.track_id] = None
            continue
        normalized.append(gained)
        before[track.track_id] = measurement.integrated_lufs
    return normalized, before


def render_mix(
    session: Session,
    best_params: Sequence[EffectParams],
    *,
    normalized_tracks: list[TrackBuffer] | None = None,
    lufs_before: dict[str, float | None] | None = None,
    trace: ObjectiveTrace | None = None,
    table: psy.BandTable | None = None,
    seed: int = 0,
    objective_weights: tuple[float, float] = (1.0, 1.0),
) -> MixResult:
    """Render stems with the winning parameters and assemble the final mix.

    The mix is the plain sum of the stems; if its peak exceeds the ceiling a
    single global gain pulls it back, preserving the balance the optimizer
    chose. Per-track "after" loudness is measured on the pre-sum stems.
    """
    if len(best_params) != len(session.tracks):
        raise InvariantError("one EffectParams per track required")
    if normalized_tracks is None:
        normalized_tracks, lufs_before = normalize_session(session)
    if lufs_before is None:
        lufs_before = {
            t.track_id: measure_lufs(t).integrated_lufs for t in session.tracks
        }

    stems = {
        track.track_id: render_track(track, params)
        for track, params in zip(normalized_tracks, best_params)
    }
    left = np.sum([s.left for s in stems.values()], axis=0)
    right = np.sum([s.right for s in stems.values()], axis=0)
    mix = StereoBuffer(left, right, session.tracks[0].sample_rate_hz)
    if mix.peak > PEAK_CEILING:
        mix = mix.scaled(PEAK_CEILING / mix.peak)

    rows = [
        LoudnessRow(
            track_id=track.track_id,
            lufs_before=lufs_before.get(track.track_id),
            lufs_after=measure_lufs(stems[track.track_id]).integrated_lufs,
        )
        for track in session.tracks
    ]
    raw_sum = TrackBuffer("total", np.sum([t.samples for t in session.tracks], axis=0))
    rows.append(
        LoudnessRow(
            track_id="total",
            lufs_before=measure_lufs(raw_sum).integrated_lufs,
            lufs_after=measure_lufs(mix).integrated_lufs,
        )
    )

    masking = mix_masking_report(list(stems.values()), list(stems.keys()), table)
    return MixResult(
        mix=mix,
        per_track_params={
            track.track_id: params for track, params in zip(session.tracks, best_params)
        },
        loudness_table=rows,
        masking_report=masking,
        trace=trace or ObjectiveTrace(),
        stems=stems,
        scenario=session.manifest.scenario,
        seed=seed,
        objective_weights=objective_weights,
    )


def long_term_average_spectrum(
    samples: np.ndarray | StereoBuffer | TrackBuffer,
    label: str = "",
    sample_rate_hz: int = 48000,
    fft_size: int = 2048,
) -> SpectrumSummary:
    """Mean power spectrum over Hann frames with 50 % overlap, in dB.

    Power is normalized so a full-scale sine reads about 0 dB; the 1e-12
    floor keeps silence finite at -120 dB.
    """
    if isinstance(samples, StereoBuffer):
        samples = 0.5 * (samples.left + samples.right)
    elif isinstance(samples, TrackBuffer):
        samples = samples.samples
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size < fft_size:
        raise AnalysisError(f"need at least {fft_size} samples for a spectrum")
    window = 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(fft_size) / (fft_size - 1)))
    frames = np.lib.stride_tricks.sliding_window_view(samples, fft_size)[:: fft_size // 2]
    power = np.abs(np.fft.rfft(frames * window, axis=1)) ** 2
    scale = (window.sum() / 2.0) ** 2
    mean_power = power.mean(axis=0) / scale
    return SpectrumSummary(
        label=label,
        frequency_hz=np.fft.rfftfreq(fft_size, 1.0 / sample_rate_hz),
        mean_power_db=10.0 * np.log10(np.maximum(mean_power, psy.ENERGY_FLOOR)),
    )


def _round_floats(value):
    if isinstance(value, float):
        return round(value, _FLOAT_DECIMALS)
    if isinstance(value, dict):
        return {k: _round_floats(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round_floats(v) for v in value]
    return value


def report_payload(result: MixResult) -> dict:
    """The report.json document as a plain dict (floats rounded to 6 places)."""
    masking = result.masking_report
    payload = {
        "schema": REPORT_SCHEMA,
        "scenario": result.scenario,
        "seed": result.seed,
        "iterations": len(result.trace.best_values),
        "loudness_table": [
            {
                "track_id": row.track_id,
                "lufs_before": row.lufs_before,
                "lufs_after": row.lufs_after,
            }
            for row in result.loudness_table
        ],
        "params": {
            track_id: params.to_mapping()
            for track_id, params in result.per_track_params.items()
        },
        "masking": {
            "per_track": [
                {
                    "track_id": m.track_id,
                    "m_n": m.score,
                    "channel_scores": list(m.channel_scores),
                    "active_frames": m.active_frames,
                    "note": m.note,
                    "per_frame": [float(v) for v in m.per_frame],
                    "per_band_msr_db": [float(v) for v in m.per_band_msr_db],
                }
                for m in masking.per_track
            ],
            "m_total": masking.total,
            "m_diff": masking.imbalance,
        },
        "objective": {
            "m_total": masking.total,
            "m_diff": masking.imbalance,
            "combined": result.combined_objective,
        },
    }
    return _round_floats(payload)


def _safe_name(track_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", track_id)


def emit_report(result: MixResult, out_dir: str | Path, *, make_plots: bool = True) -> list[Path]:
    """Write all run artifacts into ``out_dir`` (created if missing)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    mix_path = out_dir / "mix.wav"
    write_wav(result.mix, mix_path)
    written.append(mix_path)

    report_path = out_dir / "report.json"
    report_path.write_text(
        json.dumps(report_payload(result), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    written.append(report_path)

    trace_path = out_dir / "trace.csv"
    with trace_path.open("w", encoding="utf-8") as fh:
        fh.write("iteration,best_objective\n")
        for i, value in enumerate(result.trace.best_values, start=1):
            fh.write(f"{i},{value:.9g}\n")
    written.append(trace_path)

    spectra: list[SpectrumSummary] = []
    for track_id, stem in result.stems.items():
        summary = long_term_average_spectrum(stem, label=track_id)
        spectra.append(summary)
        written.append(_write_spectrum(out_dir / f"spectrum_{_safe_name(track_id)}.csv", summary))
    for label, channel in (("mix_left", result.mix.left), ("mix_right", result.mix.right)):
        summary = long_term_average_spectrum(channel, label=label)
        spectra.append(summary)
        written.append(_write_spectrum(out_dir / f"spectrum_{label}.csv", summary))

    positions_path = out_dir / "positions.csv"
    with positions_path.open("w", encoding="utf-8") as fh:
        fh.write("track_id,x,y,z\n")
        for track_id, params in result.per_track_params.items():
            x, y, z = params.position_xyz
            fh.write(f"{track_id},{x:.6f},{y:.6f},{z:.6f}\n")
    written.append(positions_path)

    if make_plots:
        from . import plots

        written.extend(plots.render_all(result, spectra, out_dir))
    return written


def _write_spectrum(path: Path, summary: SpectrumSummary) -> Path:
    with path.open("w", encoding="utf-8") as fh:
        fh.write("freq_hz,power_db\n")
        for freq, power in zip(summary.frequency_hz, summary.mean_power_db):
            fh.write(f"{freq:.3f},{power:.3f}\n")
    return path
