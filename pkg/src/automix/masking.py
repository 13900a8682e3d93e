"""Cross-track masking metrics.

For every track the masker is the time-domain sum of all accompanying
tracks; both masker and target run through the full psychoacoustic chain.
Per band, the masker-to-signal ratio (threshold over signal energy, in dB)
is positive where the track is inaudible; masked bands contribute that ratio
capped at 20 dB, scaled to [0, 1], and the per-frame sums are averaged over
the frames where the track is actually active.

Stereo candidates are scored per channel and combined with the better-ear
rule: a track counts as masked only to the extent it is masked in the
channel where it survives best. This is what lets spatial separation reduce
the mix objective.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import AnalysisError, InvariantError
from . import psychoacoustics as psy
from .session_io import StereoBuffer

# A band fully counts as masked once the threshold exceeds the signal by
# this many dB; smaller excesses count proportionally.
MSR_CAP_DB = 20.0

INACTIVE_NOTE = "track inactive"


@dataclass
class TrackMaskingMetric:
    """Masking score for one track against the rest of a candidate mix."""

    track_id: str
    score: float  # mean over active frames of the per-frame masked-band sums
    per_band_msr_db: np.ndarray  # frame-averaged masker-to-signal ratio per band
    per_frame: np.ndarray = field(default_factory=lambda: np.zeros(0))
    active_frames: int = 0
    note: str = ""
    channel_scores: tuple[float, ...] = ()


@dataclass
class MaskingReport:
    """Per-track scores plus the two scalars the optimizer consumes."""

    per_track: list[TrackMaskingMetric]
    total: float  # sum of squared per-track scores
    imbalance: float  # largest pairwise score difference

    @property
    def scores(self) -> list[float]:
        return [m.score for m in self.per_track]


def msr_per_band(threshold: np.ndarray, signal: np.ndarray) -> np.ndarray:
    """Masker-to-signal ratio in dB; positive where the band is masked."""
    t = np.maximum(np.asarray(threshold, dtype=np.float64), psy.ENERGY_FLOOR)
    s = np.maximum(np.asarray(signal, dtype=np.float64), psy.ENERGY_FLOOR)
    return 10.0 * np.log10(t / s)


def track_masking_metric(
    msr_db: np.ndarray,
    signal: np.ndarray,
    threshold: np.ndarray,
    *,
    track_id: str = "",
    active: np.ndarray | None = None,
) -> TrackMaskingMetric:
    """Reduce per-band ratios to one score for a track.

    Only bands whose signal energy lies strictly below the threshold count;
    each contributes ``min(msr / 20 dB, 1)``. Frames outside ``active`` are
    excluded from the averages; with no active frames the score is zero and
    the metric is annotated as inactive.
    """
    msr_db = np.atleast_2d(np.asarray(msr_db, dtype=np.float64))
    signal = np.atleast_2d(np.asarray(signal, dtype=np.float64))
    threshold = np.atleast_2d(np.asarray(threshold, dtype=np.float64))
    if not msr_db.shape == signal.shape == threshold.shape:
        raise InvariantError("msr, signal and threshold frames must align")

    masked = signal < threshold
    contributions = np.where(masked, np.minimum(msr_db / MSR_CAP_DB, 1.0), 0.0)
    per_frame = contributions.sum(axis=1)

    if active is None:
        active = np.ones(per_frame.size, dtype=bool)
    else:
        active = np.asarray(active, dtype=bool)
    n_active = int(active.sum())
    if n_active == 0:
        return TrackMaskingMetric(
            track_id=track_id,
            score=0.0,
            per_band_msr_db=np.zeros(msr_db.shape[1]),
            per_frame=per_frame,
            active_frames=0,
            note=INACTIVE_NOTE,
        )
    return TrackMaskingMetric(
        track_id=track_id,
        score=float(per_frame[active].mean()),
        per_band_msr_db=msr_db[active].mean(axis=0),
        per_frame=per_frame,
        active_frames=n_active,
    )


def accompaniment_threshold(
    target_index: int,
    track_signals: Sequence[np.ndarray],
    table: psy.BandTable | None = None,
) -> np.ndarray:
    """Masking threshold one track faces from the sum of all the others.

    The accompanying tracks are summed in the time domain before analysis, so
    the masker is the composite signal, not a sum of band energies.
    """
    if len(track_signals) < 2:
        raise AnalysisError("accompaniment requires at least 2 tracks")
    if not 0 <= target_index < len(track_signals):
        raise IndexError(f"target index {target_index} out of range")
    table = table or psy.band_table()
    composite = np.sum(
        [np.asarray(s, dtype=np.float64) for i, s in enumerate(track_signals) if i != target_index],
        axis=0,
    )
    return psy.masking_threshold(psy.excitation_frames(composite, table), table)


def combine_track_scores(scores: Sequence[float]) -> tuple[float, float]:
    """Fold per-track scores into (sum of squares, largest pairwise gap)."""
    if len(scores) < 2:
        raise AnalysisError("masking summary requires at least 2 tracks")
    arr = np.asarray(scores, dtype=np.float64)
    return float(np.sum(arr**2)), float(arr.max() - arr.min())


def _channel_metrics(
    signals: Sequence[np.ndarray],
    track_ids: Sequence[str],
    table: psy.BandTable,
) -> list[TrackMaskingMetric]:
    """Per-track metrics for one channel's signals.

    Exploits linearity of the pre-energy stages: the weighted spectrum of the
    accompaniment sum equals the sum of the tracks' weighted spectra.
    """
    weighted = [
        psy.outer_mid_ear_weight(psy.frame_spectrum(s, table), table) for s in signals
    ]
    total = np.sum(weighted, axis=0)
    metrics = []
    for track_id, spectrum in zip(track_ids, weighted):
        banded = psy.to_critical_bands(spectrum, table)
        excitation = psy.spread_time(
            psy.spread_frequency(psy.add_internal_noise(banded, table), table), table
        )
        accompaniment = psy.to_critical_bands(total - spectrum, table)
        accompaniment_excitation = psy.spread_time(
            psy.spread_frequency(psy.add_internal_noise(accompaniment, table), table), table
        )
        threshold = psy.masking_threshold(accompaniment_excitation, table)
        ratios = msr_per_band(threshold, excitation)
        active = banded.sum(axis=1) > table.activity_floor
        metrics.append(
            track_masking_metric(ratios, excitation, threshold, track_id=track_id, active=active)
        )
    return metrics


def mix_masking_report(
    stems: Sequence[StereoBuffer],
    track_ids: Sequence[str],
    table: psy.BandTable | None = None,
) -> MaskingReport:
    """Score a candidate mix given its rendered per-track stereo stems."""
    if len(stems) < 2:
        raise AnalysisError("masking analysis requires at least 2 tracks")
    if len(stems) != len(track_ids):
        raise InvariantError("one track id per stem required")
    lengths = {len(s) for s in stems}
    if len(lengths) != 1:
        raise InvariantError("all stems must have equal length")
    table = table or psy.band_table()

    left = _channel_metrics([s.left for s in stems], track_ids, table)
    right = _channel_metrics([s.right for s in stems], track_ids, table)

    per_track = []
    for l_metric, r_metric in zip(left, right):
        # Better-ear rule over the channels where the track is audible at
        # all; a channel the track never reaches says nothing about masking.
        audible = [m for m in (l_metric, r_metric) if m.active_frames > 0]
        better = min(audible, key=lambda m: m.score) if audible else l_metric
        per_track.append(
            TrackMaskingMetric(
                track_id=better.track_id,
                score=better.score,
                per_band_msr_db=better.per_band_msr_db,
                per_frame=better.per_frame,
                active_frames=better.active_frames,
                note="" if audible else INACTIVE_NOTE,
                channel_scores=(l_metric.score, r_metric.score),
            )
        )

    total, imbalance = combine_track_scores([m.score for m in per_track])
    return MaskingReport(per_track, total, imbalance)
