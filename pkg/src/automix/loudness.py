"""Gated integrated loudness (LUFS) measurement and normalization.

Implements the BS.1770 / EBU R 128 integrated measure at 48 kHz: K-weighting
(high-shelf pre-filter plus high-pass), 400 ms blocks with 75 % overlap, a
-70 LUFS absolute gate followed by a -10 LU relative gate. Mono channels are
weighted 1.0; stereo sums both channel powers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import sosfilt

from .errors import AnalysisError, SilentTrackError
from .session_io import SUPPORTED_SAMPLE_RATE, StereoBuffer, TrackBuffer

BLOCK_S = 0.400
BLOCK_OVERLAP = 0.75
ABSOLUTE_GATE_LUFS = -70.0
RELATIVE_GATE_LU = 10.0
_POWER_OFFSET_DB = -0.691

# K-weighting cascade for 48 kHz exactly as tabulated in BS.1770
# (stage 1: spherical-head high shelf, stage 2: RLB high-pass).
_K_WEIGHTING_SOS_48K = np.array(
    [
        [1.53512485958697, -2.69169618940638, 1.19839281085285,
         1.0, -1.69065929318241, 0.73248077421585],
        [1.0, -2.0, 1.0,
         1.0, -1.99004745483398, 0.99007225036621],
    ]
)


@dataclass(frozen=True)
class LoudnessMeasurement:
    """Integrated loudness; ``None`` marks a fully gated (silent) signal."""

    integrated_lufs: float | None
    applied_gain_db: float = 0.0

    @property
    def is_silent(self) -> bool:
        return self.integrated_lufs is None


def _channels(buffer: TrackBuffer | StereoBuffer) -> list[np.ndarray]:
    if isinstance(buffer, TrackBuffer):
        return [buffer.samples]
    if isinstance(buffer, StereoBuffer):
        return [buffer.left, buffer.right]
    raise TypeError(f"expected TrackBuffer or StereoBuffer, got {type(buffer).__name__}")


def _block_powers(channels: list[np.ndarray], sample_rate_hz: int) -> np.ndarray:
    """Mean-square power of each 400 ms gating block, summed over channels."""
    block = int(round(BLOCK_S * sample_rate_hz))
    hop = int(round(block * (1.0 - BLOCK_OVERLAP)))
    n = channels[0].size
    if n < block:
        raise AnalysisError(
            f"need at least {BLOCK_S * 1e3:.0f} ms of audio for one gating block"
        )
    n_blocks = (n - block) // hop + 1
    powers = np.zeros(n_blocks)
    for channel in channels:
        weighted = sosfilt(_K_WEIGHTING_SOS_48K, channel)
        squared = weighted * weighted
        starts = np.arange(n_blocks) * hop
        cumulative = np.concatenate(([0.0], np.cumsum(squared)))
        powers += (cumulative[starts + block] - cumulative[starts]) / block
    return powers


def _gated_loudness(powers: np.ndarray) -> float | None:
    loudness = _POWER_OFFSET_DB + 10.0 * np.log10(np.maximum(powers, 1e-30))
    above_absolute = loudness > ABSOLUTE_GATE_LUFS
    if not np.any(above_absolute):
        return None
    relative_threshold = (
        _POWER_OFFSET_DB
        + 10.0 * np.log10(np.mean(powers[above_absolute]))
        - RELATIVE_GATE_LU
    )
    kept = above_absolute & (loudness > relative_threshold)
    if not np.any(kept):
        return None
    return float(_POWER_OFFSET_DB + 10.0 * np.log10(np.mean(powers[kept])))


def measure_lufs(buffer: TrackBuffer | StereoBuffer) -> LoudnessMeasurement:
    """Integrated loudness of a track or stereo buffer.

    Returns the silence marker (``integrated_lufs is None``) when every block
    falls below the gates, and raises on input shorter than one block.
    """
    if buffer.sample_rate_hz != SUPPORTED_SAMPLE_RATE:
        raise AnalysisError(f"loudness meter supports {SUPPORTED_SAMPLE_RATE} Hz only")
    powers = _block_powers(_channels(buffer), buffer.sample_rate_hz)
    return LoudnessMeasurement(_gated_loudness(powers))


def normalize_to_target(track: TrackBuffer, target_lufs: float) -> tuple[TrackBuffer, LoudnessMeasurement]:
    """Apply the pure gain that moves a track's integrated loudness to the target.

    Returns the gained track and a measurement holding the pre-gain loudness
    plus the gain applied. Raises SilentTrackError when the track is gated out
    entirely and has no defined loudness to move.
    """
    measured = measure_lufs(track)
    if measured.is_silent:
        raise SilentTrackError(f"track {track.track_id!r} is silent; cannot normalize")
    gain_db = target_lufs - measured.integrated_lufs
    gained = track.with_samples(track.samples * 10.0 ** (gain_db / 20.0))
    return gained, LoudnessMeasurement(measured.integrated_lufs, applied_gain_db=gain_db)
