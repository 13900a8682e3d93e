"""Critical-band excitation and masking-threshold analysis.

FFT front end in the style of the BS.1387 basic measurement model: Hann
frames calibrated to a listening level, outer/middle-ear weighting, grouping
into 109 quarter-Bark bands between 80 Hz and 18 kHz, an additive
physiological noise floor, then level-dependent spreading across bands and
first-order smearing across frames. Masking thresholds sit a
frequency-dependent offset below the spread excitation.

All inter-stage quantities are linear energies; decibels appear only in the
offset/threshold arithmetic. Every stage is deterministic and pure.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import lfilter

from .errors import AnalysisError, InvariantError
from .session_io import TrackBuffer

BAND_COUNT = 109
BARK_STEP = 0.25
LOWEST_BAND_EDGE_HZ = 80.0
HIGHEST_BAND_EDGE_HZ = 18000.0

# Bark position of the lowest band edge; the threshold offset is measured
# relative to this point.
BARK_SCALE_LOW_EDGE = 0.8594
THRESHOLD_OFFSET_BASE_DB = 3.0
THRESHOLD_OFFSET_KNEE_BARK = 12.0
THRESHOLD_OFFSET_SLOPE_DB_PER_BARK = 0.25

# Full-scale sine calibration: a unit-amplitude sine at this frequency maps
# to the configured listening level.
LEVEL_CALIBRATION_SINE_HZ = 1019.5

# Spreading is performed on energies raised to this exponent (a partial
# loudness-domain sum), with a fixed 27 dB/Bark slope toward lower bands and
# a level- and frequency-dependent slope toward higher bands.
SPREAD_EXPONENT = 0.4
LOWER_SLOPE_DB_PER_BARK = 27.0

# Time smearing: per-band first-order smoothing, time constant interpolated
# between 8 ms (high bands) and 30 ms (at 100 Hz).
TIME_SPREAD_TAU_MIN_S = 0.008
TIME_SPREAD_TAU_100HZ_S = 0.030

ENERGY_FLOOR = 1e-12


def hz_to_bark(frequency_hz):
    """Map frequency to the Bark scale (arcsinh form)."""
    return 7.0 * np.arcsinh(np.asarray(frequency_hz, dtype=np.float64) / 650.0)


def bark_to_hz(z_bark):
    """Inverse of :func:`hz_to_bark`."""
    return 650.0 * np.sinh(np.asarray(z_bark, dtype=np.float64) / 7.0)


def masking_offset_db(z_bark):
    """Offset (dB) between spread excitation and masking threshold at Bark position z.

    Flat at 3 dB up to 12 Bark above the lowest band edge, then grows at
    0.25 dB per Bark of distance from that edge.
    """
    z = np.asarray(z_bark, dtype=np.float64)
    above_edge = z - BARK_SCALE_LOW_EDGE
    offset = np.where(
        above_edge <= THRESHOLD_OFFSET_KNEE_BARK,
        THRESHOLD_OFFSET_BASE_DB,
        THRESHOLD_OFFSET_SLOPE_DB_PER_BARK * above_edge,
    )
    return float(offset) if offset.ndim == 0 else offset


@dataclass(frozen=True)
class AnalysisConfig:
    """Frame and band layout of the analysis front end."""

    fft_size: int = 2048
    hop_size: int = 1024
    band_count: int = BAND_COUNT
    bark_step: float = BARK_STEP
    listening_level_db_spl: float = 92.0
    sample_rate_hz: int = 48000

    def __post_init__(self):
        if self.band_count != BAND_COUNT:
            raise ValueError(f"band_count must be {BAND_COUNT}")
        if self.fft_size < 2 or self.fft_size & (self.fft_size - 1):
            raise ValueError("fft_size must be a power of two")
        if self.hop_size != self.fft_size // 2:
            raise ValueError("hop_size must be half the fft_size")


DEFAULT_ANALYSIS = AnalysisConfig()


def _calibrated_window(config: AnalysisConfig) -> np.ndarray:
    """Hann window scaled so a full-scale sine reaches the listening level.

    The gain corrects for the window length and for the worst-case placement
    of the calibration sine between two DFT bins.
    """
    size = config.fft_size
    n = np.arange(size)
    hann = 0.5 * (1.0 - np.cos(2.0 * np.pi * n / (size - 1)))
    span = size - 1
    grid = 1.0 / size
    normalized = LEVEL_CALIBRATION_SINE_HZ / config.sample_rate_hz
    nearest = np.floor(normalized / grid)
    offset = min((nearest + 1) * grid - normalized, normalized - nearest * grid) * span
    peak_factor = np.sin(np.pi * offset) / (np.pi * offset * (1.0 - offset**2))
    gain = 10.0 ** (config.listening_level_db_spl / 20.0) / (peak_factor * span / 4.0)
    return gain * hann


class BandTable:
    """Precomputed per-band and per-bin constants for one analysis config."""

    def __init__(self, config: AnalysisConfig = DEFAULT_ANALYSIS):
        self.config = config
        nc = config.band_count
        dz = config.bark_step
        edge = hz_to_bark(LOWEST_BAND_EDGE_HZ)
        index = np.arange(nc)

        self.lower_hz = bark_to_hz(edge + dz * index)
        self.upper_hz = bark_to_hz(edge + dz * (index + 1))
        self.center_hz = bark_to_hz(edge + dz * (index + 0.5))
        self.lower_hz[0] = LOWEST_BAND_EDGE_HZ
        self.upper_hz[-1] = HIGHEST_BAND_EDGE_HZ
        self.center_bark = hz_to_bark(self.center_hz)
        self.width_hz = self.upper_hz - self.lower_hz

        n_bins = config.fft_size // 2 + 1
        df = config.sample_rate_hz / config.fft_size
        self.bin_freqs_hz = df * np.arange(n_bins)

        # Outer/middle-ear amplitude weighting; DC is suppressed outright.
        weight = np.zeros(n_bins)
        f_khz = self.bin_freqs_hz[1:] / 1000.0
        response_db = (
            -2.184 * f_khz**-0.8
            + 6.5 * np.exp(-0.6 * (f_khz - 3.3) ** 2)
            - 0.001 * f_khz**3.6
        )
        weight[1:] = 10.0 ** (response_db / 20.0)
        self.ear_weight = weight

        # Fractional-bin proration of FFT energies into bands.
        bins = np.arange(n_bins)[:, None]
        hi = np.minimum(self.upper_hz[None, :], (bins + 0.5) * df)
        lo = np.maximum(self.lower_hz[None, :], (bins - 0.5) * df)
        self.grouping = np.clip((hi - lo) / df, 0.0, None)

        self.internal_noise = 10.0 ** (1.456 * (self.center_hz / 1000.0) ** -0.8 / 10.0)

        self.window = _calibrated_window(config)

        # Spreading constants.
        self.lower_decay = 10.0 ** (-LOWER_SLOPE_DB_PER_BARK / 10.0 * dz)
        self.upper_decay_base = 10.0 ** ((-2.4 - 23.0 / self.center_hz) * dz)
        self.level_exponent = 0.2 * dz
        self.steps_remaining = (nc - index).astype(np.float64)
        self.lower_norm = (1.0 - self.lower_decay ** (index + 1)) / (1.0 - self.lower_decay)
        self.spread_norm = _spread_raw(np.ones((1, nc)), self)[0]

        frame_rate = config.sample_rate_hz / config.hop_size
        tau = TIME_SPREAD_TAU_MIN_S + (100.0 / self.center_hz) * (
            TIME_SPREAD_TAU_100HZ_S - TIME_SPREAD_TAU_MIN_S
        )
        self.time_smoothing = np.exp(-1.0 / (frame_rate * tau))

        self.threshold_gain = 10.0 ** (-masking_offset_db(self.center_bark) / 10.0)

        self.full_scale_energy = 10.0 ** (config.listening_level_db_spl / 10.0)
        self.activity_floor = 1e-10 * self.full_scale_energy


@lru_cache(maxsize=4)
def band_table(config: AnalysisConfig = DEFAULT_ANALYSIS) -> BandTable:
    """Shared BandTable instance for a config (tables are immutable)."""
    return BandTable(config)


def _as_samples(track) -> np.ndarray:
    if isinstance(track, TrackBuffer):
        return track.samples
    return np.asarray(track, dtype=np.float64)


def _as_band_frames(frames) -> tuple[np.ndarray, bool]:
    """Coerce to (n_frames, BAND_COUNT); report whether input was a single frame."""
    arr = np.asarray(frames, dtype=np.float64)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.ndim != 2 or arr.shape[1] != BAND_COUNT:
        raise InvariantError(f"expected frames with {BAND_COUNT} bands, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
        raise InvariantError("band energies must be finite and non-negative")
    return arr, single


def frame_spectrum(track, table: BandTable | None = None) -> np.ndarray:
    """Complex spectra of 50 %-overlapped, level-calibrated Hann frames.

    Returns an array of shape (n_frames, fft_size // 2 + 1). Input shorter
    than one frame is an error; a trailing remainder shorter than one hop is
    dropped.
    """
    table = table or band_table()
    samples = _as_samples(track)
    size = table.config.fft_size
    if samples.size < size:
        raise AnalysisError(
            f"need at least {size} samples for one analysis frame, got {samples.size}"
        )
    frames = np.lib.stride_tricks.sliding_window_view(samples, size)[:: table.config.hop_size]
    return np.fft.rfft(frames * table.window, axis=1)


def outer_mid_ear_weight(spectra: np.ndarray, table: BandTable | None = None) -> np.ndarray:
    """Apply the ear-sensitivity amplitude weighting to spectra, bin by bin."""
    table = table or band_table()
    return spectra * table.ear_weight


def to_critical_bands(weighted_spectra: np.ndarray, table: BandTable | None = None) -> np.ndarray:
    """Group spectral energy into the quarter-Bark bands.

    Accepts (complex) amplitude spectra; energy at band edges is prorated by
    the fraction of the bin inside the band, so total in-range energy is
    conserved.
    """
    table = table or band_table()
    power = np.abs(np.asarray(weighted_spectra)) ** 2
    return power @ table.grouping


def add_internal_noise(frames, table: BandTable | None = None) -> np.ndarray:
    """Add the physiological noise floor, making every band strictly positive."""
    table = table or band_table()
    arr, single = _as_band_frames(frames)
    out = arr + table.internal_noise
    return out[0] if single else out


def _spread_raw(energies: np.ndarray, table: BandTable) -> np.ndarray:
    """Two-sided level-dependent spreading, without the flat-pattern normalization.

    Operates on (n_frames, band_count) energies. Toward lower bands every
    source decays at a fixed rate per band; toward higher bands each source
    decays at its own level-dependent rate, so the contribution of band ``s``
    to band ``l > s`` is its normalized energy times ``decay(s) ** (l - s)``.
    Partial sums are accumulated in the SPREAD_EXPONENT power domain.
    """
    e = SPREAD_EXPONENT
    n_frames, nc = energies.shape

    upper_decay = table.upper_decay_base[None, :] * energies**table.level_exponent
    denom = 1.0 - upper_decay
    near_one = np.abs(denom) < 1e-12
    g_upper = np.where(
        near_one,
        table.steps_remaining,
        (1.0 - upper_decay**table.steps_remaining) / np.where(near_one, 1.0, denom),
    )
    base = energies / (table.lower_norm + g_upper - 1.0)
    base_e = base**e
    upper_e = upper_decay**e

    lower_decay_e = table.lower_decay**e
    out = lfilter([1.0], [1.0, -lower_decay_e], base_e[:, ::-1], axis=1)[:, ::-1].copy()

    for src in range(nc - 1):
        width = nc - 1 - src
        decay = np.cumprod(np.broadcast_to(upper_e[:, src][:, None], (n_frames, width)), axis=1)
        out[:, src + 1 :] += base_e[:, src][:, None] * decay

    return out ** (1.0 / e)


def spread_frequency(frames, table: BandTable | None = None) -> np.ndarray:
    """Smear band energies across neighbouring bands (auditory filter overlap).

    Deterministic; the skirt toward higher bands is shallower than the fixed
    27 dB/Bark skirt toward lower bands, increasingly so at high levels.
    """
    table = table or band_table()
    arr, single = _as_band_frames(frames)
    out = _spread_raw(arr, table) / table.spread_norm
    return out[0] if single else out


def spread_time(frames, table: BandTable | None = None) -> np.ndarray:
    """Smear band energies forward in time.

    Each band runs a first-order low-pass over frames; the output is the
    maximum of the smoothed history and the current frame, so onsets pass
    unchanged and offsets decay exponentially with the band's time constant.
    """
    table = table or band_table()
    arr, single = _as_band_frames(frames)
    alpha = table.time_smoothing
    out = np.empty_like(arr)
    state = np.zeros(arr.shape[1])
    for t in range(arr.shape[0]):
        state = alpha * state + (1.0 - alpha) * arr[t]
        out[t] = np.maximum(state, arr[t])
    return out[0] if single else out


def masking_threshold(frames, table: BandTable | None = None) -> np.ndarray:
    """Masking threshold implied by spread excitation: a per-band dB drop.

    Thresholds stay strictly below the excitation because the offset is at
    least 3 dB in every band.
    """
    table = table or band_table()
    arr, single = _as_band_frames(frames)
    out = np.maximum(arr, ENERGY_FLOOR) * table.threshold_gain
    return out[0] if single else out


def band_energies(track, table: BandTable | None = None) -> np.ndarray:
    """Ear-weighted band energies per frame, before noise floor and spreading."""
    table = table or band_table()
    return to_critical_bands(outer_mid_ear_weight(frame_spectrum(track, table), table), table)


def excitation_frames(track, table: BandTable | None = None) -> np.ndarray:
    """Full analysis chain: samples to per-frame spread excitation patterns."""
    table = table or band_table()
    banded = band_energies(track, table)
    return spread_time(spread_frequency(add_internal_noise(banded, table), table), table)
