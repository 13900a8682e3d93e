"""Per-track effect chain: 8-band peaking EQ, compressor, stereo spatializer.

The chain order is fixed (EQ, then dynamics, then panning) and every stage
is deterministic with locally-held state, so identical parameters always
render identical audio. Parameter ranges follow audio-engineering practice
and are enforced as hard box constraints; they double as the optimizer's
search box.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.signal import lfilter

from .session_io import StereoBuffer, TrackBuffer

EQ_CENTER_FREQUENCIES_HZ = (60.0, 100.0, 200.0, 400.0, 800.0, 1600.0, 2500.0, 7500.0)
EQ_Q = 1.0
EQ_GAIN_RANGE_DB = (-15.0, 15.0)
DRC_RATIO_RANGE = (1.0, 5.0)
DRC_THRESHOLD_RANGE_DB = (-15.0, 0.0)
DRC_ATTACK_RANGE_S = (0.01, 0.5)
DRC_RELEASE_RANGE_S = (0.05, 1.0)
POSITION_RANGE = (-3.0, 3.0)
PARAMS_PER_TRACK = len(EQ_CENTER_FREQUENCIES_HZ) + 4 + 3

_AZIMUTH_EPS = 1e-6


def _check_range(name: str, value: float, bounds: tuple[float, float]) -> None:
    lo, hi = bounds
    if not lo <= value <= hi:
        raise ValueError(f"{name} = {value} outside [{lo}, {hi}]")


@dataclass(frozen=True)
class EffectParams:
    """One track's decision vector: EQ gains, compressor settings, position."""

    eq_gains_db: tuple[float, ...]
    drc_ratio: float
    drc_threshold_db: float
    drc_attack_s: float
    drc_release_s: float
    position_xyz: tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "eq_gains_db", tuple(float(g) for g in self.eq_gains_db))
        object.__setattr__(self, "position_xyz", tuple(float(c) for c in self.position_xyz))
        if len(self.eq_gains_db) != len(EQ_CENTER_FREQUENCIES_HZ):
            raise ValueError(f"expected {len(EQ_CENTER_FREQUENCIES_HZ)} EQ gains")
        if len(self.position_xyz) != 3:
            raise ValueError("position must have 3 coordinates")
        for i, gain in enumerate(self.eq_gains_db):
            _check_range(f"eq_gains_db[{i}]", gain, EQ_GAIN_RANGE_DB)
        _check_range("drc_ratio", self.drc_ratio, DRC_RATIO_RANGE)
        _check_range("drc_threshold_db", self.drc_threshold_db, DRC_THRESHOLD_RANGE_DB)
        _check_range("drc_attack_s", self.drc_attack_s, DRC_ATTACK_RANGE_S)
        _check_range("drc_release_s", self.drc_release_s, DRC_RELEASE_RANGE_S)
        for i, coord in enumerate(self.position_xyz):
            _check_range(f"position_xyz[{i}]", coord, POSITION_RANGE)

    @classmethod
    def neutral(cls) -> "EffectParams":
        """Pass-through settings: flat EQ, 1:1 dynamics, centered source."""
        return cls(
            eq_gains_db=(0.0,) * len(EQ_CENTER_FREQUENCIES_HZ),
            drc_ratio=1.0,
            drc_threshold_db=0.0,
            drc_attack_s=DRC_ATTACK_RANGE_S[0],
            drc_release_s=DRC_RELEASE_RANGE_S[0],
            position_xyz=(0.0, 0.0, 1.0),
        )

    @classmethod
    def from_vector(cls, vector: Sequence[float]) -> "EffectParams":
        v = [float(x) for x in vector]
        if len(v) != PARAMS_PER_TRACK:
            raise ValueError(f"expected {PARAMS_PER_TRACK} values, got {len(v)}")
        n_eq = len(EQ_CENTER_FREQUENCIES_HZ)
        return cls(
            eq_gains_db=tuple(v[:n_eq]),
            drc_ratio=v[n_eq],
            drc_threshold_db=v[n_eq + 1],
            drc_attack_s=v[n_eq + 2],
            drc_release_s=v[n_eq + 3],
            position_xyz=(v[n_eq + 4], v[n_eq + 5], v[n_eq + 6]),
        )

    @classmethod
    def from_mapping(cls, mapping: dict) -> "EffectParams":
        return cls(
            eq_gains_db=tuple(mapping["eq_gains_db"]),
            drc_ratio=float(mapping["drc_ratio"]),
            drc_threshold_db=float(mapping["drc_threshold_db"]),
            drc_attack_s=float(mapping["drc_attack_s"]),
            drc_release_s=float(mapping["drc_release_s"]),
            position_xyz=tuple(mapping["position_xyz"]),
        )

    def to_vector(self) -> np.ndarray:
        return np.array(
            [
                *self.eq_gains_db,
                self.drc_ratio,
                self.drc_threshold_db,
                self.drc_attack_s,
                self.drc_release_s,
                *self.position_xyz,
            ]
        )

    def to_mapping(self) -> dict:
        return {
            "eq_gains_db": list(self.eq_gains_db),
            "drc_ratio": self.drc_ratio,
            "drc_threshold_db": self.drc_threshold_db,
            "drc_attack_s": self.drc_attack_s,
            "drc_release_s": self.drc_release_s,
            "position_xyz": list(self.position_xyz),
        }


def track_parameter_bounds() -> np.ndarray:
    """Box constraints for one track's 15 parameters, shape (15, 2)."""
    rows = [EQ_GAIN_RANGE_DB] * len(EQ_CENTER_FREQUENCIES_HZ)
    rows += [DRC_RATIO_RANGE, DRC_THRESHOLD_RANGE_DB, DRC_ATTACK_RANGE_S, DRC_RELEASE_RANGE_S]
    rows += [POSITION_RANGE] * 3
    return np.array(rows, dtype=np.float64)


def parameter_bounds(n_tracks: int) -> np.ndarray:
    """Search box for a whole session: per-track bounds stacked in track order."""
    if n_tracks < 1:
        raise ValueError("need at least one track")
    return np.tile(track_parameter_bounds(), (n_tracks, 1))


def params_from_vector(vector: Sequence[float], n_tracks: int) -> list[EffectParams]:
    """Split a session decision vector into per-track EffectParams."""
    v = np.asarray(vector, dtype=np.float64)
    if v.size != n_tracks * PARAMS_PER_TRACK:
        raise ValueError(
            f"expected {n_tracks * PARAMS_PER_TRACK} values for {n_tracks} tracks, got {v.size}"
        )
    return [
        EffectParams.from_vector(v[i * PARAMS_PER_TRACK : (i + 1) * PARAMS_PER_TRACK])
        for i in range(n_tracks)
    ]


def peaking_coefficients(
    center_hz: float, gain_db: float, q: float, sample_rate_hz: int
) -> tuple[np.ndarray, np.ndarray]:
    """RBJ-cookbook peaking biquad, normalized so a0 == 1."""
    amp = 10.0 ** (gain_db / 40.0)
    w0 = 2.0 * math.pi * center_hz / sample_rate_hz
    alpha = math.sin(w0) / (2.0 * q)
    cos_w0 = math.cos(w0)
    b = np.array([1.0 + alpha * amp, -2.0 * cos_w0, 1.0 - alpha * amp])
    a = np.array([1.0 + alpha / amp, -2.0 * cos_w0, 1.0 - alpha / amp])
    return b / a[0], a / a[0]


def eq_frequency_response(
    gains_db: Sequence[float], freqs_hz: Sequence[float], sample_rate_hz: int = 48000
) -> np.ndarray:
    """Complex response of the EQ cascade at the given frequencies."""
    freqs = np.asarray(freqs_hz, dtype=np.float64)
    z_inv = np.exp(-2j * np.pi * freqs / sample_rate_hz)
    response = np.ones_like(z_inv)
    for center, gain in zip(EQ_CENTER_FREQUENCIES_HZ, gains_db):
        b, a = peaking_coefficients(center, gain, EQ_Q, sample_rate_hz)
        response *= (b[0] + b[1] * z_inv + b[2] * z_inv**2) / (
            1.0 + a[1] * z_inv + a[2] * z_inv**2
        )
    return response


def apply_eq(track: TrackBuffer, gains_db: Sequence[float]) -> TrackBuffer:
    """Run the track through the cascade of peaking sections (zero initial state)."""
    gains = [float(g) for g in gains_db]
    if len(gains) != len(EQ_CENTER_FREQUENCIES_HZ):
        raise ValueError(f"expected {len(EQ_CENTER_FREQUENCIES_HZ)} EQ gains")
    for i, gain in enumerate(gains):
        _check_range(f"eq_gains_db[{i}]", gain, EQ_GAIN_RANGE_DB)
    out = track.samples
    for center, gain in zip(EQ_CENTER_FREQUENCIES_HZ, gains):
        if gain == 0.0:
            continue  # unity section
        b, a = peaking_coefficients(center, gain, EQ_Q, track.sample_rate_hz)
        out = lfilter(b, a, out)
    return track.with_samples(out)


def apply_drc(
    track: TrackBuffer,
    ratio: float,
    threshold_db: float,
    attack_s: float,
    release_s: float,
) -> TrackBuffer:
    """Feed-forward compressor: peak envelope, hard knee, no makeup gain.

    The level detector smooths the rectified signal with separate attack and
    release coefficients ``exp(-1 / (tau * fs))``; above the threshold the
    static curve reduces level by ``(1 - 1/ratio) * (level - threshold)`` dB.
    """
    _check_range("drc_ratio", ratio, DRC_RATIO_RANGE)
    _check_range("drc_threshold_db", threshold_db, DRC_THRESHOLD_RANGE_DB)
    _check_range("drc_attack_s", attack_s, DRC_ATTACK_RANGE_S)
    _check_range("drc_release_s", release_s, DRC_RELEASE_RANGE_S)
    if ratio == 1.0:
        return track.with_samples(track.samples.copy())

    fs = track.sample_rate_hz
    attack_coeff = math.exp(-1.0 / (attack_s * fs))
    release_coeff = math.exp(-1.0 / (release_s * fs))

    envelope = np.empty(len(track))
    level = 0.0
    for i, rectified in enumerate(np.abs(track.samples).tolist()):
        coeff = attack_coeff if rectified > level else release_coeff
        level = coeff * level + (1.0 - coeff) * rectified
        envelope[i] = level

    envelope_db = 20.0 * np.log10(np.maximum(envelope, 1e-12))
    over = envelope_db > threshold_db
    gain_db = np.where(
        over,
        threshold_db + (envelope_db - threshold_db) / ratio - envelope_db,
        0.0,
    )
    return track.with_samples(track.samples * 10.0 ** (gain_db / 20.0))


def pan_gains(position_xyz: Sequence[float]) -> tuple[float, float, float]:
    """Equal-power pan gains and distance gain for a source position.

    The listener sits at the origin facing +z; x > 0 pans right. Azimuth is
    folded into [-90, +90] degrees, the pan gains obey gl**2 + gr**2 == 1,
    and sources beyond unit distance attenuate as 1/distance.
    """
    x, y, z = (float(c) for c in position_xyz)
    for coord, name in ((x, "x"), (y, "y"), (z, "z")):
        _check_range(f"position {name}", coord, POSITION_RANGE)
    azimuth = math.atan2(x, max(abs(z), _AZIMUTH_EPS))
    azimuth = min(max(azimuth, -math.pi / 2.0), math.pi / 2.0)
    pan = (azimuth + math.pi / 2.0) / math.pi  # 0 = hard left, 1 = hard right
    gain_left = math.cos(pan * math.pi / 2.0)
    gain_right = math.sin(pan * math.pi / 2.0)
    distance = math.sqrt(x * x + y * y + z * z)
    return gain_left, gain_right, 1.0 / max(distance, 1.0)


def apply_spatial(track: TrackBuffer, position_xyz: Sequence[float]) -> StereoBuffer:
    """Place a mono track in the stereo field with distance attenuation."""
    gain_left, gain_right, distance_gain = pan_gains(position_xyz)
    return StereoBuffer(
        track.samples * (gain_left * distance_gain),
        track.samples * (gain_right * distance_gain),
        track.sample_rate_hz,
    )


def render_track(track: TrackBuffer, params: EffectParams) -> StereoBuffer:
    """Full per-track chain: EQ, then compressor, then spatializer."""
    equalized = apply_eq(track, params.eq_gains_db)
    compressed = apply_drc(
        equalized,
        params.drc_ratio,
        params.drc_threshold_db,
        params.drc_attack_s,
        params.drc_release_s,
    )
    return apply_spatial(compressed, params.position_xyz)
