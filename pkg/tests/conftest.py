"""Shared fixtures: deterministic noise stems and on-disk sessions."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest
from scipy.io import wavfile

from automix.loudness import normalize_to_target
from automix.session_io import TrackBuffer

FS = 48000


def speech_band_noise(
    seed: int,
    seconds: float = 1.0,
    low_hz: float = 300.0,
    high_hz: float = 3000.0,
    peak: float = 0.5,
) -> np.ndarray:
    """Band-limited white noise, deterministic per seed, peak-normalized."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(int(seconds * FS))
    spectrum = np.fft.rfft(x)
    freqs = np.fft.rfftfreq(x.size, 1.0 / FS)
    spectrum[(freqs < low_hz) | (freqs > high_hz)] = 0.0
    y = np.fft.irfft(spectrum, n=x.size)
    return y / np.max(np.abs(y)) * peak


def normalized_noise_tracks(
    n_tracks: int, seconds: float = 1.5, start_seed: int = 100
) -> list[TrackBuffer]:
    """Overlapping speech-band stems, loudness-normalized to -23 LUFS."""
    tracks = []
    for i in range(n_tracks):
        raw = TrackBuffer(f"track{i + 1}", speech_band_noise(start_seed + i, seconds))
        gained, _ = normalize_to_target(raw, -23.0)
        tracks.append(gained)
    return tracks


def write_session(
    dir_path: Path,
    seeds: list[int],
    seconds: float = 1.0,
    optimizer: dict | None = None,
    seed: int = 5,
    scenario: str = "test",
) -> Path:
    """Write noise stems plus a manifest into dir_path; returns the manifest path."""
    tracks = []
    for i, s in enumerate(seeds):
        samples = speech_band_noise(s, seconds).astype(np.float32)
        name = f"track{i + 1}.wav"
        wavfile.write(str(dir_path / name), FS, samples)
        tracks.append({"id": f"track{i + 1}", "path": name})
    manifest = {"scenario": scenario, "target_lufs": -23.0, "seed": seed, "tracks": tracks}
    if optimizer is not None:
        manifest["optimizer"] = optimizer
    path = dir_path / "session.json"
    path.write_text(json.dumps(manifest), encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def two_normalized_tracks() -> list[TrackBuffer]:
    return normalized_noise_tracks(2, seconds=1.5)
