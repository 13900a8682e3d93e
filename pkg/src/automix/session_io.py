"""Audio file and session manifest I/O.

Sessions are fixed-format: mono 48 kHz WAV stems (16-bit PCM or IEEE float)
listed in a JSON manifest. Other sample rates are rejected rather than
resampled so the analysis band tables stay single-rate.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .errors import AudioFormatError, InvariantError, ManifestError
from .optimizer import HarmonyConfig

SUPPORTED_SAMPLE_RATE = 48000
MIN_TRACKS = 2
MAX_TRACKS = 16
DEFAULT_TARGET_LUFS = -23.0

_INT16_FULL_SCALE = 32768.0


@dataclass
class TrackBuffer:
    """One mono stem: float samples plus the identity it keeps through the chain."""

    track_id: str
    samples: np.ndarray
    sample_rate_hz: int = SUPPORTED_SAMPLE_RATE

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise InvariantError(f"track {self.track_id!r}: samples must be a non-empty 1-D array")
        if not np.all(np.isfinite(self.samples)):
            raise InvariantError(f"track {self.track_id!r}: samples must be finite")
        if self.sample_rate_hz != SUPPORTED_SAMPLE_RATE:
            raise AudioFormatError(
                f"track {self.track_id!r}: sample rate must be {SUPPORTED_SAMPLE_RATE}"
            )

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    def with_samples(self, samples: np.ndarray) -> "TrackBuffer":
        """Copy of this track carrying new sample data."""
        return TrackBuffer(self.track_id, samples, self.sample_rate_hz)


@dataclass
class StereoBuffer:
    """Two equal-length channels, the output format of spatialization and the mix."""

    left: np.ndarray
    right: np.ndarray
    sample_rate_hz: int = SUPPORTED_SAMPLE_RATE

    def __post_init__(self):
        self.left = np.asarray(self.left, dtype=np.float64)
        self.right = np.asarray(self.right, dtype=np.float64)
        if self.left.ndim != 1 or self.right.ndim != 1:
            raise InvariantError("stereo channels must be 1-D arrays")
        if self.left.size != self.right.size:
            raise InvariantError(
                f"stereo channels differ in length: {self.left.size} vs {self.right.size}"
            )
        if not (np.all(np.isfinite(self.left)) and np.all(np.isfinite(self.right))):
            raise InvariantError("stereo samples must be finite")

    def __len__(self) -> int:
        return self.left.size

    @property
    def peak(self) -> float:
        if self.left.size == 0:
            return 0.0
        return float(max(np.max(np.abs(self.left)), np.max(np.abs(self.right))))

    def scaled(self, gain: float) -> "StereoBuffer":
        return StereoBuffer(self.left * gain, self.right * gain, self.sample_rate_hz)


@dataclass(frozen=True)
class TrackRef:
    track_id: str
    path: Path


@dataclass
class SessionManifest:
    scenario: str
    tracks: list[TrackRef]
    target_lufs: float = DEFAULT_TARGET_LUFS
    optimizer: HarmonyConfig = field(default_factory=HarmonyConfig)
    seed: int = 0


@dataclass
class Session:
    """A validated manifest plus its loaded, equal-length track buffers."""

    manifest: SessionManifest
    tracks: list[TrackBuffer]

    @property
    def track_ids(self) -> list[str]:
        return [t.track_id for t in self.tracks]


def read_wav(path: str | Path) -> TrackBuffer:
    """Read a mono 48 kHz WAV file into a TrackBuffer.

    16-bit PCM samples are scaled by 1/32768; float samples pass through.
    The track id defaults to the file stem.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such audio file: {path}")
    try:
        rate, data = wavfile.read(str(path))
    except ValueError as exc:
        raise AudioFormatError(f"{path}: unsupported or malformed WAV ({exc})") from exc
    if data.ndim != 1:
        raise AudioFormatError(f"{path}: track must be mono, got {data.shape[1]} channels")
    if rate != SUPPORTED_SAMPLE_RATE:
        raise AudioFormatError(f"{path}: sample rate must be {SUPPORTED_SAMPLE_RATE}, got {rate}")
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / _INT16_FULL_SCALE
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise AudioFormatError(
            f"{path}: unsupported encoding {data.dtype}; expected 16-bit PCM or float"
        )
    if data.size == 0:
        raise AudioFormatError(f"{path}: file contains no samples")
    if not np.all(np.isfinite(samples)):
        raise AudioFormatError(f"{path}: samples contain non-finite values")
    return TrackBuffer(path.stem, samples)


def write_wav(buffer: StereoBuffer, path: str | Path) -> None:
    """Write a stereo buffer as a 32-bit float WAV file.

    Samples must already sit inside [-1, 1]; anything outside means the
    safety limiter upstream failed, which is reported as an invariant error.
    """
    path = Path(path)
    if buffer.peak > 1.0:
        raise InvariantError(
            f"refusing to write {path}: peak {buffer.peak:.6f} exceeds full scale"
        )
    interleaved = np.stack(
        [buffer.left.astype(np.float32), buffer.right.astype(np.float32)], axis=1
    )
    wavfile.write(str(path), buffer.sample_rate_hz, interleaved)


def read_stereo_wav(path: str | Path) -> StereoBuffer:
    """Reload helper for stereo output files (used for verification)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such audio file: {path}")
    rate, data = wavfile.read(str(path))
    if data.ndim != 2 or data.shape[1] != 2:
        raise AudioFormatError(f"{path}: expected a stereo file")
    if rate != SUPPORTED_SAMPLE_RATE:
        raise AudioFormatError(f"{path}: sample rate must be {SUPPORTED_SAMPLE_RATE}, got {rate}")
    if data.dtype == np.int16:
        data = data.astype(np.float64) / _INT16_FULL_SCALE
    return StereoBuffer(data[:, 0].astype(np.float64), data[:, 1].astype(np.float64), rate)


def load_manifest(path: str | Path) -> SessionManifest:
    """Parse and validate a session manifest (JSON)."""
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"no such manifest: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: manifest is not valid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ManifestError(f"{path}: manifest must be a JSON object")

    tracks_raw = raw.get("tracks")
    if not isinstance(tracks_raw, list):
        raise ManifestError(f"{path}: manifest needs a 'tracks' list")
    if len(tracks_raw) < MIN_TRACKS:
        raise ManifestError(f"{path}: at least {MIN_TRACKS} tracks required")
    if len(tracks_raw) > MAX_TRACKS:
        raise ManifestError(f"{path}: at most {MAX_TRACKS} tracks supported")

    refs: list[TrackRef] = []
    seen: set[str] = set()
    for entry in tracks_raw:
        if not isinstance(entry, dict) or "id" not in entry or "path" not in entry:
            raise ManifestError(f"{path}: each track needs 'id' and 'path'")
        track_id = str(entry["id"])
        if track_id in seen:
            raise ManifestError(f"{path}: duplicate track id {track_id!r}")
        seen.add(track_id)
        track_path = Path(entry["path"])
        if not track_path.is_absolute():
            track_path = path.parent / track_path
        refs.append(TrackRef(track_id, track_path))

    try:
        optimizer = HarmonyConfig.from_mapping(raw.get("optimizer", {}))
    except (TypeError, ValueError) as exc:
        raise ManifestError(f"{path}: bad optimizer settings ({exc})") from exc
    # the top-level seed wins over any rng_seed inside the optimizer block
    if "seed" in raw:
        optimizer = optimizer.with_overrides(rng_seed=int(raw["seed"]))

    return SessionManifest(
        scenario=str(raw.get("scenario", path.stem)),
        tracks=refs,
        target_lufs=float(raw.get("target_lufs", DEFAULT_TARGET_LUFS)),
        optimizer=optimizer,
        seed=optimizer.rng_seed,
    )


def load_session(manifest_path: str | Path) -> Session:
    """Load a manifest and all referenced tracks, zero-padded to equal length."""
    manifest = load_manifest(manifest_path)
    tracks: list[TrackBuffer] = []
    for ref in manifest.tracks:
        try:
            loaded = read_wav(ref.path)
        except FileNotFoundError as exc:
            raise ManifestError(f"track file not found: {ref.path}") from exc
        tracks.append(TrackBuffer(ref.track_id, loaded.samples, loaded.sample_rate_hz))
    longest = max(len(t) for t in tracks)
    tracks = [
        t if len(t) == longest else t.with_samples(np.pad(t.samples, (0, longest - len(t))))
        for t in tracks
    ]
    return Session(manifest, tracks)
