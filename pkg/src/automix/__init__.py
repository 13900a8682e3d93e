"""Masking-minimizing automatic mixer for multitrack speech.

Loudness-normalizes the stems of a session, searches per-track EQ,
compressor and spatial parameters with Harmony Search against a
psychoacoustic cross-track masking objective, and renders a stereo mix plus
a machine-readable analysis report.
"""
from .effects import EffectParams, apply_drc, apply_eq, apply_spatial, render_track
from .errors import (
    AnalysisError,
    AudioFormatError,
    AutomixError,
    InvariantError,
    ManifestError,
    SilentTrackError,
)
from .loudness import LoudnessMeasurement, measure_lufs, normalize_to_target
from .masking import (
    MaskingReport,
    TrackMaskingMetric,
    accompaniment_threshold,
    mix_masking_report,
    msr_per_band,
    track_masking_metric,
)
from .optimizer import HarmonyConfig, HarmonyMemory, ObjectiveTrace, SearchResult, search
from .pipeline import MixObjective, neutral_vector, run_session
from .psychoacoustics import (
    AnalysisConfig,
    BandTable,
    band_table,
    excitation_frames,
    masking_offset_db,
    masking_threshold,
)
from .report import MixResult, emit_report, long_term_average_spectrum, render_mix
from .session_io import (
    Session,
    SessionManifest,
    StereoBuffer,
    TrackBuffer,
    load_session,
    read_wav,
    write_wav,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisConfig",
    "AnalysisError",
    "AudioFormatError",
    "AutomixError",
    "BandTable",
    "EffectParams",
    "HarmonyConfig",
    "HarmonyMemory",
    "InvariantError",
    "LoudnessMeasurement",
    "ManifestError",
    "MaskingReport",
    "MixObjective",
    "MixResult",
    "ObjectiveTrace",
    "SearchResult",
    "Session",
    "SessionManifest",
    "SilentTrackError",
    "StereoBuffer",
    "TrackBuffer",
    "TrackMaskingMetric",
    "accompaniment_threshold",
    "apply_drc",
    "apply_eq",
    "apply_spatial",
    "band_table",
    "emit_report",
    "excitation_frames",
    "load_session",
    "long_term_average_spectrum",
    "masking_offset_db",
    "masking_threshold",
    "measure_lufs",
    "mix_masking_report",
    "msr_per_band",
    "neutral_vector",
    "normalize_to_target",
    "read_wav",
    "render_mix",
    "render_track",
    "run_session",
    "search",
    "track_masking_metric",
    "write_wav",
]
