"""Exception types raised by the automix engine."""


class AutomixError(Exception):
    """Base class for all errors the engine reports to callers."""


class AudioFormatError(AutomixError):
    """An audio file violates the supported format (mono, 48 kHz, 16-bit or float WAV)."""


class ManifestError(AutomixError):
    """A session manifest is unparsable or fails validation."""


class SilentTrackError(AutomixError):
    """A track was gated out entirely and cannot be loudness-normalized."""


class AnalysisError(AutomixError):
    """An analysis precondition failed, e.g. input shorter than one frame."""


class InvariantError(AutomixError):
    """An internal invariant was violated; indicates a bug upstream of the call."""
