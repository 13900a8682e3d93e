"""End-to-end run orchestration: load, normalize, search, render, report."""
from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvariantError
from .effects import parameter_bounds, params_from_vector, render_track
from .masking import MaskingReport, mix_masking_report
from .optimizer import SearchResult, search
from . import psychoacoustics as psy
from .report import MixResult, emit_report, normalize_session, render_mix
from .session_io import TrackBuffer, load_session


class MixObjective:
    """Objective for the search: render a candidate vector, score its masking.

    The score is ``w_total * sum(M_i^2) + w_imbalance * max|M_i - M_j|``; both
    weights default to 1. Evaluation is a pure function of the vector.
    """

    def __init__(
        self,
        tracks: Sequence[TrackBuffer],
        table: psy.BandTable | None = None,
        total_weight: float = 1.0,
        imbalance_weight: float = 1.0,
    ):
        if len(tracks) < 2:
            raise ValueError("objective requires at least 2 tracks")
        self.tracks = list(tracks)
        self.table = table or psy.band_table()
        self.total_weight = total_weight
        self.imbalance_weight = imbalance_weight
        self.bounds = parameter_bounds(len(tracks))

    @property
    def weights(self) -> tuple[float, float]:
        return (self.total_weight, self.imbalance_weight)

    def render(self, vector) -> list:
        params = params_from_vector(vector, len(self.tracks))
        return [render_track(track, p) for track, p in zip(self.tracks, params)]

    def masking(self, vector) -> MaskingReport:
        stems = self.render(vector)
        return mix_masking_report(stems, [t.track_id for t in self.tracks], self.table)

    def __call__(self, vector) -> float:
        report = self.masking(vector)
        return self.total_weight * report.total + self.imbalance_weight * report.imbalance


def neutral_vector(n_tracks: int) -> np.ndarray:
    """Pass-through decision vector for a session (flat EQ, 1:1, centered)."""
    from .effects import EffectParams

    return np.tile(EffectParams.neutral().to_vector(), n_tracks)


def run_session(
    manifest_path: str | Path,
    out_dir: str | Path,
    *,
    seed: int | None = None,
    max_iterations: int | None = None,
    target_lufs: float | None = None,
    make_plots: bool = True,
) -> tuple[MixResult, SearchResult, list[Path]]:
    """Run a whole session from manifest to written report files."""
    session = load_session(manifest_path)
    config = session.manifest.optimizer.with_overrides(
        rng_seed=seed, max_iterations=max_iterations
    )
    effective_seed = config.rng_seed

    normalized, before = normalize_session(session, target_lufs)
    objective = MixObjective(normalized)
    result = search(objective, objective.bounds, config)

    best_params = params_from_vector(result.best_vector, len(session.tracks))
    mix_result = render_mix(
        session,
        best_params,
        normalized_tracks=normalized,
        lufs_before=before,
        trace=result.trace,
        seed=effective_seed,
        objective_weights=objective.weights,
    )
    if math.isfinite(result.best_value) and not math.isclose(
        result.best_value, mix_result.combined_objective, rel_tol=1e-9, abs_tol=1e-12
    ):
        raise InvariantError(
            "objective mismatch between search and final render: "
            f"{result.best_value} vs {mix_result.combined_objective}"
        )
    written = emit_report(mix_result, out_dir, make_plots=make_plots)
    return mix_result, result, written
