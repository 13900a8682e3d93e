"""Harmony Search over box-constrained parameter vectors.

The search keeps a small memory of candidate vectors, improvises one new
vector per iteration (per-dimension draw from memory, optional pitch
adjustment, otherwise a fresh uniform draw) and replaces the worst memory
row whenever the candidate improves on it. The objective is any callable
mapping a vector to a float, so the algorithm is testable without audio.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class HarmonyConfig:
    """Search hyperparameters; defaults follow common Harmony Search practice."""

    memory_size: int = 10
    hmcr: float = 0.9
    par: float = 0.3
    bandwidth_fraction: float = 0.05
    max_iterations: int = 500
    target_objective: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.memory_size < 2:
            raise ValueError("memory_size must be at least 2")
        if not 0.0 <= self.hmcr <= 1.0:
            raise ValueError("hmcr must lie in [0, 1]")
        if not 0.0 <= self.par <= 1.0:
            raise ValueError("par must lie in [0, 1]")
        if self.bandwidth_fraction < 0.0:
            raise ValueError("bandwidth_fraction must be non-negative")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")

    @classmethod
    def from_mapping(cls, mapping: dict) -> "HarmonyConfig":
        """Build a config from a manifest block, rejecting unknown keys."""
        known = {f.name for f in fields(cls)}
        unknown = set(mapping) - known
        if unknown:
            raise ValueError(f"unknown optimizer settings: {sorted(unknown)}")
        return cls(**mapping)

    def with_overrides(self, **overrides) -> "HarmonyConfig":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return HarmonyConfig(**values)


@dataclass
class HarmonyMemory:
    """Population of decision vectors with cached objective values."""

    vectors: np.ndarray  # (memory_size, n_dims)
    values: np.ndarray  # (memory_size,)

    def best_index(self) -> int:
        return int(np.argmin(self.values))

    def worst_index(self) -> int:
        return int(np.argmax(self.values))


@dataclass
class ObjectiveTrace:
    """Best-ever objective after each iteration, plus the evaluation count."""

    best_values: list[float] = field(default_factory=list)
    evaluations: int = 0


@dataclass
class SearchResult:
    best_vector: np.ndarray
    best_value: float
    trace: ObjectiveTrace
    memory: HarmonyMemory


def _as_bounds(bounds: Sequence) -> np.ndarray:
    arr = np.asarray(bounds, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] == 0:
        raise ValueError("bounds must have shape (n_dims, 2)")
    if np.any(arr[:, 0] > arr[:, 1]):
        raise ValueError("each lower bound must not exceed its upper bound")
    return arr


def _evaluate(objective: Callable[[np.ndarray], float], vector: np.ndarray) -> float:
    """Run the objective, mapping non-finite results to +inf so they lose."""
    value = float(objective(vector))
    return value if math.isfinite(value) else math.inf


def improvise(
    memory: HarmonyMemory,
    bounds: Sequence,
    config: HarmonyConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Compose one candidate vector from memory, pitch noise and fresh draws."""
    box = _as_bounds(bounds)
    lo, hi = box[:, 0], box[:, 1]
    n_dims = box.shape[0]
    rows = rng.integers(0, memory.vectors.shape[0], size=n_dims)
    from_memory = memory.vectors[rows, np.arange(n_dims)]
    adjust = rng.random(n_dims) < config.par
    noise = rng.uniform(-1.0, 1.0, size=n_dims) * config.bandwidth_fraction * (hi - lo)
    use_memory = rng.random(n_dims) < config.hmcr
    fresh = rng.uniform(lo, hi)
    candidate = np.where(use_memory, from_memory + np.where(adjust, noise, 0.0), fresh)
    return np.clip(candidate, lo, hi)


def search(
    objective: Callable[[np.ndarray], float],
    bounds: Sequence,
    config: HarmonyConfig,
) -> SearchResult:
    """Minimize the objective inside the box.

    Stops once the best value reaches ``target_objective`` or after
    ``max_iterations`` improvisations. With a fixed ``rng_seed`` the whole
    run, including the returned trace, is reproducible bit for bit.
    """
    box = _as_bounds(bounds)
    lo, hi = box[:, 0], box[:, 1]
    rng = np.random.default_rng(config.rng_seed)

    vectors = rng.uniform(lo, hi, size=(config.memory_size, box.shape[0]))
    values = np.array([_evaluate(objective, v) for v in vectors])
    memory = HarmonyMemory(vectors, values)
    trace = ObjectiveTrace(evaluations=config.memory_size)

    best = memory.best_index()
    best_vector = vectors[best].copy()
    best_value = float(values[best])

    for _ in range(config.max_iterations):
        if best_value <= config.target_objective:
            break
        candidate = improvise(memory, box, config, rng)
        value = _evaluate(objective, candidate)
        trace.evaluations += 1
        worst = memory.worst_index()
        if value < values[worst]:
            vectors[worst] = candidate
            values[worst] = value
        if value < best_value:
            best_value = value
            best_vector = candidate.copy()
        trace.best_values.append(best_value)

    return SearchResult(best_vector, best_value, trace, memory)
