"""Temporal masks: flow-ranked top-K frame selection plus baselines.

A mask selects the K frames that receive perturbation; sparsity is the
fraction left untouched, 1 - K/T. K = round((1 - sparsity) * T) with
half-up rounding, so the realized sparsity is within 1/(2T) of the request.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .optflow import FlowScores


@dataclass(frozen=True)
class TemporalMask:
    """Per-frame binary selector."""

    selected: tuple[bool, ...]

    def __post_init__(self):
        object.__setattr__(self, "selected", tuple(bool(s) for s in self.selected))

    @property
    def k(self) -> int:
        return sum(self.selected)

    @property
    def t_frames(self) -> int:
        return len(self.selected)

    def indices(self) -> tuple[int, ...]:
        return tuple(i for i, s in enumerate(self.selected) if s)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.selected, dtype=bool)


def _k_for(t: int, sparsity: float) -> int:
    if not 0.0 <= sparsity <= 1.0:
        raise ValueError(f"sparsity must be in [0, 1], got {sparsity}")
    return int(math.floor((1.0 - sparsity) * t + 0.5))


def flow_mask(scores: FlowScores, sparsity: float) -> TemporalMask:
    """Select the K frames with the highest flow scores (ties: lower index)."""
    t = len(scores)
    if t == 0:
        raise ValueError("empty flow scores")
    k = _k_for(t, sparsity)
    order = sorted(range(t), key=lambda i: (-scores.scores[i], i))
    chosen = set(order[:k])
    return TemporalMask(tuple(i in chosen for i in range(t)))


def sequence_mask(t: int, sparsity: float, start: int = 0) -> TemporalMask:
    """Select the contiguous window start .. start+K-1."""
    k = _k_for(t, sparsity)
    if start < 0 or start + k > t:
        raise ValueError(f"window [{start}, {start + k}) out of range for T={t}")
    return TemporalMask(tuple(start <= i < start + k for i in range(t)))


def random_mask(t: int, sparsity: float, seed: int) -> TemporalMask:
    """Select K distinct frames uniformly at random, deterministic in seed."""
    if t < 1:
        raise ValueError("need at least one frame")
    k = _k_for(t, sparsity)
    rng = np.random.default_rng(seed)
    chosen = set(rng.choice(t, size=k, replace=False).tolist())
    return TemporalMask(tuple(i in chosen for i in range(t)))


def full_mask(t: int) -> TemporalMask:
    """All frames selected (sparsity 0)."""
    return TemporalMask((True,) * t)


def sparsity_of(m: TemporalMask) -> float:
    """Fraction of frames without perturbation, 1 - K/T."""
    return 1.0 - m.k / m.t_frames
