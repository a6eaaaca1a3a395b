"""Synthetic datasets with exchangeability by construction.

Records are built so the calibration guarantee is provable and testable at
desk scale: candidate "quality" is a planted scalar drawn i.i.d. from a
configured distribution, embedded as a single-position token entropy so the
token-entropy scorer recovers it exactly through the normal pipeline. In
exact mode every record has exactly one correct candidate; in realistic mode
each candidate is independently correct with a configured probability (at
least one forced per record).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .records import Candidate, GenerationRecord

SYNTH_MODES = ("exact", "realistic")


@dataclass(frozen=True)
class UniformScores:
    """Uniform score distribution on [low, high); low must be >= 0 so the
    draws are embeddable as token entropies."""

    low: float = 0.0
    high: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.low) and math.isfinite(self.high)):
            raise ValueError("invalid distribution parameters: bounds must be finite")
        if self.low < 0.0:
            raise ValueError("invalid distribution parameters: low must be >= 0")
        if self.high <= self.low:
            raise ValueError("invalid distribution parameters: high must exceed low")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(self.low, self.high, size)


@dataclass(frozen=True)
class SynthConfig:
    """Shape and randomness of a generated dataset."""

    mode: str = "exact"
    n_records: int = 100
    m_candidates: int = 10
    correct_score_distribution: UniformScores = field(default_factory=UniformScores)
    incorrect_score_distribution: UniformScores = field(default_factory=lambda: UniformScores(0.5, 1.5))
    correct_fraction: float = 0.5
    pairwise_agreement: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.mode not in SYNTH_MODES:
            raise ValueError(f"unknown synth mode {self.mode!r}")
        if self.n_records < 2:
            raise ValueError("n_records must be >= 2")
        if self.m_candidates < 1:
            raise ValueError("m_candidates must be >= 1")
        if not 0.0 < self.correct_fraction <= 1.0:
            raise ValueError("correct_fraction must be in (0, 1]")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def _correctness_mask(cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    m = cfg.m_candidates
    if cfg.mode == "exact":
        mask = np.zeros(m, dtype=bool)
        mask[int(rng.integers(m))] = True
        return mask
    while True:
        mask = rng.random(m) < cfg.correct_fraction
        if mask.any():
            return mask


def _pairwise(cfg: SynthConfig, mask: np.ndarray) -> list[list[float]]:
    m = cfg.m_candidates
    matrix = [[1.0 if i == j else 0.0 for j in range(m)] for i in range(m)]
    if cfg.mode == "realistic" and cfg.pairwise_agreement:
        for i in range(m):
            for j in range(m):
                if i != j and mask[i] == mask[j]:
                    matrix[i][j] = 1.0
    return matrix


def generate(cfg: SynthConfig) -> list[GenerationRecord]:
    """Generate a dataset; identical configs (seed included) give identical output."""
    rng = np.random.default_rng(cfg.seed)
    records = []
    for i in range(cfg.n_records):
        mask = _correctness_mask(cfg, rng)
        n_correct = int(mask.sum())
        scores = np.empty(cfg.m_candidates, dtype=float)
        scores[mask] = cfg.correct_score_distribution.sample(rng, n_correct)
        scores[~mask] = cfg.incorrect_score_distribution.sample(rng, cfg.m_candidates - n_correct)
        candidates = [
            Candidate(
                text=f"record {i} candidate {j}",
                token_entropies=[float(scores[j])],
                ref_similarity=1.0 if mask[j] else 0.0,
            )
            for j in range(cfg.m_candidates)
        ]
        records.append(
            GenerationRecord(
                id=f"synth-{i:06d}",
                prompt=f"synthetic prompt {i}",
                references=[f"synthetic reference {i}"],
                candidates=candidates,
                pairwise_similarity=_pairwise(cfg, mask),
            )
        )
    return records


def theoretical_coverage_bounds(n_cal: int, alpha: float) -> tuple[float, float]:
    """Expected-coverage interval (1 - alpha, 1 - alpha + 1/(n_cal + 1)).

    Valid for exact-mode data where one calibration score per record enters
    the multiset: the threshold is then the k-th order statistic of n_cal
    i.i.d. draws and the covered fraction has this expectation sandwich.
    """
    if n_cal < 1:
        raise ValueError("n_cal must be >= 1")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    return 1.0 - alpha, 1.0 - alpha + 1.0 / (n_cal + 1)
