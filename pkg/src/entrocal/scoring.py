"""Per-candidate uncertainty scores.

Two scoring routes over a record's sampled candidates:

* token entropy -- the per-position Shannon entropies of the model's
  next-token distributions, summed (or averaged) over the generation.
  Lower totals mean the model was more decided while generating.
* semantic self-consistency -- one minus a convex combination of (i) the
  fraction of candidates semantically equivalent to this one and (ii) its
  average pairwise similarity to the sampled set. The frequency-only
  special case (weight 1 on the equivalence fraction) is the classic
  self-consistency baseline.

Both produce nonconformity scores: larger is more uncertain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .records import GenerationRecord, Candidate

SCORE_METHODS = ("token_entropy", "consistency")
ENTROPY_AGGREGATIONS = ("sum", "mean")


@dataclass(frozen=True)
class ScoreConfig:
    """Scoring method and its parameters.

    lambda_weight trades equivalence frequency against average similarity in
    the consistency score; include_self controls whether a candidate counts
    itself among its peers. Both are ignored by the token_entropy method.
    """

    method: str = "token_entropy"
    entropy_aggregation: str = "sum"
    lambda_weight: float = 0.5
    equivalence_threshold: float = 0.9
    include_self: bool = True

    def __post_init__(self):
        if self.method not in SCORE_METHODS:
            raise ValueError(f"unknown score method {self.method!r}")
        if self.entropy_aggregation not in ENTROPY_AGGREGATIONS:
            raise ValueError(f"unknown entropy aggregation {self.entropy_aggregation!r}")
        if not 0.0 <= self.lambda_weight <= 1.0:
            raise ValueError("lambda_weight must be in [0, 1]")
        if not 0.0 <= self.equivalence_threshold <= 1.0:
            raise ValueError("equivalence_threshold must be in [0, 1]")


@dataclass
class ScoredRecord:
    """A record plus one nonconformity score per candidate, in candidate order."""

    record: GenerationRecord
    scores: list[float]


def entropy_at_position(distribution) -> float:
    """Shannon entropy, in nats, of one next-token distribution.

    Parameters
    ----------
    distribution : sequence of float
        Probabilities over a vocabulary slice; entries >= 0, summing to 1
        within 1e-6.

    Returns
    -------
    float
        -sum(p * ln p) with 0 * ln 0 taken as 0; lies in [0, ln(slice size)].
    """
    p = np.asarray(distribution, dtype=float)
    if p.ndim != 1:
        raise ValueError("distribution must be one-dimensional")
    if p.size and float(p.min()) < 0.0:
        raise ValueError("negative probability")
    total = float(p.sum())
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"distribution sums to {total:.8g}, expected 1")
    positive = p[p > 0.0]
    return float(-(positive * np.log(positive)).sum()) + 0.0


def token_entropy_score(candidate: Candidate, cfg: ScoreConfig) -> float:
    """Aggregate per-token entropy of one candidate.

    Uses precomputed token_entropies when present, otherwise derives them
    from token_distributions. Aggregation is the sum over positions, or the
    mean when cfg.entropy_aggregation == "mean".
    """
    if candidate.token_entropies is not None:
        entropies = [float(h) for h in candidate.token_entropies]
    elif candidate.token_distributions is not None:
        entropies = [entropy_at_position(row) for row in candidate.token_distributions]
    else:
        raise ValueError("entropy inputs missing")
    if not entropies:
        raise ValueError("empty candidate")
    total = math.fsum(entropies)
    if cfg.entropy_aggregation == "mean":
        return total / len(entropies)
    return total


def consistency_score(index: int, record: GenerationRecord, cfg: ScoreConfig) -> float:
    """Semantic self-consistency nonconformity of candidate `index`, in [0, 1].

    With f the fraction of candidates whose similarity to this one reaches
    cfg.equivalence_threshold and s the average similarity to them:

        u = 1 - lambda * f - (1 - lambda) * s

    Candidates agreeing with the rest of the sample get low scores. When
    cfg.include_self is false, the candidate itself is excluded and both
    denominators become M - 1.
    """
    matrix = record.pairwise_similarity
    if matrix is None:
        raise ValueError("pairwise_similarity missing (apply resolve_similarities first)")
    m = record.m
    row = matrix[index]
    if cfg.include_self:
        values = list(row)
    else:
        if m == 1:
            raise ValueError("no peers")
        values = [row[j] for j in range(m) if j != index]
    freq = sum(1 for v in values if v >= cfg.equivalence_threshold) / len(values)
    avg = math.fsum(values) / len(values)
    u = 1.0 - cfg.lambda_weight * freq - (1.0 - cfg.lambda_weight) * avg
    return min(1.0, max(0.0, u))


def score_record(record: GenerationRecord, cfg: ScoreConfig) -> ScoredRecord:
    """Score every candidate of a record with the configured method."""
    scores = []
    for i in range(record.m):
        try:
            if cfg.method == "token_entropy":
                value = token_entropy_score(record.candidates[i], cfg)
            else:
                value = consistency_score(i, record, cfg)
        except ValueError as exc:
            raise ValueError(f"candidate {i}: {exc}") from exc
        if not math.isfinite(value):
            raise ValueError(f"candidate {i}: non-finite score {value!r}")
        scores.append(float(value))
    return ScoredRecord(record=record, scores=scores)
