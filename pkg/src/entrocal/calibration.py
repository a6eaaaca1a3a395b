"""Split conformal calibration over scored records.

The pipeline: keep records where some candidate matches a reference at
similarity >= tau (assessable records), split them into calibration and test
subsets by seed, pool the calibration candidates' nonconformity scores into a
multiset, take its finite-sample-corrected upper quantile as the threshold,
and admit every test candidate scoring at or below it into the prediction
set. Under exchangeability the set contains a correct answer with
probability at least 1 - alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .scoring import ScoredRecord

SCORE_VARIANTS = ("correct_only", "all_candidates")


@dataclass(frozen=True)
class CalibrationConfig:
    """Knobs for one calibration run."""

    alpha: float
    tau: float = 0.9
    split_ratio: float = 0.5
    seed: int = 0
    score_variant: str = "correct_only"
    correctness_threshold: float = 0.7

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must be in [0, 1]")
        if not 0.0 < self.split_ratio < 1.0:
            raise ValueError("split_ratio must be in (0, 1)")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.score_variant not in SCORE_VARIANTS:
            raise ValueError(f"unknown score variant {self.score_variant!r}")
        if not 0.0 <= self.correctness_threshold <= 1.0:
            raise ValueError("correctness_threshold must be in [0, 1]")


@dataclass(frozen=True)
class CalibrationResult:
    """Calibrated threshold and the quantile bookkeeping behind it.

    q_hat is +inf when the corrected quantile level exceeds 1 (too few
    calibration scores for the requested alpha); prediction sets then admit
    every candidate.
    """

    q_hat: float
    q_level: float
    n: int
    alpha: float
    score_variant: str


@dataclass(frozen=True)
class PredictionSet:
    """Indices of one record's candidates admitted by the threshold."""

    record_id: str
    member_indices: tuple[int, ...]
    set_size: int


def _best_ref_similarity(scored: ScoredRecord) -> float:
    best = -1.0
    for i, cand in enumerate(scored.record.candidates):
        if cand.ref_similarity is None:
            raise ValueError(
                f"record {scored.record.id!r} candidate {i}: ref_similarity missing "
                "(apply resolve_similarities first)"
            )
        best = max(best, cand.ref_similarity)
    return best


def filter_assessable(records: Sequence[ScoredRecord], tau: float) -> list[ScoredRecord]:
    """Keep records whose best candidate/reference similarity reaches tau."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must be in [0, 1]")
    kept = [r for r in records if _best_ref_similarity(r) >= tau]
    if not kept:
        raise ValueError(f"no assessable samples at tau={tau}")
    return kept


def split_cal_test(records: Sequence, split_ratio: float, seed: int) -> tuple[list, list]:
    """Seed-determined random partition into (calibration, test).

    The calibration part gets round(split_ratio * N) records, clamped so both
    parts are non-empty; each part preserves the input order.
    """
    if not 0.0 < split_ratio < 1.0:
        raise ValueError("split_ratio must be in (0, 1)")
    n = len(records)
    if n < 2:
        raise ValueError("need at least 2 records to split")
    n_cal = int(math.floor(split_ratio * n + 0.5))
    n_cal = min(max(n_cal, 1), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    cal_idx = np.sort(perm[:n_cal])
    test_idx = np.sort(perm[n_cal:])
    return [records[i] for i in cal_idx], [records[i] for i in test_idx]


def build_score_multiset(cal: Sequence[ScoredRecord], cfg: CalibrationConfig) -> np.ndarray:
    """Pool calibration nonconformity scores into the multiset R.

    correct_only keeps the scores of candidates whose ref_similarity reaches
    the correctness threshold (every such candidate, from every record);
    all_candidates keeps everything. Duplicates are kept.
    """
    values: list[float] = []
    for scored in cal:
        if cfg.score_variant == "all_candidates":
            values.extend(scored.scores)
            continue
        for i, cand in enumerate(scored.record.candidates):
            if cand.ref_similarity is None:
                raise ValueError(
                    f"record {scored.record.id!r} candidate {i}: ref_similarity missing"
                )
            if cand.ref_similarity >= cfg.correctness_threshold:
                values.append(scored.scores[i])
    if not values:
        raise ValueError(
            "no calibration scores (tau or correctness_threshold excluded every candidate)"
        )
    return np.asarray(values, dtype=float)


def conformal_quantile(scores, alpha: float, score_variant: str = "correct_only") -> CalibrationResult:
    """Finite-sample-corrected upper quantile of the calibration multiset.

    Parameters
    ----------
    scores : array-like of float
        Nonconformity multiset R, n >= 1, duplicates meaningful.
    alpha : float
        Target miscoverage in (0, 1).

    Returns
    -------
    CalibrationResult
        q_hat is the k-th smallest score with k = ceil((1 - alpha) * (n + 1))
        (no interpolation, ties kept), or +inf when k > n.
    """
    arr = np.asarray(scores, dtype=float)
    if arr.ndim != 1:
        arr = arr.ravel()
    n = int(arr.size)
    if n == 0:
        raise ValueError("empty score multiset")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    k = math.ceil((1.0 - alpha) * (n + 1))
    q_level = k / n
    if k > n:
        q_hat = math.inf
    else:
        q_hat = float(np.partition(arr, k - 1)[k - 1])
    return CalibrationResult(q_hat=q_hat, q_level=q_level, n=n, alpha=alpha, score_variant=score_variant)


def prediction_set(scored: ScoredRecord, q_hat: float) -> PredictionSet:
    """Candidates whose score is at or below the threshold (possibly none, possibly all)."""
    members = tuple(i for i, s in enumerate(scored.scores) if s <= q_hat)
    return PredictionSet(record_id=scored.record.id, member_indices=members, set_size=len(members))
