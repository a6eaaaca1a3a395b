"""Trial execution and metrics: miscoverage (EMR), coverage, and set size (APSS)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .calibration import (
    CalibrationConfig,
    PredictionSet,
    build_score_multiset,
    conformal_quantile,
    filter_assessable,
    prediction_set,
    split_cal_test,
)
from .records import GenerationRecord, SimilarityConfig, resolve_similarities
from .scoring import ScoreConfig, ScoredRecord, score_record


class PipelineError(RuntimeError):
    """A trial stage failed; the stage name prefixes the message."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"{stage}: {message}")


@dataclass(frozen=True)
class TrialResult:
    """Metrics of one (alpha, split_ratio, seed) calibration trial."""

    alpha: float
    split_ratio: float
    seed: int
    emr: float
    coverage: float
    apss: float
    q_hat: float
    q_level: float
    n_cal: int
    n_test: int
    n_filtered_out: int
    score_method: str


@dataclass(frozen=True)
class SummaryRow:
    """Seed-aggregated metrics for one (alpha, split_ratio) cell."""

    alpha: float
    split_ratio: float
    n_seeds: int
    emr_mean: float
    emr_std: float
    coverage_mean: float
    coverage_std: float
    apss_mean: float
    apss_std: float


def is_covered(scored: ScoredRecord, pset: PredictionSet, correctness_threshold: float) -> bool:
    """True iff some admitted candidate matches a reference at the threshold."""
    candidates = scored.record.candidates
    return any(
        candidates[i].ref_similarity is not None
        and candidates[i].ref_similarity >= correctness_threshold
        for i in pset.member_indices
    )


def emr(
    test: Sequence[ScoredRecord],
    sets: Sequence[PredictionSet],
    correctness_threshold: float,
) -> float:
    """Empirical miscoverage: the fraction of test records left uncovered."""
    if not test:
        raise ValueError("empty test set")
    if len(test) != len(sets):
        raise ValueError(f"got {len(test)} records but {len(sets)} prediction sets")
    uncovered = 0
    for scored, pset in zip(test, sets):
        if scored.record.id != pset.record_id:
            raise ValueError(f"id mismatch: record {scored.record.id!r} vs set {pset.record_id!r}")
        if not is_covered(scored, pset, correctness_threshold):
            uncovered += 1
    return uncovered / len(test)


def apss(sets: Sequence[PredictionSet]) -> float:
    """Average prediction-set size over the given sets."""
    if not sets:
        raise ValueError("empty prediction-set list")
    return math.fsum(s.set_size for s in sets) / len(sets)


def _stage(name: str, fn: Callable, *args):
    try:
        return fn(*args)
    except ValueError as exc:
        raise PipelineError(name, str(exc)) from exc


def prepare_scored(
    records: Sequence[GenerationRecord],
    score_cfg: ScoreConfig,
    similarity: SimilarityConfig | None = None,
) -> list[ScoredRecord]:
    """Resolve similarities and score every record (the per-dataset trial prologue).

    Checked here: an experiment run requires a uniform number of candidates
    across records.
    """
    if not records:
        raise PipelineError("load", "no records")
    sizes = {r.m for r in records}
    if len(sizes) > 1:
        raise PipelineError(
            "load", f"records have differing candidate counts {sorted(sizes)}; a run requires uniform M"
        )
    if similarity is None:
        similarity = SimilarityConfig(
            source="builtin_fallback", equivalence_threshold=score_cfg.equivalence_threshold
        )
    resolved = [_stage("resolve", resolve_similarities, r, similarity) for r in records]
    return [_stage("score", score_record, r, score_cfg) for r in resolved]


def trial_from_scored(
    scored: Sequence[ScoredRecord], cal_cfg: CalibrationConfig, score_method: str
) -> TrialResult:
    """Run the filter/split/calibrate/predict/metrics stages on scored records."""
    filtered = _stage("filter", filter_assessable, scored, cal_cfg.tau)
    n_filtered_out = len(scored) - len(filtered)
    cal, test = _stage("split", split_cal_test, filtered, cal_cfg.split_ratio, cal_cfg.seed)
    multiset = _stage("multiset", build_score_multiset, cal, cal_cfg)
    calibrated = _stage("quantile", conformal_quantile, multiset, cal_cfg.alpha, cal_cfg.score_variant)
    sets = [prediction_set(s, calibrated.q_hat) for s in test]
    miscoverage = _stage("metrics", emr, test, sets, cal_cfg.correctness_threshold)
    return TrialResult(
        alpha=cal_cfg.alpha,
        split_ratio=cal_cfg.split_ratio,
        seed=cal_cfg.seed,
        emr=miscoverage,
        coverage=1.0 - miscoverage,
        apss=apss(sets),
        q_hat=calibrated.q_hat,
        q_level=calibrated.q_level,
        n_cal=len(cal),
        n_test=len(test),
        n_filtered_out=n_filtered_out,
        score_method=score_method,
    )


def run_trial(
    records: Sequence[GenerationRecord],
    score_cfg: ScoreConfig,
    cal_cfg: CalibrationConfig,
    similarity: SimilarityConfig | None = None,
) -> TrialResult:
    """End-to-end single trial: resolve, score, filter, split, calibrate, evaluate."""
    scored = prepare_scored(records, score_cfg, similarity)
    return trial_from_scored(scored, cal_cfg, score_cfg.method)


def _mean_std(values: list[float]) -> tuple[float, float]:
    mean = math.fsum(values) / len(values)
    if len(values) < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (len(values) - 1)
    return mean, math.sqrt(var)


def aggregate(trials: Sequence[TrialResult]) -> list[SummaryRow]:
    """Group trials by (alpha, split_ratio) and report mean/sample-std per metric."""
    if not trials:
        raise ValueError("no trials to aggregate")
    methods = {t.score_method for t in trials}
    if len(methods) > 1:
        raise ValueError(f"trials mix score methods {sorted(methods)}")
    groups: dict[tuple[float, float], list[TrialResult]] = {}
    for trial in trials:
        groups.setdefault((trial.alpha, trial.split_ratio), []).append(trial)
    rows = []
    for (alpha, ratio) in sorted(groups):
        group = groups[(alpha, ratio)]
        emr_mean, emr_std = _mean_std([t.emr for t in group])
        cov_mean, cov_std = _mean_std([t.coverage for t in group])
        apss_mean, apss_std = _mean_std([t.apss for t in group])
        rows.append(
            SummaryRow(
                alpha=alpha,
                split_ratio=ratio,
                n_seeds=len(group),
                emr_mean=emr_mean,
                emr_std=emr_std,
                coverage_mean=cov_mean,
                coverage_std=cov_std,
                apss_mean=apss_mean,
                apss_std=apss_std,
            )
        )
    return rows
