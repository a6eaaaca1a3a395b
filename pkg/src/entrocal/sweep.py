"""Sweep execution over an alpha x split-ratio x seed grid, plus file emission.

Outputs are plot-ready: trials.csv has one flat row per trial, summary.csv one
row per (alpha, split_ratio) with seed means/stds, and manifest.json records
every configuration value plus the dataset digest so a run can be reproduced
byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from . import __version__
from .calibration import CalibrationConfig
from .evaluation import (
    PipelineError,
    SummaryRow,
    TrialResult,
    aggregate,
    prepare_scored,
    trial_from_scored,
)
from .records import GenerationRecord
from .scoring import ScoreConfig, ScoredRecord

DEFAULT_ALPHAS = tuple(i / 10 for i in range(1, 10))
OUTPUT_FORMATS = ("csv", "json")

TRIALS_COLUMNS = (
    "alpha",
    "split_ratio",
    "seed",
    "score_method",
    "entropy_aggregation",
    "lambda",
    "tau",
    "correctness_threshold",
    "score_variant",
    "n_filtered_out",
    "n_cal",
    "n_test",
    "q_level",
    "q_hat",
    "emr",
    "coverage",
    "apss",
)

SUMMARY_COLUMNS = (
    "alpha",
    "split_ratio",
    "n_seeds",
    "emr_mean",
    "emr_std",
    "coverage_mean",
    "coverage_std",
    "apss_mean",
    "apss_std",
)


def seed_range(seed_start: int = 0, seed_count: int = 100) -> tuple[int, ...]:
    """Seeds derived as seed_start + index, so a sweep is pinned by two integers."""
    if seed_count < 1:
        raise ValueError("seed_count must be >= 1")
    return tuple(seed_start + i for i in range(seed_count))


@dataclass(frozen=True)
class RunSpec:
    """Full configuration of one sweep."""

    score: ScoreConfig = field(default_factory=ScoreConfig)
    tau: float = 0.9
    correctness_threshold: float = 0.7
    score_variant: str = "correct_only"
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    split_ratios: tuple[float, ...] = (0.5,)
    seeds: tuple[int, ...] = field(default_factory=seed_range)
    workers: int = 1
    formats: tuple[str, ...] = ("csv",)

    def __post_init__(self):
        if not self.alphas or any(not 0.0 < a < 1.0 for a in self.alphas):
            raise ValueError("alphas must be non-empty with every value in (0, 1)")
        if not self.split_ratios or any(not 0.0 < r < 1.0 for r in self.split_ratios):
            raise ValueError("split_ratios must be non-empty with every value in (0, 1)")
        if not self.seeds:
            raise ValueError("at least one seed required")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        unknown = set(self.formats) - set(OUTPUT_FORMATS)
        if not self.formats or unknown:
            raise ValueError(f"formats must be a non-empty subset of {OUTPUT_FORMATS}")

    def calibration_config(self, alpha: float, split_ratio: float, seed: int) -> CalibrationConfig:
        return CalibrationConfig(
            alpha=alpha,
            tau=self.tau,
            split_ratio=split_ratio,
            seed=seed,
            score_variant=self.score_variant,
            correctness_threshold=self.correctness_threshold,
        )


def _run_chunk(args) -> list[TrialResult]:
    scored, spec, triples = args
    results = []
    for alpha, ratio, seed in triples:
        try:
            cfg = spec.calibration_config(alpha, ratio, seed)
            results.append(trial_from_scored(scored, cfg, spec.score.method))
        except (PipelineError, ValueError) as exc:
            raise RuntimeError(
                f"trial alpha={alpha} split_ratio={ratio} seed={seed} failed: {exc}"
            ) from exc
    return results


def run_sweep(
    records: Sequence[GenerationRecord], spec: RunSpec
) -> tuple[list[TrialResult], list[SummaryRow]]:
    """Execute every (alpha, split_ratio, seed) trial; returns sorted trials and summary."""
    scored = prepare_scored(records, spec.score)
    triples = [(a, r, s) for a in spec.alphas for r in spec.split_ratios for s in spec.seeds]
    if spec.workers > 1:
        results = _run_parallel(scored, spec, triples)
    else:
        results = _run_chunk((scored, spec, triples))
    results.sort(key=lambda t: (t.alpha, t.split_ratio, t.seed))
    return results, aggregate(results)


def _run_parallel(
    scored: list[ScoredRecord], spec: RunSpec, triples: list[tuple[float, float, int]]
) -> list[TrialResult]:
    workers = min(spec.workers, len(triples))
    chunk_size = math.ceil(len(triples) / workers)
    chunks = [triples[i : i + chunk_size] for i in range(0, len(triples), chunk_size)]
    results: list[TrialResult] = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_run_chunk, [(scored, spec, chunk) for chunk in chunks]):
            results.extend(part)
    return results


def _full(value: float) -> str:
    if math.isinf(value):
        return "inf"
    return repr(float(value))


def _sig6(value: float) -> str:
    if math.isinf(value):
        return "inf"
    return format(float(value), ".6g")


def _trial_row(trial: TrialResult, spec: RunSpec) -> list[str]:
    return [
        _full(trial.alpha),
        _full(trial.split_ratio),
        str(trial.seed),
        spec.score.method,
        spec.score.entropy_aggregation,
        _full(spec.score.lambda_weight),
        _full(spec.tau),
        _full(spec.correctness_threshold),
        spec.score_variant,
        str(trial.n_filtered_out),
        str(trial.n_cal),
        str(trial.n_test),
        _full(trial.q_level),
        _full(trial.q_hat),
        _sig6(trial.emr),
        _sig6(trial.coverage),
        _sig6(trial.apss),
    ]


def trials_csv(trials: Sequence[TrialResult], spec: RunSpec) -> str:
    lines = [",".join(TRIALS_COLUMNS)]
    lines.extend(",".join(_trial_row(t, spec)) for t in trials)
    return "\n".join(lines) + "\n"


def summary_csv(rows: Sequence[SummaryRow]) -> str:
    lines = [",".join(SUMMARY_COLUMNS)]
    for row in rows:
        lines.append(
            ",".join(
                [
                    _full(row.alpha),
                    _full(row.split_ratio),
                    str(row.n_seeds),
                    _sig6(row.emr_mean),
                    _sig6(row.emr_std),
                    _sig6(row.coverage_mean),
                    _sig6(row.coverage_std),
                    _sig6(row.apss_mean),
                    _sig6(row.apss_std),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def _json_value(value: float):
    return "inf" if isinstance(value, float) and math.isinf(value) else value


def trials_json(trials: Sequence[TrialResult], spec: RunSpec) -> str:
    rows = [dict(zip(TRIALS_COLUMNS, _trial_row(t, spec))) for t in trials]
    # Re-type the numeric cells so JSON consumers get numbers, not strings.
    for row, trial in zip(rows, trials):
        row.update(
            alpha=trial.alpha,
            split_ratio=trial.split_ratio,
            seed=trial.seed,
            n_filtered_out=trial.n_filtered_out,
            n_cal=trial.n_cal,
            n_test=trial.n_test,
            q_level=trial.q_level,
            q_hat=_json_value(trial.q_hat),
            emr=trial.emr,
            coverage=trial.coverage,
            apss=trial.apss,
        )
        row["lambda"] = spec.score.lambda_weight
        row["tau"] = spec.tau
        row["correctness_threshold"] = spec.correctness_threshold
    return json.dumps(rows, indent=2, sort_keys=True) + "\n"


def summary_json(rows: Sequence[SummaryRow]) -> str:
    payload = [
        {
            "alpha": r.alpha,
            "split_ratio": r.split_ratio,
            "n_seeds": r.n_seeds,
            "emr_mean": r.emr_mean,
            "emr_std": r.emr_std,
            "coverage_mean": r.coverage_mean,
            "coverage_std": r.coverage_std,
            "apss_mean": r.apss_mean,
            "apss_std": r.apss_std,
        }
        for r in rows
    ]
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def dataset_digest(content: str | bytes) -> str:
    data = content.encode("utf-8") if isinstance(content, str) else content
    return hashlib.sha256(data).hexdigest()


def manifest_json(spec: RunSpec, digest: str, n_records: int, m_candidates: int) -> str:
    manifest = {
        "tool": {"name": "entrocal", "version": __version__},
        "dataset": {"sha256": digest, "n_records": n_records, "m_candidates": m_candidates},
        "score": {
            "method": spec.score.method,
            "entropy_aggregation": spec.score.entropy_aggregation,
            "lambda": spec.score.lambda_weight,
            "equivalence_threshold": spec.score.equivalence_threshold,
            "include_self": spec.score.include_self,
        },
        "tau": spec.tau,
        "correctness_threshold": spec.correctness_threshold,
        "score_variant": spec.score_variant,
        "alphas": list(spec.alphas),
        "split_ratios": list(spec.split_ratios),
        "seeds": list(spec.seeds),
        "workers": spec.workers,
        "formats": list(spec.formats),
    }
    return json.dumps(manifest, indent=2, sort_keys=True) + "\n"


def render_outputs(
    trials: Sequence[TrialResult],
    summary: Sequence[SummaryRow],
    spec: RunSpec,
    digest: str,
    n_records: int,
    m_candidates: int,
) -> dict[str, str]:
    """Map output filename -> content for one completed sweep."""
    files = {"manifest.json": manifest_json(spec, digest, n_records, m_candidates)}
    if "csv" in spec.formats:
        files["trials.csv"] = trials_csv(trials, spec)
        files["summary.csv"] = summary_csv(summary)
    if "json" in spec.formats:
        files["trials.json"] = trials_json(trials, spec)
        files["summary.json"] = summary_json(summary)
    return files
