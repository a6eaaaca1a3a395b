"""entrocal: conformal calibration over sampled language-model generations.

Scores candidate generations by token-level entropy (or semantic
self-consistency), calibrates a split-conformal threshold, and builds
prediction sets with finite-sample coverage guarantees. Ships a synthetic
exchangeability oracle, a sweep runner with CSV emission, a FastAPI service,
and a thin CLI client.
"""

__version__ = "0.1.0"

from .calibration import (
    CalibrationConfig,
    CalibrationResult,
    PredictionSet,
    build_score_multiset,
    conformal_quantile,
    filter_assessable,
    prediction_set,
    split_cal_test,
)
from .evaluation import (
    PipelineError,
    SummaryRow,
    TrialResult,
    aggregate,
    apss,
    emr,
    is_covered,
    run_trial,
)
from .records import (
    Candidate,
    DatasetError,
    GenerationRecord,
    SimilarityConfig,
    builtin_similarity,
    dataset_to_jsonl,
    load_records,
    parse_records,
    resolve_similarities,
    scan_dataset,
    serialize_record,
    validate_record,
)
from .scoring import (
    ScoreConfig,
    ScoredRecord,
    consistency_score,
    entropy_at_position,
    score_record,
    token_entropy_score,
)
from .sweep import RunSpec, run_sweep, seed_range
from .synth import SynthConfig, UniformScores, generate, theoretical_coverage_bounds

__all__ = [
    "__version__",
    "CalibrationConfig",
    "CalibrationResult",
    "Candidate",
    "DatasetError",
    "GenerationRecord",
    "PipelineError",
    "PredictionSet",
    "RunSpec",
    "ScoreConfig",
    "ScoredRecord",
    "SimilarityConfig",
    "SummaryRow",
    "SynthConfig",
    "TrialResult",
    "UniformScores",
    "aggregate",
    "apss",
    "build_score_multiset",
    "builtin_similarity",
    "conformal_quantile",
    "consistency_score",
    "dataset_to_jsonl",
    "emr",
    "entropy_at_position",
    "filter_assessable",
    "generate",
    "is_covered",
    "load_records",
    "parse_records",
    "prediction_set",
    "resolve_similarities",
    "run_sweep",
    "run_trial",
    "scan_dataset",
    "score_record",
    "seed_range",
    "serialize_record",
    "split_cal_test",
    "theoretical_coverage_bounds",
    "token_entropy_score",
    "validate_record",
]
