"""FastAPI service wrapping the calibration engine.

Endpoints mirror the CLI surface: dataset validation, synthetic dataset
generation, and full sweep runs. Datasets travel as line-delimited record
content; sweep outputs come back as a filename -> content map so any client
can persist them byte-identically.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict, Field

from . import __version__
from .evaluation import PipelineError
from .records import DatasetError, dataset_to_jsonl, parse_records, scan_dataset
from .scoring import ScoreConfig, entropy_at_position
from .sweep import DEFAULT_ALPHAS, RunSpec, dataset_digest, render_outputs, run_sweep, seed_range
from .synth import SynthConfig, UniformScores, generate

app = FastAPI(title="entrocal", version=__version__)


class HealthResponse(BaseModel):
    name: str
    version: str


class ViolationModel(BaseModel):
    line: int | None = None
    path: str = ""
    message: str


class ValidateRequest(BaseModel):
    content: str


class ValidateResponse(BaseModel):
    ok: bool
    n_records: int
    violations: list[ViolationModel]


class UniformModel(BaseModel):
    low: float = 0.0
    high: float = 1.0


class SynthRequest(BaseModel):
    mode: str = "exact"
    n_records: int = 100
    m_candidates: int = 10
    correct_score_distribution: UniformModel = UniformModel(low=0.0, high=1.0)
    incorrect_score_distribution: UniformModel = UniformModel(low=0.5, high=1.5)
    correct_fraction: float = 0.5
    pairwise_agreement: bool = False
    seed: int = 0


class SynthResponse(BaseModel):
    content: str
    n_records: int


class RunRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    dataset: str
    method: str = "token_entropy"
    entropy_aggregation: str = "sum"
    lambda_weight: float = Field(default=0.5, alias="lambda")
    equivalence_threshold: float = 0.9
    include_self: bool = True
    tau: float = 0.9
    correctness_threshold: float = 0.7
    score_variant: str = "correct_only"
    alphas: list[float] = Field(default_factory=lambda: list(DEFAULT_ALPHAS))
    split_ratios: list[float] = Field(default_factory=lambda: [0.5])
    seeds: list[int] | None = None
    seed_start: int = 0
    seed_count: int = 100
    workers: int = 1
    formats: list[str] = Field(default_factory=lambda: ["csv"])


class RunResponse(BaseModel):
    files: dict[str, str]
    n_trials: int


class EntropyRequest(BaseModel):
    distributions: list[list[float]]


class EntropyResponse(BaseModel):
    entropies: list[float]


def _bad_request(exc: Exception) -> HTTPException:
    return HTTPException(status_code=400, detail=str(exc))


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(name="entrocal", version=__version__)


@app.post("/validate", response_model=ValidateResponse)
def validate(request: ValidateRequest) -> ValidateResponse:
    report = scan_dataset(request.content)
    return ValidateResponse(
        ok=report.ok,
        n_records=report.n_records,
        violations=[ViolationModel(line=v.line, path=v.path, message=v.message) for v in report.violations],
    )


@app.post("/synth", response_model=SynthResponse)
def synth(request: SynthRequest) -> SynthResponse:
    try:
        cfg = SynthConfig(
            mode=request.mode,
            n_records=request.n_records,
            m_candidates=request.m_candidates,
            correct_score_distribution=UniformScores(
                request.correct_score_distribution.low, request.correct_score_distribution.high
            ),
            incorrect_score_distribution=UniformScores(
                request.incorrect_score_distribution.low, request.incorrect_score_distribution.high
            ),
            correct_fraction=request.correct_fraction,
            pairwise_agreement=request.pairwise_agreement,
            seed=request.seed,
        )
        records = generate(cfg)
    except ValueError as exc:
        raise _bad_request(exc) from exc
    return SynthResponse(content=dataset_to_jsonl(records), n_records=len(records))


@app.post("/run", response_model=RunResponse)
def run(request: RunRequest) -> RunResponse:
    try:
        records = parse_records(request.dataset)
        spec = RunSpec(
            score=ScoreConfig(
                method=request.method,
                entropy_aggregation=request.entropy_aggregation,
                lambda_weight=request.lambda_weight,
                equivalence_threshold=request.equivalence_threshold,
                include_self=request.include_self,
            ),
            tau=request.tau,
            correctness_threshold=request.correctness_threshold,
            score_variant=request.score_variant,
            alphas=tuple(request.alphas),
            split_ratios=tuple(request.split_ratios),
            seeds=tuple(request.seeds) if request.seeds else seed_range(request.seed_start, request.seed_count),
            workers=request.workers,
            formats=tuple(request.formats),
        )
        trials, summary = run_sweep(records, spec)
    except (DatasetError, PipelineError, ValueError, RuntimeError) as exc:
        raise _bad_request(exc) from exc
    files = render_outputs(
        trials,
        summary,
        spec,
        digest=dataset_digest(request.dataset),
        n_records=len(records),
        m_candidates=records[0].m,
    )
    return RunResponse(files=files, n_trials=len(trials))


@app.post("/entropies", response_model=EntropyResponse)
def entropies(request: EntropyRequest) -> EntropyResponse:
    try:
        values = [entropy_at_position(row) for row in request.distributions]
    except ValueError as exc:
        raise _bad_request(exc) from exc
    return EntropyResponse(entropies=values)
