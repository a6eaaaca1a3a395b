"""Generation-record ingestion: line format, validation, similarity resolution.

A dataset is a UTF-8 file with one JSON record per line. Each record holds a
prompt, its reference answers, and the sampled candidate generations with
whatever per-token statistics and similarity scores the producer had
available. Missing similarity scores can be filled in with a deterministic
bag-of-words fallback so the rest of the pipeline never has to touch text.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Iterator

PAIRWISE_TOLERANCE = 1e-9
DISTRIBUTION_SUM_TOLERANCE = 1e-6

SIMILARITY_SOURCES = ("provided_only", "builtin_fallback", "builtin_only")

_RECORD_FIELDS = ("id", "prompt", "references", "decoding", "candidates", "pairwise_similarity")
_CANDIDATE_FIELDS = ("text", "tokens", "token_entropies", "token_distributions", "ref_similarity")


class DatasetError(ValueError):
    """Malformed or invalid dataset content.

    Carries the one-based line number and the field path of the offending
    value when known; both are folded into the message.
    """

    def __init__(self, message: str, *, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        parts = []
        if line is not None:
            parts.append(f"line {line}")
        if path:
            parts.append(path)
        parts.append(message)
        super().__init__(": ".join(parts))


@dataclass
class Candidate:
    """One sampled generation with optional per-token statistics."""

    text: str | None = None
    tokens: list[str] | None = None
    token_entropies: list[float] | None = None
    token_distributions: list[list[float]] | None = None
    ref_similarity: float | None = None
    extra: dict[str, Any] = field(default_factory=dict)


@dataclass
class GenerationRecord:
    """One QA instance: a prompt, its references, and sampled candidates."""

    id: str
    prompt: str
    references: list[str]
    candidates: list[Candidate]
    decoding: dict[str, float] | None = None
    pairwise_similarity: list[list[float]] | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def m(self) -> int:
        return len(self.candidates)


@dataclass(frozen=True)
class SimilarityConfig:
    """How candidate/reference similarity scores are obtained.

    source:
        provided_only    -- scores must already be present in the record
        builtin_fallback -- keep provided scores, compute missing ones
        builtin_only     -- recompute everything with the builtin measure
    """

    source: str = "builtin_fallback"
    equivalence_threshold: float = 0.9

    def __post_init__(self):
        if self.source not in SIMILARITY_SOURCES:
            raise ValueError(f"unknown similarity source {self.source!r}")
        if not 0.0 <= self.equivalence_threshold <= 1.0:
            raise ValueError("equivalence_threshold must be in [0, 1]")


@dataclass(frozen=True)
class Violation:
    """A single invariant violation, located by field path (and line, if known)."""

    path: str
    message: str
    line: int | None = None

    def __str__(self) -> str:
        loc = f"line {self.line}: " if self.line is not None else ""
        return f"{loc}{self.path}: {self.message}" if self.path else f"{loc}{self.message}"


@dataclass(frozen=True)
class DatasetReport:
    """Outcome of scanning a dataset: record count and collected violations."""

    n_records: int
    violations: list[Violation]

    @property
    def ok(self) -> bool:
        return not self.violations


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _string_field(obj: dict, key: str, *, line: int | None) -> str:
    value = obj.get(key)
    if not isinstance(value, str):
        raise DatasetError(f"expected a string, got {type(value).__name__}", line=line, path=key)
    return value


def _number_list(value: Any, *, line: int | None, path: str) -> list[float]:
    if not isinstance(value, list) or not all(_is_number(v) for v in value):
        raise DatasetError("expected a list of numbers", line=line, path=path)
    return [float(v) for v in value]


def _candidate_from_json(obj: Any, *, line: int | None, path: str) -> Candidate:
    if not isinstance(obj, dict):
        raise DatasetError("candidate must be an object", line=line, path=path)
    text = obj.get("text")
    if text is not None and not isinstance(text, str):
        raise DatasetError("expected a string", line=line, path=f"{path}.text")
    tokens = obj.get("tokens")
    if tokens is not None:
        if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
            raise DatasetError("expected a list of strings", line=line, path=f"{path}.tokens")
    entropies = obj.get("token_entropies")
    if entropies is not None:
        entropies = _number_list(entropies, line=line, path=f"{path}.token_entropies")
    distributions = obj.get("token_distributions")
    if distributions is not None:
        if not isinstance(distributions, list):
            raise DatasetError("expected a list of distributions", line=line, path=f"{path}.token_distributions")
        distributions = [
            _number_list(row, line=line, path=f"{path}.token_distributions[{t}]")
            for t, row in enumerate(distributions)
        ]
    ref_similarity = obj.get("ref_similarity")
    if ref_similarity is not None:
        if not _is_number(ref_similarity):
            raise DatasetError("expected a number", line=line, path=f"{path}.ref_similarity")
        ref_similarity = float(ref_similarity)
    extra = {k: v for k, v in obj.items() if k not in _CANDIDATE_FIELDS}
    return Candidate(
        text=text,
        tokens=list(tokens) if tokens is not None else None,
        token_entropies=entropies,
        token_distributions=distributions,
        ref_similarity=ref_similarity,
        extra=extra,
    )


def record_from_json(obj: Any, *, line: int | None = None) -> GenerationRecord:
    """Build a GenerationRecord from a decoded JSON object, checking structure."""
    if not isinstance(obj, dict):
        raise DatasetError("record must be a JSON object", line=line)
    record_id = _string_field(obj, "id", line=line)
    prompt = _string_field(obj, "prompt", line=line)
    references = obj.get("references")
    if (
        not isinstance(references, list)
        or not references
        or not all(isinstance(r, str) for r in references)
    ):
        raise DatasetError("expected a non-empty list of strings", line=line, path="references")
    decoding = obj.get("decoding")
    if decoding is not None:
        if not isinstance(decoding, dict) or not all(
            isinstance(k, str) and _is_number(v) for k, v in decoding.items()
        ):
            raise DatasetError("expected a map of names to numbers", line=line, path="decoding")
        decoding = {k: float(v) for k, v in decoding.items()}
    raw_candidates = obj.get("candidates")
    if not isinstance(raw_candidates, list) or not raw_candidates:
        raise DatasetError("expected a non-empty list of candidates", line=line, path="candidates")
    candidates = [
        _candidate_from_json(c, line=line, path=f"candidates[{i}]") for i, c in enumerate(raw_candidates)
    ]
    matrix = obj.get("pairwise_similarity")
    if matrix is not None:
        if not isinstance(matrix, list):
            raise DatasetError("expected a matrix", line=line, path="pairwise_similarity")
        matrix = [
            _number_list(row, line=line, path=f"pairwise_similarity[{i}]") for i, row in enumerate(matrix)
        ]
    extra = {k: v for k, v in obj.items() if k not in _RECORD_FIELDS}
    return GenerationRecord(
        id=record_id,
        prompt=prompt,
        references=list(references),
        candidates=candidates,
        decoding=decoding,
        pairwise_similarity=matrix,
        extra=extra,
    )


def _validate_candidate(index: int, cand: Candidate) -> list[Violation]:
    path = f"candidates[{index}]"
    violations = []
    if cand.text is None and cand.token_entropies is None and cand.token_distributions is None:
        violations.append(
            Violation(path, "candidate carries none of text, token_entropies, token_distributions")
        )
    if cand.token_entropies is not None:
        for t, h in enumerate(cand.token_entropies):
            if not math.isfinite(h) or h < 0.0:
                violations.append(Violation(f"{path}.token_entropies[{t}]", f"negative entropy {h!r}"))
    if cand.token_distributions is not None:
        for t, row in enumerate(cand.token_distributions):
            row_path = f"{path}.token_distributions[{t}]"
            if any(not math.isfinite(p) or p < 0.0 for p in row):
                violations.append(Violation(row_path, "negative probability"))
                continue
            total = math.fsum(row)
            if abs(total - 1.0) > DISTRIBUTION_SUM_TOLERANCE:
                violations.append(Violation(row_path, f"distribution sums to {total:.8g}, expected 1"))
    if cand.ref_similarity is not None and not (
        math.isfinite(cand.ref_similarity) and 0.0 <= cand.ref_similarity <= 1.0
    ):
        violations.append(Violation(f"{path}.ref_similarity", f"must be in [0, 1], got {cand.ref_similarity!r}"))
    lengths = {
        name: len(value)
        for name, value in (
            ("tokens", cand.tokens),
            ("token_entropies", cand.token_entropies),
            ("token_distributions", cand.token_distributions),
        )
        if value is not None
    }
    if len(set(lengths.values())) > 1:
        detail = ", ".join(f"{name}={n}" for name, n in sorted(lengths.items()))
        violations.append(Violation(path, f"per-token field length mismatch ({detail})"))
    return violations


def _validate_matrix(matrix: list[list[float]], m: int) -> list[Violation]:
    violations = []
    if len(matrix) != m or any(len(row) != m for row in matrix):
        return [Violation("pairwise_similarity", f"must be {m}x{m}")]
    for i in range(m):
        for j in range(m):
            v = matrix[i][j]
            if not math.isfinite(v) or not 0.0 <= v <= 1.0:
                violations.append(Violation(f"pairwise_similarity[{i}][{j}]", f"must be in [0, 1], got {v!r}"))
    for i in range(m):
        if abs(matrix[i][i] - 1.0) > PAIRWISE_TOLERANCE:
            violations.append(Violation(f"pairwise_similarity[{i}][{i}]", "diagonal entry must be 1"))
        for j in range(i + 1, m):
            if abs(matrix[i][j] - matrix[j][i]) > PAIRWISE_TOLERANCE:
                violations.append(
                    Violation(f"pairwise_similarity[{i}][{j}]", "asymmetric pairwise_similarity")
                )
    return violations


def validate_record(record: GenerationRecord) -> list[Violation]:
    """Check every record invariant; returns the (possibly empty) violation list."""
    violations = []
    if not record.candidates:
        violations.append(Violation("candidates", "must be non-empty"))
    if not record.references:
        violations.append(Violation("references", "must be non-empty"))
    for i, cand in enumerate(record.candidates):
        violations.extend(_validate_candidate(i, cand))
    if record.pairwise_similarity is not None and record.candidates:
        violations.extend(_validate_matrix(record.pairwise_similarity, record.m))
    return violations


def _iter_lines(stream: Any) -> Iterator[tuple[int, str]]:
    if hasattr(stream, "read"):
        content = stream.read()
    else:
        content = stream
    if isinstance(content, bytes):
        content = content.decode("utf-8")
    if not isinstance(content, str):
        raise DatasetError(f"unsupported stream type {type(content).__name__}")
    for line_no, raw in enumerate(content.splitlines(), start=1):
        if raw.strip():
            yield line_no, raw


def _scan(stream: Any, *, strict: bool) -> DatasetReport | list[GenerationRecord]:
    records: list[GenerationRecord] = []
    violations: list[Violation] = []
    first_line_of: dict[str, int] = {}
    for line_no, raw in _iter_lines(stream):
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            err = DatasetError(f"invalid JSON ({exc.msg})", line=line_no)
            if strict:
                raise err from exc
            violations.append(Violation("", f"invalid JSON ({exc.msg})", line=line_no))
            continue
        try:
            record = record_from_json(obj, line=line_no)
        except DatasetError as exc:
            if strict:
                raise
            violations.append(Violation(exc.path or "", str(exc), line=line_no))
            continue
        record_violations = validate_record(record)
        if record_violations:
            if strict:
                first = record_violations[0]
                raise DatasetError(f"record {record.id!r}: {first.message}", line=line_no, path=first.path)
            violations.extend(
                Violation(v.path, f"record {record.id!r}: {v.message}", line=line_no)
                for v in record_violations
            )
        if record.id in first_line_of:
            message = f"duplicate id {record.id!r} (first seen at line {first_line_of[record.id]})"
            if strict:
                raise DatasetError(message, line=line_no, path="id")
            violations.append(Violation("id", message, line=line_no))
        else:
            first_line_of[record.id] = line_no
        records.append(record)
    if not records:
        if strict:
            raise DatasetError("no records")
        violations.append(Violation("", "no records"))
    if strict:
        return records
    return DatasetReport(n_records=len(records), violations=violations)


def parse_records(stream: Any) -> list[GenerationRecord]:
    """Parse a line-delimited dataset, raising on the first invalid record.

    Accepts a file object (text or binary) or raw str/bytes content. Every
    returned record passes validate_record; ids are unique in file order.
    """
    result = _scan(stream, strict=True)
    assert isinstance(result, list)
    return result


def scan_dataset(stream: Any) -> DatasetReport:
    """Lenient pass over a dataset, collecting all violations with line numbers."""
    result = _scan(stream, strict=False)
    assert isinstance(result, DatasetReport)
    return result


def load_records(path: Any) -> list[GenerationRecord]:
    with open(path, "rb") as fh:
        return parse_records(fh)


def _candidate_to_json(cand: Candidate) -> dict[str, Any]:
    payload: dict[str, Any] = {}
    if cand.text is not None:
        payload["text"] = cand.text
    if cand.tokens is not None:
        payload["tokens"] = cand.tokens
    if cand.token_entropies is not None:
        payload["token_entropies"] = cand.token_entropies
    if cand.token_distributions is not None:
        payload["token_distributions"] = cand.token_distributions
    if cand.ref_similarity is not None:
        payload["ref_similarity"] = cand.ref_similarity
    payload.update(cand.extra)
    return payload


def serialize_record(record: GenerationRecord) -> str:
    """Render one record as a JSON line (inverse of parsing, unknown fields kept)."""
    payload: dict[str, Any] = {"id": record.id, "prompt": record.prompt, "references": record.references}
    if record.decoding is not None:
        payload["decoding"] = record.decoding
    payload["candidates"] = [_candidate_to_json(c) for c in record.candidates]
    if record.pairwise_similarity is not None:
        payload["pairwise_similarity"] = record.pairwise_similarity
    payload.update(record.extra)
    return json.dumps(payload, ensure_ascii=False, separators=(",", ":"))


def dataset_to_jsonl(records: Iterable[GenerationRecord]) -> str:
    return "".join(serialize_record(r) + "\n" for r in records)


def _bag_of_words(text: str) -> Counter:
    # Lowercase, non-alphanumeric -> space, whitespace-tokenize into a multiset.
    normalized = "".join(ch if ch.isalnum() else " " for ch in text.lower())
    return Counter(normalized.split())


def builtin_similarity(a: str, b: str) -> float:
    """Deterministic bag-of-words F1 between two texts, in [0, 1].

    Multiset token overlap after lowercasing and stripping punctuation:
    2*|A & B| / (|A| + |B|). Two empty texts count as identical (1.0).
    """
    bag_a = _bag_of_words(a)
    bag_b = _bag_of_words(b)
    total = sum(bag_a.values()) + sum(bag_b.values())
    if total == 0:
        return 1.0
    overlap = sum((bag_a & bag_b).values())
    return 2.0 * overlap / total


def _candidate_text(record: GenerationRecord, index: int) -> str:
    text = record.candidates[index].text
    if text is None:
        raise DatasetError(
            "cannot compute builtin similarity without candidate text",
            path=f"candidates[{index}].text",
        )
    return text


def resolve_similarities(record: GenerationRecord, cfg: SimilarityConfig) -> GenerationRecord:
    """Return a copy of the record with ref_similarity and pairwise_similarity populated.

    Provided scores are kept unless cfg.source is builtin_only; missing ones are
    computed with builtin_similarity (ref_similarity takes the max over
    references). With source=provided_only any missing score is an error.
    """
    recompute = cfg.source == "builtin_only"
    m = record.m
    candidates = []
    for i, cand in enumerate(record.candidates):
        if cand.ref_similarity is not None and not recompute:
            candidates.append(cand)
            continue
        if cfg.source == "provided_only":
            raise DatasetError("ref_similarity missing", path=f"candidates[{i}].ref_similarity")
        text = _candidate_text(record, i)
        sim = max(builtin_similarity(text, ref) for ref in record.references)
        candidates.append(replace(cand, ref_similarity=sim))
    if record.pairwise_similarity is not None and not recompute:
        matrix = record.pairwise_similarity
    else:
        if cfg.source == "provided_only":
            raise DatasetError("pairwise_similarity missing", path="pairwise_similarity")
        texts = [_candidate_text(record, i) for i in range(m)]
        matrix = [[1.0] * m for _ in range(m)]
        for i in range(m):
            for j in range(i + 1, m):
                matrix[i][j] = matrix[j][i] = builtin_similarity(texts[i], texts[j])
    return replace(record, candidates=candidates, pairwise_similarity=matrix)
