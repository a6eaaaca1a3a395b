import json

from entrocal import Candidate, GenerationRecord
from entrocal.scoring import ScoredRecord


def make_record(
    record_id="r0",
    ref_sims=(1.0, 0.0),
    texts=None,
    pairwise=None,
    entropies=None,
):
    """Small valid record: one candidate per ref_sims entry."""
    m = len(ref_sims)
    candidates = []
    for i in range(m):
        candidates.append(
            Candidate(
                text=texts[i] if texts else f"answer {i}",
                token_entropies=[entropies[i]] if entropies else [0.1 * (i + 1)],
                ref_similarity=ref_sims[i],
            )
        )
    return GenerationRecord(
        id=record_id,
        prompt="a question",
        references=["a reference"],
        candidates=candidates,
        pairwise_similarity=pairwise,
    )


def make_scored(record_id="r0", scores=(1.0, 2.0), ref_sims=None):
    """ScoredRecord with explicit scores (ref_sims default to all correct)."""
    if ref_sims is None:
        ref_sims = tuple(1.0 for _ in scores)
    record = make_record(record_id=record_id, ref_sims=ref_sims)
    return ScoredRecord(record=record, scores=list(scores))


def record_line(record_id="r0", **overrides):
    """One valid JSON dataset line, with optional field overrides."""
    payload = {
        "id": record_id,
        "prompt": "what color is the cat",
        "references": ["the red cat"],
        "candidates": [
            {"text": "red cat", "token_entropies": [0.2, 0.1], "ref_similarity": 0.8},
            {"text": "a blue dog", "token_entropies": [1.5, 2.0], "ref_similarity": 0.0},
        ],
    }
    payload.update(overrides)
    return json.dumps(payload)
