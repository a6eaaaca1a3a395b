import math

import pytest

from entrocal import (
    CalibrationConfig,
    PipelineError,
    PredictionSet,
    ScoreConfig,
    aggregate,
    apss,
    emr,
    is_covered,
    run_trial,
)
from entrocal.evaluation import prepare_scored

from conftest import make_record, make_scored


def _set(record_id, indices):
    return PredictionSet(record_id=record_id, member_indices=tuple(indices), set_size=len(indices))


def test_is_covered_empty_set_is_false():
    scored = make_scored("r", ref_sims=(1.0, 1.0))
    assert not is_covered(scored, _set("r", ()), 0.7)


def test_is_covered_full_set_on_assessable_record():
    scored = make_scored("r", ref_sims=(0.0, 0.95))
    assert is_covered(scored, _set("r", (0, 1)), 0.7)


def test_is_covered_strict_threshold():
    scored = make_scored("r", ref_sims=(0.65, 0.69))
    assert not is_covered(scored, _set("r", (0, 1)), 0.7)
    assert is_covered(make_scored("r", ref_sims=(0.7,)), _set("r", (0,)), 0.7)


def test_emr_counting():
    covered = [make_scored(f"r{i}", ref_sims=(1.0, 0.0)) for i in range(4)]
    sets = [_set(f"r{i}", (0,)) for i in range(4)]
    assert emr(covered, sets, 0.7) == 0.0
    sets[0] = _set("r0", (1,))  # only the incorrect candidate admitted
    assert emr(covered, sets, 0.7) == 0.25
    empty_sets = [_set(f"r{i}", ()) for i in range(4)]
    assert emr(covered, empty_sets, 0.7) == 1.0


def test_emr_errors():
    with pytest.raises(ValueError, match="empty test set"):
        emr([], [], 0.7)
    scored = [make_scored("a")]
    with pytest.raises(ValueError, match="id mismatch"):
        emr(scored, [_set("b", (0,))], 0.7)
    with pytest.raises(ValueError, match="prediction sets"):
        emr(scored, [], 0.7)


def test_apss():
    assert apss([_set("a", range(9)), _set("b", range(9)), _set("c", range(9))]) == 9.0
    assert apss([_set("a", range(10)), _set("b", ())]) == 5.0
    with pytest.raises(ValueError, match="empty"):
        apss([])


def test_run_trial_all_correct_zero_emr():
    # Every candidate correct with a common score: the finite threshold admits all.
    records = [
        make_record(f"r{i}", ref_sims=(1.0, 1.0), entropies=(0.5, 0.5)) for i in range(20)
    ]
    trial = run_trial(records, ScoreConfig(), CalibrationConfig(alpha=0.5, tau=0.0, seed=1))
    assert trial.emr == 0.0
    assert trial.coverage == 1.0
    assert trial.apss == 2.0


def test_run_trial_infinite_threshold_zero_emr():
    records = [make_record(f"r{i}", ref_sims=(1.0, 1.0)) for i in range(4)]
    trial = run_trial(records, ScoreConfig(), CalibrationConfig(alpha=0.1, tau=0.0, seed=0))
    assert math.isinf(trial.q_hat)
    assert trial.q_level > 1.0
    assert trial.emr == 0.0
    assert trial.apss == 2.0


def test_run_trial_is_deterministic():
    records = [
        make_record(f"r{i}", ref_sims=(1.0, 0.0), entropies=(0.1 * i, 0.3 * i + 0.05))
        for i in range(30)
    ]
    first = run_trial(records, ScoreConfig(), CalibrationConfig(alpha=0.3, seed=11))
    second = run_trial(records, ScoreConfig(), CalibrationConfig(alpha=0.3, seed=11))
    assert first == second


def test_full_coverage_when_correct_candidate_scores_minimally():
    # Every correct candidate sits at the minimum of R, so any finite
    # threshold admits it and coverage is 1 at every alpha.
    records = [
        make_record(f"r{i}", ref_sims=(1.0, 0.0), entropies=(0.0, 0.5 + 0.01 * i))
        for i in range(40)
    ]
    for alpha in (0.1, 0.3, 0.5, 0.7, 0.9):
        trial = run_trial(records, ScoreConfig(), CalibrationConfig(alpha=alpha, seed=2))
        assert trial.coverage == 1.0


def test_run_trial_coverage_complement_exact():
    records = [
        make_record(f"r{i}", ref_sims=(1.0, 0.0), entropies=(0.07 * i, 0.2)) for i in range(40)
    ]
    trial = run_trial(records, ScoreConfig(), CalibrationConfig(alpha=0.25, seed=5))
    assert trial.coverage + trial.emr == 1.0


def test_run_trial_stage_labels():
    records = [make_record(f"r{i}", ref_sims=(0.5, 0.2)) for i in range(10)]
    with pytest.raises(PipelineError, match="^filter:") as excinfo:
        run_trial(records, ScoreConfig(), CalibrationConfig(alpha=0.1, tau=0.9, seed=0))
    assert excinfo.value.stage == "filter"


def test_prepare_scored_requires_uniform_m():
    records = [make_record("a", ref_sims=(1.0, 0.0)), make_record("b", ref_sims=(1.0, 0.0, 0.0))]
    with pytest.raises(PipelineError, match="uniform M"):
        prepare_scored(records, ScoreConfig())


def test_run_trial_consistency_on_text_only_records():
    # No token statistics and no provided similarity scores: the trial has to
    # resolve everything from candidate text via the builtin fallback.
    from entrocal import Candidate, GenerationRecord

    records = []
    for i in range(24):
        if i % 3 == 0:
            texts = ["blue whale", "blue whale", "blue whale", "red panda"]
        else:
            texts = [f"word{i}a", f"word{i}b unrelated", "blue whale", f"word{i}d else"]
        records.append(
            GenerationRecord(
                id=f"r{i}",
                prompt="which animal",
                references=["blue whale"],
                candidates=[Candidate(text=t) for t in texts],
            )
        )
    cfg = ScoreConfig(method="consistency", lambda_weight=0.5, equivalence_threshold=0.9)
    trial = run_trial(records, cfg, CalibrationConfig(alpha=0.3, tau=0.9, seed=2))
    assert trial.score_method == "consistency"
    assert trial.n_filtered_out == 0  # every record contains an exact reference match
    assert trial.coverage + trial.emr == 1.0
    assert 0.0 <= trial.apss <= 4.0
    assert trial == run_trial(records, cfg, CalibrationConfig(alpha=0.3, tau=0.9, seed=2))


def test_aggregate_single_trial():
    trial = run_trial(
        [make_record(f"r{i}", ref_sims=(1.0, 0.0)) for i in range(10)],
        ScoreConfig(),
        CalibrationConfig(alpha=0.5, seed=0),
    )
    rows = aggregate([trial])
    assert len(rows) == 1
    assert rows[0].n_seeds == 1
    assert rows[0].emr_mean == trial.emr
    assert rows[0].emr_std == 0.0


def test_aggregate_hand_example():
    records = [make_record(f"r{i}", ref_sims=(1.0, 0.0)) for i in range(10)]
    base = run_trial(records, ScoreConfig(), CalibrationConfig(alpha=0.5, seed=0))
    from dataclasses import replace

    trials = [
        replace(base, seed=0, coverage=0.9, emr=0.1),
        replace(base, seed=1, coverage=1.0, emr=0.0),
    ]
    rows = aggregate(trials)
    assert rows[0].coverage_mean == pytest.approx(0.95)
    assert rows[0].coverage_std == pytest.approx(0.070710678118654, abs=1e-12)


def test_aggregate_groups_by_alpha():
    records = [make_record(f"r{i}", ref_sims=(1.0, 0.0)) for i in range(10)]
    trials = [
        run_trial(records, ScoreConfig(), CalibrationConfig(alpha=a, seed=s))
        for a in (0.2, 0.8)
        for s in (0, 1)
    ]
    rows = aggregate(trials)
    assert [(r.alpha, r.n_seeds) for r in rows] == [(0.2, 2), (0.8, 2)]


def test_aggregate_errors():
    with pytest.raises(ValueError, match="no trials"):
        aggregate([])
    records = [make_record(f"r{i}", ref_sims=(1.0, 0.0)) for i in range(10)]
    entropy_trial = run_trial(records, ScoreConfig(), CalibrationConfig(alpha=0.5, seed=0))
    from dataclasses import replace

    mixed = [entropy_trial, replace(entropy_trial, score_method="consistency")]
    with pytest.raises(ValueError, match="mix score methods"):
        aggregate(mixed)
