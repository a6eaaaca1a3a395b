"""Acceptance suite.

Each test exercises one advertised guarantee end to end at its stated
tolerance and prints a single pass/fail line (run with `pytest -s` to see
them). Everything is seeded, so outcomes are reproducible bit for bit.
"""

import math
import time

import numpy as np
import pytest
from scipy.stats import entropy as scipy_entropy

from entrocal import (
    CalibrationConfig,
    Candidate,
    RunSpec,
    ScoreConfig,
    SynthConfig,
    UniformScores,
    conformal_quantile,
    dataset_to_jsonl,
    filter_assessable,
    generate,
    prediction_set,
    run_sweep,
    run_trial,
    seed_range,
    split_cal_test,
    theoretical_coverage_bounds,
    token_entropy_score,
)
from entrocal.calibration import build_score_multiset
from entrocal.cli import main
from entrocal.evaluation import prepare_scored
from entrocal.scoring import entropy_at_position
from entrocal.sweep import DEFAULT_ALPHAS

N_RECORDS = 2000
N_SEEDS = 100
DATASET_SEED = 20260808


def _report(name: str, ok: bool, detail: str = ""):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}"
    if detail:
        line += f": {detail}"
    print(line)
    assert ok, line


def _summary_stats(summary):
    """alpha -> (coverage_mean, coverage_stderr, emr_mean) from one-ratio sweeps."""
    return {
        row.alpha: (row.coverage_mean, row.coverage_std / math.sqrt(row.n_seeds), row.emr_mean)
        for row in summary
    }


@pytest.fixture(scope="module")
def exact_sweep():
    records = generate(
        SynthConfig(mode="exact", n_records=N_RECORDS, m_candidates=10, seed=DATASET_SEED)
    )
    spec = RunSpec(
        score=ScoreConfig(),
        tau=0.9,
        correctness_threshold=0.7,
        score_variant="correct_only",
        alphas=DEFAULT_ALPHAS,
        split_ratios=(0.5,),
        seeds=seed_range(0, N_SEEDS),
    )
    start = time.perf_counter()
    trials, summary = run_sweep(records, spec)
    elapsed = time.perf_counter() - start
    return trials, summary, elapsed


def test_coverage_sandwich(exact_sweep):
    trials, summary, elapsed = exact_sweep
    n_cals = {t.n_cal for t in trials}
    assert n_cals == {N_RECORDS // 2}
    n_cal = n_cals.pop()
    stats = _summary_stats(summary)
    worst = ""
    ok = True
    for alpha in DEFAULT_ALPHAS:
        mean_cov, stderr, _ = stats[alpha]
        lower, upper = theoretical_coverage_bounds(n_cal, alpha)
        lo, hi = lower - 3 * stderr, upper + 3 * stderr
        if not lo <= mean_cov <= hi:
            ok = False
            worst += f" alpha={alpha}: {mean_cov:.4f} not in [{lo:.4f}, {hi:.4f}]"
    ok = ok and elapsed < 120.0
    _report(
        "coverage-sandwich",
        ok,
        worst or f"all 9 alphas within bounds, {N_SEEDS} seeds, n_cal={n_cal}, {elapsed:.1f}s",
    )


def test_emr_risk_control(exact_sweep):
    _, summary, _ = exact_sweep
    stats = _summary_stats(summary)
    gaps = {alpha: stats[alpha][2] - alpha for alpha in DEFAULT_ALPHAS}
    ok = all(gap <= 0.02 for gap in gaps.values())
    worst_alpha = max(gaps, key=gaps.get)
    _report(
        "emr-risk-control",
        ok,
        f"max mean-EMR excess over alpha is {gaps[worst_alpha]:+.4f} at alpha={worst_alpha}",
    )


def test_prediction_set_size_pattern():
    # Correct and incorrect planted scores identically distributed, every
    # candidate entering the calibration multiset: APSS tracks M * (1 - alpha).
    records = generate(
        SynthConfig(
            mode="exact",
            n_records=N_RECORDS,
            m_candidates=10,
            correct_score_distribution=UniformScores(0.0, 1.0),
            incorrect_score_distribution=UniformScores(0.0, 1.0),
            seed=DATASET_SEED + 1,
        )
    )
    spec = RunSpec(score_variant="all_candidates", seeds=seed_range(0, 30))
    _, summary = run_sweep(records, spec)
    deviations = {row.alpha: row.apss_mean - 10.0 * (1.0 - row.alpha) for row in summary}
    ok = all(abs(d) <= 0.2 for d in deviations.values())
    worst_alpha = max(deviations, key=lambda a: abs(deviations[a]))
    _report(
        "prediction-set-size-pattern",
        ok,
        f"max |APSS - 10(1-alpha)| is {abs(deviations[worst_alpha]):.4f} at alpha={worst_alpha}",
    )


def test_split_ratio_ablation_stability():
    records = generate(
        SynthConfig(mode="exact", n_records=N_RECORDS, m_candidates=10, seed=DATASET_SEED + 2)
    )
    spec = RunSpec(alphas=(0.1,), split_ratios=(0.3, 0.5, 0.7), seeds=seed_range(0, N_SEEDS))
    _, summary = run_sweep(records, spec)
    means = {row.split_ratio: row.coverage_mean for row in summary}
    spread = max(means.values()) - min(means.values())
    ok = all(m >= 0.89 for m in means.values()) and spread <= 0.02
    detail = ", ".join(f"ratio {r}: {means[r]:.4f}" for r in sorted(means)) + f", spread {spread:.4f}"
    _report("split-ratio-ablation-stability", ok, detail)


def test_quantile_oracle_equivalence():
    rng = np.random.default_rng(97)
    infinite_branch = 0
    for case in range(1000):
        n = int(rng.integers(1, 201))
        # Coarse grid of values so duplicates are common.
        values = np.round(rng.normal(0.0, 1.0, n) * 4.0) / 4.0
        alpha = float(rng.uniform(0.005, 0.995))
        result = conformal_quantile(values, alpha)

        k = math.ceil((1.0 - alpha) * (n + 1))
        expected = math.inf if k > n else sorted(values.tolist())[k - 1]
        if math.isinf(expected):
            infinite_branch += 1
            assert math.isinf(result.q_hat), f"case {case}: expected inf, got {result.q_hat}"
        else:
            assert result.q_hat == expected, f"case {case}: {result.q_hat} != {expected}"
        assert result.q_level == k / n
    _report(
        "quantile-oracle-equivalence",
        True,
        f"1000 randomized multisets, {infinite_branch} hit the k>n branch",
    )


def test_entropy_correctness():
    for size in (2, 3, 7, 50):
        one_hot = [0.0] * size
        one_hot[size // 2] = 1.0
        assert abs(entropy_at_position(one_hot)) <= 1e-12
        assert abs(entropy_at_position([1.0 / size] * size) - math.log(size)) <= 1e-12

    rng = np.random.default_rng(101)
    worst = 0.0
    cfg = ScoreConfig(entropy_aggregation="sum")
    draws = 0
    while draws < 1000:
        length = int(rng.integers(1, 6))
        rows = [rng.dirichlet(np.ones(int(rng.integers(2, 40)))) for _ in range(length)]
        draws += length
        from_distributions = token_entropy_score(
            Candidate(token_distributions=[r.tolist() for r in rows]), cfg
        )
        independent = token_entropy_score(
            Candidate(token_entropies=[float(scipy_entropy(r)) for r in rows]), cfg
        )
        worst = max(worst, abs(from_distributions - independent))
    ok = worst <= 1e-9
    _report("entropy-correctness", ok, f"analytic cases exact, max simplex disagreement {worst:.2e}")


def _nestedness_check(records, cal_cfg_base):
    scored = prepare_scored(records, ScoreConfig())
    filtered = filter_assessable(scored, cal_cfg_base.tau)
    cal, test = split_cal_test(filtered, cal_cfg_base.split_ratio, cal_cfg_base.seed)
    multiset = build_score_multiset(cal, cal_cfg_base)
    sets_by_alpha = []
    for alpha in DEFAULT_ALPHAS:
        q_hat = conformal_quantile(multiset, alpha).q_hat
        sets_by_alpha.append([prediction_set(s, q_hat) for s in test])
    for i in range(len(DEFAULT_ALPHAS)):
        for j in range(i + 1, len(DEFAULT_ALPHAS)):
            for wide, narrow in zip(sets_by_alpha[i], sets_by_alpha[j]):
                assert set(narrow.member_indices) <= set(wide.member_indices)

    trials = [
        run_trial(
            records,
            ScoreConfig(),
            CalibrationConfig(
                alpha=alpha,
                tau=cal_cfg_base.tau,
                split_ratio=cal_cfg_base.split_ratio,
                seed=cal_cfg_base.seed,
                score_variant=cal_cfg_base.score_variant,
            ),
        )
        for alpha in DEFAULT_ALPHAS
    ]
    emrs = [t.emr for t in trials]
    sizes = [t.apss for t in trials]
    assert all(a <= b for a, b in zip(emrs, emrs[1:])), f"EMR not non-decreasing: {emrs}"
    assert all(a >= b for a, b in zip(sizes, sizes[1:])), f"APSS not non-increasing: {sizes}"


def test_monotonicity_and_nestedness():
    exact = generate(SynthConfig(mode="exact", n_records=300, m_candidates=8, seed=7))
    realistic = generate(
        SynthConfig(mode="realistic", n_records=300, m_candidates=8, correct_fraction=0.4, seed=8)
    )
    for records, variant in ((exact, "correct_only"), (realistic, "correct_only"), (exact, "all_candidates")):
        _nestedness_check(records, CalibrationConfig(alpha=0.5, seed=13, score_variant=variant))
    _report(
        "monotonicity-nestedness",
        True,
        "EMR non-decreasing, APSS non-increasing, sets nested over the alpha grid",
    )


def test_run_determinism(tmp_path):
    data = tmp_path / "data.jsonl"
    data.write_text(
        dataset_to_jsonl(generate(SynthConfig(mode="exact", n_records=200, m_candidates=10, seed=3))),
        encoding="utf-8",
    )
    outputs = []
    for name in ("first", "second"):
        out_dir = tmp_path / name
        argv = [
            "run", str(data), "--output-dir", str(out_dir),
            "--alphas", "0.1,0.5,0.9", "--seed-start", "0", "--seed-count", "10",
        ]
        assert main(argv) == 0
        outputs.append(
            {
                "trials": (out_dir / "trials.csv").read_bytes(),
                "summary": (out_dir / "summary.csv").read_bytes(),
                "manifest": (out_dir / "manifest.json").read_bytes(),
            }
        )
    ok = (
        outputs[0]["manifest"] == outputs[1]["manifest"]
        and outputs[0]["trials"] == outputs[1]["trials"]
        and outputs[0]["summary"] == outputs[1]["summary"]
    )
    _report("run-determinism", ok, "two runs with identical manifests, byte-identical outputs")
