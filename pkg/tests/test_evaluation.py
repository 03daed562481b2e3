import io
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latent_infection.cascade import observe, simulate_si
from latent_infection.classifiers import Prediction
from latent_infection.errors import CoverageError, UndefinedCorrelationError
from latent_infection.evaluation import (
    RESULTS_HEADER,
    SUMMARY_HEADER,
    EvalReport,
    Protocol,
    RunData,
    Summary,
    characteristic_rank_correlation,
    collect_runs,
    evaluate_runs,
    feature_predictiveness,
    rank_correlation,
    run_experiment,
    score,
    score_arrays,
    sweep_observed_fraction,
    write_results_csv,
    write_summary_csv,
)
from latent_infection.features import FeatureMatrix
from latent_infection.graph import generate

SMALL = Protocol(n_train_runs=4, n_test_runs=3, classifiers=("gnb", "c45", "random(0.1)"))


@pytest.fixture(scope="module")
def g300():
    return generate("ws:300,4,0.1", 1)


def test_score_examples():
    truth = np.array([1, 1, 0, 0], dtype=bool)
    perfect = score_arrays(truth, truth)
    assert (perfect.precision, perfect.recall, perfect.f_measure) == (1.0, 1.0, 1.0)
    half = score_arrays(np.array([1, 1, 1, 1]), np.array([1, 1, 0, 0]))
    assert (half.precision, half.recall) == (0.5, 1.0)
    assert half.f_measure == pytest.approx(2 / 3)
    none = score_arrays(np.zeros(4), truth)
    assert (none.precision, none.recall, none.f_measure) == (0.0, 0.0, 0.0)


def test_score_coverage_and_permutation():
    g = generate("ba:100,2", 1)
    c = simulate_si(g, 0.5, 0.2, 1)
    obs = observe(c, g, 0.2, 1)
    hidden = sorted(obs.hidden)
    preds = [Prediction(v, int(v % 3 == 0), 0.0) for v in hidden]
    a = score(preds, c, obs.hidden)
    b = score(list(reversed(preds)), c, obs.hidden)
    assert a == b
    assert a.total == len(hidden)
    with pytest.raises(CoverageError):
        score(preds[1:], c, obs.hidden)
    with pytest.raises(CoverageError):
        score(preds + [Prediction(next(iter(obs.observed_infected)), 1, 1.0)], c, obs.hidden)


def test_summary_mean_se_and_pooled():
    reps = [EvalReport(1, 1, 0, 2), EvalReport(3, 0, 1, 0), EvalReport(0, 0, 2, 5)]
    s = Summary.of(reps)
    precisions = [0.5, 1.0, 0.0]
    assert s.precision_mean == pytest.approx(0.5)
    assert s.precision_se == pytest.approx(np.std(precisions, ddof=1) / math.sqrt(3))
    assert (s.pooled.true_positive, s.pooled.false_positive, s.pooled.false_negative) == (4, 1, 3)
    assert s.pooled.precision == pytest.approx(0.8)


def test_run_experiment_shape_and_determinism(g300):
    a = run_experiment(g300, SMALL, 5, "ws")
    assert len(a.reports) == 3 * 3
    for r in a.reports:
        assert r.total == r.true_positive + r.false_positive + r.false_negative + r.true_negative
        assert 0 <= r.f_measure <= 1
    b = run_experiment(g300, SMALL, 5, "ws")
    assert a.reports == b.reports
    assert run_experiment(g300, SMALL, 6, "ws").reports != a.reports


def test_one_test_run_on_tiny_graph():
    g = generate("ws:20,4,0.1", 2)
    p = replace(SMALL, n_test_runs=1, observed_fraction=0.3, stop_fraction=0.3)
    res = run_experiment(g, p, 1)
    assert sorted(r.classifier for r in res.reports) == sorted(SMALL.classifiers)


def test_every_report_counts_hidden_nodes(g300):
    train, tests = collect_runs(g300, SMALL, 3)
    res = evaluate_runs(train, tests, ("gnb",), [("P",)], 3)
    for rep, rd in zip(res.reports, tests):
        assert rep.total == len(rd.features)


def test_adding_classifiers_leaves_cascades_alone(g300):
    a = collect_runs(g300, SMALL, 9)
    b = collect_runs(g300, replace(SMALL, classifiers=("nbk",)), 9)
    np.testing.assert_array_equal(a[0].X, b[0].X)
    assert all(np.array_equal(x.features.X, y.features.X) for x, y in zip(a[1], b[1]))


def test_random_baseline_precision_tracks_infected_share():
    g = generate("ba:400,2", 3)
    p = Protocol(n_train_runs=1, n_test_runs=70, classifiers=("random(0.1)",))
    res = run_experiment(g, p, 21)
    pooled = Summary.of(res.reports).pooled
    share = float(np.mean([r.infected_fraction for r in res.reports]))
    assert abs(pooled.precision - share) <= 0.05


def test_sweep_row_counts(g300):
    fr = (0.05, 0.1, 0.15, 0.2, 0.25)
    out = sweep_observed_fraction(g300, fr, SMALL, 2)
    assert len(out) == 5
    for f, res in zip(fr, out):
        summ = res.summaries()
        assert len(summ) == len(SMALL.classifiers)
        assert {s.observed_fraction for s in summ} == {f}
    with pytest.raises(ValueError):
        sweep_observed_fraction(g300, (0.0, 0.1), SMALL, 2)


def test_single_fraction_sweep_is_run_experiment(g300):
    (one,) = sweep_observed_fraction(g300, (0.15,), SMALL, 4)
    assert one.reports == run_experiment(g300, SMALL, 4).reports


def test_feature_predictiveness_cells(g300):
    cells = feature_predictiveness(g300, SMALL, 1)
    assert len(cells) == 12
    assert all(0 <= v <= 1 for v in cells.values())


def test_constant_feature_equals_prior_only():
    rng = np.random.default_rng(0)
    n = 300

    def matrix(k, y):
        X = np.column_stack([np.full(len(y), 0.3), rng.random(len(y))])
        return FeatureMatrix(np.arange(len(y)), np.arange(len(y)), X, y, ("D", "R"))

    train = matrix(0, (rng.random(n) < 0.4).astype(np.int64))
    tests = [RunData(k, matrix(k, (rng.random(50) < 0.4).astype(np.int64)), 0.4, False) for k in range(5)]
    res = evaluate_runs(train, tests, ("gnb", "c45"), [("D",)], 0)
    prior_label = int(train.y.mean() > 0.5)
    for rep, rd in zip(res.reports, tests * 2):
        expect = score_arrays(np.full(len(rd.features), prior_label), rd.features.y)
        assert rep.f_measure == expect.f_measure


def test_csv_headers_and_rows(g300):
    res = run_experiment(g300, SMALL, 5, "ws")
    buf = io.StringIO()
    write_results_csv(res.reports, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == RESULTS_HEADER
    assert len(lines) == 1 + len(res.reports)
    assert all(len(l.split(",")) == 8 for l in lines)
    buf = io.StringIO()
    write_summary_csv(res.summaries(), buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == SUMMARY_HEADER and len(lines) == 4
    assert all(len(l.split(",")) == len(SUMMARY_HEADER.split(",")) for l in lines)


def test_rank_correlation_examples():
    assert rank_correlation([1, 2, 3, 4], [10, 20, 30, 40]) == 1.0
    assert rank_correlation([1, 2, 3, 4], [4, 3, 2, 1]) == -1.0
    # ties take average ranks: ranks (1.5, 1.5, 3) vs (1, 2, 3)
    assert rank_correlation([5, 5, 9], [1, 2, 3]) == pytest.approx(math.sqrt(3) / 2)
    with pytest.raises(UndefinedCorrelationError):
        rank_correlation([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValueError):
        rank_correlation([1, 2], [1])


def test_characteristic_rank_correlation_mean():
    out = characteristic_rank_correlation([1, 2, 3], {"a": [1, 2, 3], "b": [3, 2, 1]})
    assert out == {"a": 1.0, "b": -1.0, "mean": 0.0}


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(-1000, 1000), st.integers(-1000, 1000)), min_size=3, max_size=20))
def test_rank_correlation_bounds_and_monotone_invariance(pairs):
    x = [a for a, _ in pairs]
    y = [b for _, b in pairs]
    if len(set(x)) < 2 or len(set(y)) < 2:
        with pytest.raises(UndefinedCorrelationError):
            rank_correlation(x, y)
        return
    r = rank_correlation(x, y)
    assert -1.0 <= r <= 1.0
    assert rank_correlation([v**3 + 7 for v in x], y) == pytest.approx(r, abs=1e-12)
    assert rank_correlation(y, x) == pytest.approx(r, abs=1e-12)


def test_divergent_alpha_rejected_before_simulation():
    from latent_infection.errors import DivergenceError

    g = generate("er:11,1.0", 0)
    with pytest.raises(DivergenceError):
        collect_runs(g, replace(SMALL, alpha=0.2), 0)
