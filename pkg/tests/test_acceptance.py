"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS / FAIL / SKIP line that is printed in the pytest
terminal summary (run with ``-s`` to also see them inline). Thresholds are
fixed; seeds are fixed and were not tuned per check.
"""

import math
import os
import time
from pathlib import Path

import networkx as nx
import numpy as np
import pytest

from latent_infection.cascade import observe, simulate_si
from latent_infection.classifiers import best_split, fit, predict_arrays
from latent_infection.cli import main as cli_main
from latent_infection.config import DATA_ENV, load_network
from latent_infection.evaluation import (
    DEFAULT_FRACTIONS,
    Protocol,
    collect_runs,
    evaluate_runs,
    rank_correlation,
)
from latent_infection.features import FEATURE_NAMES, FeatureMatrix
from latent_infection.graph import Graph, generate, largest_component, network_stats
from latent_infection.ib import neumann_series, path_weight_matrix, spectral_radius
from latent_infection.reduction import reduce_property1

from conftest import mixed_graphs, record_acceptance
from test_classifiers import brute_force_split, conflict_free, random_dataset
from test_reduction import property2_violations

pytestmark = pytest.mark.slow

# Published topology statistics: name -> (file name hints, n, m, c, sigma, s, d)
REFERENCE_TOPOLOGIES = {
    "Yeast": (("yeast",), 1870, 2277, 0.0672, 3.1374, 6.5044, 19),
    "GrQc": (("grqc",), 5242, 28980, 0.5296, 7.9179, 3.8317, 17),
    "HepTh": (("hepth",), 9877, 51971, 0.4714, 6.1864, 3.0213, 18),
    "Power": (("power",), 4941, 6594, 0.0801, 1.7913, 2.1898, 46),
    "Oregon": (("oregon",), 11174, 23409, 0.2964, 33.0948, 46.4017, 10),
}

# directional checks: graph seed and master seed are fixed up front
DIRECTIONAL_GRAPHS = ("ba:1000,2", "ws:1000,4,0.1")
DIRECTIONAL_GRAPH_SEED = 7
DIRECTIONAL_MASTER_SEED = 11

# characteristic-rank check: spans low to high degree skewness
RANK_GRAPHS = ("ws:1000,4,0.05", "ws:1000,6,0.2", "er:1000,0.006", "ba:1000,3", "ba:1000,1")
RANK_GRAPH_SEED = 3
RANK_MASTER_SEED = 17


def _find_dataset(hints):
    base = os.environ.get(DATA_ENV)
    if not base or not Path(base).is_dir():
        return None
    for p in sorted(Path(base).iterdir()):
        if p.is_file() and any(h in p.name.lower() for h in hints):
            return p
    return None


def test_reference_topology_statistics():
    label = "topology statistics vs reference table"
    rows, failures = [], []
    for name, (hints, n, m, c, sigma, s, d) in REFERENCE_TOPOLOGIES.items():
        path = _find_dataset(hints)
        if path is None:
            continue
        t0 = time.perf_counter()
        st = network_stats(load_network(str(path)))
        dt = time.perf_counter() - t0
        ok = (
            st.n == n
            and st.m == m
            and abs(st.c - c) <= 1e-3
            and abs(st.sigma - sigma) <= 1e-3
            and abs(st.s - s) <= 1e-3
            and st.d == d
            and dt < 300
        )
        rows.append(f"{name} {'ok' if ok else 'mismatch'} ({dt:.0f}s)")
        if not ok:
            failures.append(f"{name}: got {st}")
    if not rows:
        record_acceptance(label, "SKIP", f"no dataset files found (set {DATA_ENV} to a directory holding them)")
        pytest.skip("no dataset files provided")
    record_acceptance(label, "PASS" if not failures else "FAIL", "; ".join(rows))
    assert not failures, failures


@pytest.fixture(scope="module")
def ib_graphs():
    return mixed_graphs(200, seed=2024, n_max=200)


def test_betweenness_normalization(ib_graphs):
    label = "IB normalization over 200 graphs x 50 pairs"
    t0 = time.perf_counter()
    worst = 0.0
    rng = np.random.default_rng(1)
    for g in ib_graphs:
        pwm = path_weight_matrix(g, 0.01)
        N = pwm.n_matrix
        M = pwm.m_matrix()
        lcc = largest_component(g)
        for _ in range(50):
            i, j = (int(v) for v in rng.choice(lcc, 2, replace=False))
            total = float(np.sum(N[i, :] * N[:, j]) / M[i, j])
            worst = max(worst, abs(total - 1.0))
    dt = time.perf_counter() - t0
    ok = worst < 1e-9 and dt < 60
    record_acceptance(label, "PASS" if ok else "FAIL", f"max |sum - 1| = {worst:.2e}, {dt:.1f}s")
    assert ok


def test_matrix_identity_and_series_agreement(ib_graphs):
    label = "walk-matrix residual and dense vs series"
    worst_res = worst_diff = 0.0
    for g in ib_graphs:
        rho = spectral_radius(g)
        pwm = path_weight_matrix(g, 0.01, rho)
        worst_res = max(worst_res, pwm.residual(g))
        worst_diff = max(worst_diff, float(np.abs(pwm.n_matrix - neumann_series(g, 0.01, rho=rho)).max()))
    ok = worst_res < 1e-8 and worst_diff < 1e-8
    record_acceptance(label, "PASS" if ok else "FAIL", f"residual {worst_res:.2e}, dense-series {worst_diff:.2e}")
    assert ok


def test_pruning_soundness_and_separator_oracle():
    label = "pruned nodes never infected; separator oracle"
    rng = np.random.default_rng(99)
    graphs = mixed_graphs(100, seed=77, n_max=300, n_min=20)
    bad = triples = 0
    for t in range(1000):
        g = graphs[t % len(graphs)]
        lcc = len(largest_component(g))
        stop = min(float(rng.uniform(0.05, 0.5)), lcc / g.n)
        c = simulate_si(g, 0.5, stop, int(rng.integers(2**63)))
        obs = observe(c, g, float(rng.uniform(0.02, 0.4)), int(rng.integers(2**63)))
        red = reduce_property1(g, obs)
        bad += len(red.deterministic_susceptible & c.infected)
        triples += 1

    small_checked = violations = 0
    while small_checked < 150:
        n = int(rng.integers(4, 13))
        G = nx.gnp_random_graph(n, float(rng.uniform(0.25, 0.6)), seed=int(rng.integers(2**31)))
        g = Graph(n, list(G.edges()))
        lcc = len(largest_component(g))
        if lcc < 3:
            continue
        c = simulate_si(g, 0.5, float(rng.uniform(0.2, 1.0)) * lcc / n, int(rng.integers(2**63)))
        obs = observe(c, g, float(rng.uniform(0.2, 0.7)), int(rng.integers(2**63)))
        if len(obs.observed_infected) < 2:
            continue
        violations += property2_violations(g, c.infected, obs)
        small_checked += 1
    ok = bad == 0 and violations == 0
    record_acceptance(
        label,
        "PASS" if ok else "FAIL",
        f"{triples} triples, {bad} infected pruned; {small_checked} small graphs, {violations} separator violations",
    )
    assert ok


def _fm(X, y, names=None):
    names = tuple(names or [f"x{k}" for k in range(X.shape[1])])
    ids = np.arange(len(X))
    return FeatureMatrix(ids, ids, np.asarray(X, float), np.asarray(y, np.int64), names)


def test_classifier_oracles():
    label = "classifier oracles"
    rng = np.random.default_rng(5)
    X, y = random_dataset(rng, n=500, d=6)
    Q = rng.random((10000, 6)) * 1.4 - 0.2
    sum_err = 0.0
    for kind in ("gnb", "nbk"):
        lp = fit(kind, _fm(X, y)).predict_log_proba(Q)
        sum_err = max(sum_err, float(np.abs(np.exp(lp).sum(axis=1) - 1.0).max()))

    perfect = 0
    for _ in range(100):
        Xc, yc = conflict_free(rng, int(rng.integers(20, 300)), int(rng.integers(1, 7)), int(rng.integers(2, 10)))
        _, labels = predict_arrays(fit("c45-unpruned", _fm(Xc, yc)), Xc)
        perfect += int(np.array_equal(labels, yc))

    split_ok = split_total = 0
    for _ in range(500):
        n = int(rng.integers(4, 21))
        Xs = rng.integers(0, int(rng.integers(2, 15)), size=(n, 2)).astype(float)
        ys = rng.integers(0, 2, size=n)
        want = brute_force_split(Xs, ys, 2)
        got = best_split(Xs, ys, 2)
        split_total += 1
        if want is None:
            split_ok += got is None
        else:
            split_ok += got is not None and got[0] == want[0] and abs(got[1] - want[1]) <= 1e-12
    ok = sum_err < 1e-12 and perfect == 100 and split_ok == split_total
    record_acceptance(
        label,
        "PASS" if ok else "FAIL",
        f"posterior sum err {sum_err:.1e}; unpruned fit {perfect}/100; split match {split_ok}/{split_total}",
    )
    assert ok


@pytest.fixture(scope="module")
def directional():
    """Per graph: mean F by (classifier, feature tag) at each observed fraction."""
    t0 = time.perf_counter()
    out = {}
    singles = [(f,) for f in FEATURE_NAMES]
    for spec in DIRECTIONAL_GRAPHS:
        g = generate(spec, DIRECTIONAL_GRAPH_SEED)
        per_fraction = {}
        for frac in DEFAULT_FRACTIONS:
            p = Protocol(observed_fraction=frac)
            train, tests = collect_runs(g, p, DIRECTIONAL_MASTER_SEED)
            kinds = ["c45", "random(0.1)"] if frac == 0.15 else ["c45"]
            res = evaluate_runs(train, tests, kinds, [FEATURE_NAMES], DIRECTIONAL_MASTER_SEED)
            if frac == 0.15:
                res.reports += evaluate_runs(train, tests, ["gnb"], singles, DIRECTIONAL_MASTER_SEED).reports
            keys = {(r.classifier, r.features) for r in res.reports}
            per_fraction[frac] = {key: res.mean_f(*key) for key in keys}
        out[spec] = per_fraction
    return out, time.perf_counter() - t0


def test_directional_claims(directional):
    data, elapsed = directional
    all_tag = "+".join(FEATURE_NAMES)
    lines, ok = [], True
    for spec, per_fraction in data.items():
        mid = per_fraction[0.15]
        gap = mid[("c45", all_tag)] - mid[("random(0.1)", all_tag)]
        single = {f: mid[("gnb", f)] for f in FEATURE_NAMES}
        top = max(single.values())
        trend = rank_correlation(DEFAULT_FRACTIONS, [per_fraction[f][("c45", all_tag)] for f in DEFAULT_FRACTIONS])
        a, b, c = gap >= 0.1, single["P"] >= top, trend > 0
        ok &= a and b and c
        lines.append(
            f"{spec}: c45-random {gap:+.3f} [{'ok' if a else 'no'}], "
            f"P single-feature F {single['P']:.3f} vs best {top:.3f} [{'ok' if b else 'no'}], "
            f"fraction trend rho {trend:+.2f} [{'ok' if c else 'no'}]"
        )
    ok &= elapsed < 1800
    record_acceptance("directional claims", "PASS" if ok else "FAIL", "; ".join(lines) + f"; {elapsed:.0f}s")
    assert ok


def test_characteristic_rank_signs():
    label = "rank correlation signs vs network characteristics"
    kinds = ("gnb", "nbk", "c45")
    chars = {"c": [], "sigma": [], "s": []}
    f = {k: [] for k in kinds}
    for spec in RANK_GRAPHS:
        g = generate(spec, RANK_GRAPH_SEED)
        st = network_stats(g)
        chars["c"].append(st.c)
        chars["sigma"].append(st.sigma)
        chars["s"].append(st.s)
        p = Protocol(observed_fraction=0.15)
        train, tests = collect_runs(g, p, RANK_MASTER_SEED)
        res = evaluate_runs(train, tests, kinds, [FEATURE_NAMES], RANK_MASTER_SEED)
        for k in kinds:
            f[k].append(res.mean_f(k))
    # two columns: naive Bayes alone, kernel NB and tree averaged
    columns = {"gnb": f["gnb"], "nbk+c45": [(a + b) / 2 for a, b in zip(f["nbk"], f["c45"])]}
    want = {"c": 1, "sigma": -1, "s": -1}
    parts, ok = [], True
    for ch, sign in want.items():
        for col, fs in columns.items():
            r = rank_correlation(chars[ch], fs)
            good = math.copysign(1, r) == sign and r != 0
            ok &= good
            parts.append(f"{ch}/{col} {r:+.2f}{'' if good else ' (wrong sign)'}")
    record_acceptance(label, "PASS" if ok else "FAIL", ", ".join(parts))
    assert ok


def test_run_is_deterministic_across_invocations_and_workers(tmp_path, capsys):
    label = "run determinism across invocations and pool sizes"
    args = [
        "run", "ba:300,2", "ws:300,4,0.1", "--graph-seed", "5", "--seed", "23",
        "--observed", "0.1,0.2", "--train-runs", "4", "--test-runs", "6",
    ]
    outs = []
    for name, jobs in (("a", "1"), ("b", "1"), ("c", "8")):
        code = cli_main(args + ["--out", str(tmp_path / name), "--jobs", jobs])
        assert code == 0
        outs.append(tmp_path / name)
    capsys.readouterr()
    files = sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*.csv"))
    mismatched = [str(f) for f in files for o in outs[1:] if (o / f).read_bytes() != (outs[0] / f).read_bytes()]
    ok = bool(files) and not mismatched
    record_acceptance(label, "PASS" if ok else "FAIL", f"{len(files)} CSV files compared over 3 runs, {len(mismatched)} differ")
    assert ok
