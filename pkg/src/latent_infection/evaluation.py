"""Scoring and the Monte-Carlo experiment protocols.

One experiment cell pools the hidden-node features of ``n_train_runs``
independent cascades into a training set, fits every classifier on it,
and scores each classifier on ``n_test_runs`` further cascades. Every
cascade, observation and coin flip draws from its own seeded stream keyed
by ``(phase, run, stage)``, so cells are reproducible and independent of
which classifiers are evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence, TextIO

import numpy as np
from scipy.stats import rankdata

from latent_infection import rng as rngs
from latent_infection.cascade import Cascade, observe, simulate_si
from latent_infection.classifiers import Prediction, fit, predict_arrays
from latent_infection.errors import CoverageError, UndefinedCorrelationError
from latent_infection.features import FEATURE_NAMES, FeatureMatrix, build_features
from latent_infection.graph import Graph
from latent_infection.ib import check_alpha, spectral_radius
from latent_infection.reduction import reduce_property1

__all__ = [
    "Protocol",
    "EvalReport",
    "Summary",
    "ExperimentResult",
    "score",
    "score_arrays",
    "collect_runs",
    "evaluate_runs",
    "run_experiment",
    "sweep_observed_fraction",
    "feature_predictiveness",
    "rank_correlation",
    "characteristic_rank_correlation",
    "write_results_csv",
    "write_summary_csv",
    "RESULTS_HEADER",
    "SUMMARY_HEADER",
]

DEFAULT_CLASSIFIERS = ("gnb", "nbk", "c45", "random(0.1)")
DEFAULT_FRACTIONS = (0.05, 0.10, 0.15, 0.20, 0.25)


@dataclass(frozen=True)
class Protocol:
    lam: float = 0.5
    stop_fraction: float = 0.10
    observed_fraction: float = 0.15
    alpha: float = 0.01
    n_train_runs: int = 30
    n_test_runs: int = 70
    classifiers: tuple[str, ...] = DEFAULT_CLASSIFIERS
    features: tuple[str, ...] = FEATURE_NAMES
    centrality_graph: str = "original"

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if not 0 < self.stop_fraction <= 1:
            raise ValueError("stop_fraction must be in (0, 1]")
        if not 0 <= self.observed_fraction <= 1:
            raise ValueError("observed_fraction must be in [0, 1]")
        if self.n_train_runs < 1 or self.n_test_runs < 1:
            raise ValueError("need at least one training and one test run")
        unknown = set(self.features) - set(FEATURE_NAMES)
        if unknown:
            raise ValueError(f"unknown features {sorted(unknown)}")


@dataclass(frozen=True)
class EvalReport:
    true_positive: int
    false_positive: int
    false_negative: int
    true_negative: int
    network: str = ""
    classifier: str = ""
    features: str = ""
    observed_fraction: float = float("nan")
    infected_fraction: float = float("nan")
    run: int = -1

    @property
    def precision(self) -> float:
        d = self.true_positive + self.false_positive
        return self.true_positive / d if d else 0.0

    @property
    def recall(self) -> float:
        d = self.true_positive + self.false_negative
        return self.true_positive / d if d else 0.0

    @property
    def f_measure(self) -> float:
        p, r = self.precision, self.recall
        return 2.0 * p * r / (p + r) if p + r > 0 else 0.0

    @property
    def total(self) -> int:
        return self.true_positive + self.false_positive + self.false_negative + self.true_negative


def score_arrays(labels: np.ndarray, truth: np.ndarray, **context) -> EvalReport:
    labels = np.asarray(labels, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    return EvalReport(
        int((labels & truth).sum()),
        int((labels & ~truth).sum()),
        int((~labels & truth).sum()),
        int((~labels & ~truth).sum()),
        **context,
    )


def score(preds: Sequence[Prediction], truth: Cascade, hidden: Iterable[int], **context) -> EvalReport:
    """Confusion counts over the hidden nodes, infected being the positive class.

    ``Prediction.node`` must be a graph-internal node id here.
    """
    hidden = set(hidden)
    nodes = [p.node for p in preds]
    if len(nodes) != len(hidden) or set(nodes) != hidden:
        raise CoverageError(f"{len(nodes)} predictions do not cover the {len(hidden)} hidden nodes exactly")
    labels = np.array([p.label for p in preds], dtype=bool)
    actual = truth.infected_mask[np.asarray(nodes, dtype=np.int64)]
    return score_arrays(labels, actual, **context)


@dataclass(frozen=True)
class Summary:
    network: str
    classifier: str
    features: str
    observed_fraction: float
    runs: int
    precision_mean: float
    precision_se: float
    recall_mean: float
    recall_se: float
    f_mean: float
    f_se: float
    pooled: EvalReport

    @classmethod
    def of(cls, reports: Sequence[EvalReport]) -> "Summary":
        first = reports[0]
        pooled = EvalReport(
            sum(r.true_positive for r in reports),
            sum(r.false_positive for r in reports),
            sum(r.false_negative for r in reports),
            sum(r.true_negative for r in reports),
            first.network,
            first.classifier,
            first.features,
            first.observed_fraction,
            float(np.mean([r.infected_fraction for r in reports])),
            -1,
        )

        def mean_se(vals):
            a = np.asarray(vals, dtype=np.float64)
            se = float(a.std(ddof=1) / math.sqrt(len(a))) if len(a) > 1 else 0.0
            return float(a.mean()), se

        p = mean_se([r.precision for r in reports])
        r_ = mean_se([r.recall for r in reports])
        f = mean_se([r.f_measure for r in reports])
        return cls(first.network, first.classifier, first.features, first.observed_fraction, len(reports), *p, *r_, *f, pooled)


@dataclass
class ExperimentResult:
    reports: list[EvalReport] = field(default_factory=list)

    def summaries(self) -> list[Summary]:
        groups: dict[tuple, list[EvalReport]] = {}
        for r in self.reports:
            groups.setdefault((r.network, r.classifier, r.features, r.observed_fraction), []).append(r)
        return [Summary.of(v) for v in groups.values()]

    def mean_f(self, classifier: str, features: str | None = None) -> float:
        vals = [
            r.f_measure
            for r in self.reports
            if r.classifier == classifier and (features is None or r.features == features)
        ]
        if not vals:
            raise KeyError(f"no reports for {classifier!r} / {features!r}")
        return float(np.mean(vals))


@dataclass(frozen=True)
class RunData:
    """Features of one simulated run; ``y`` holds the true states of the hidden nodes."""

    run: int
    features: FeatureMatrix
    infected_fraction: float
    no_anchor: bool


def simulate_run(g: Graph, protocol: Protocol, rng_seed: int, phase: int, run: int) -> RunData:
    c = simulate_si(g, protocol.lam, protocol.stop_fraction, rngs.stream(rng_seed, phase, run, rngs.CASCADE))
    obs = observe(c, g, protocol.observed_fraction, rngs.stream(rng_seed, phase, run, rngs.OBSERVE))
    red = reduce_property1(g, obs)
    fm = build_features(g, obs, red, cascade=c, alpha=protocol.alpha, centrality_graph=protocol.centrality_graph)
    inf = float(fm.y.mean()) if len(fm) else 0.0
    return RunData(run, fm, inf, red.no_anchor)


def collect_runs(g: Graph, protocol: Protocol, rng_seed: int) -> tuple[FeatureMatrix, list[RunData]]:
    """Simulate every training and test run; returns the pooled training matrix and per-run test data.

    ``alpha`` is checked against the full graph first: a reduced graph is
    an induced subgraph, so its spectral radius is never larger, and one
    up-front check covers every run.
    """
    check_alpha(protocol.alpha, spectral_radius(g))
    train = [simulate_run(g, protocol, rng_seed, rngs.TRAIN, r).features for r in range(protocol.n_train_runs)]
    tests = [simulate_run(g, protocol, rng_seed, rngs.TEST, r) for r in range(protocol.n_test_runs)]
    return FeatureMatrix.concat(train), tests


def evaluate_runs(
    train: FeatureMatrix,
    tests: Sequence[RunData],
    classifiers: Sequence[str],
    feature_sets: Sequence[Sequence[str]],
    rng_seed: int,
    network: str = "",
    observed_fraction: float = float("nan"),
    models: dict | None = None,
    on_predict=None,
) -> ExperimentResult:
    """Fit each classifier on each feature subset of ``train`` and score it on every test run.

    When given, ``models`` is filled with the fitted models keyed by
    ``(classifier, "+".join(features))``, and ``on_predict(classifier,
    features, run_data, posterior, labels)`` is called for every test run.
    """
    out = ExperimentResult()
    for names in feature_sets:
        names = tuple(names)
        tag = "+".join(names)
        sub_train = train.select(names)
        for kind in classifiers:
            model = fit(kind, sub_train, rng_seed)
            if models is not None:
                models[(kind, tag)] = model
            for rd in tests:
                X = rd.features.select(names).X
                seed_stream = rngs.stream(rng_seed, rngs.TEST, rd.run, rngs.PREDICT)
                post, labels = predict_arrays(model, X, seed_stream)
                if on_predict is not None:
                    on_predict(kind, tag, rd, post, labels)
                out.reports.append(
                    score_arrays(
                        labels,
                        rd.features.y,
                        network=network,
                        classifier=kind,
                        features=tag,
                        observed_fraction=observed_fraction,
                        infected_fraction=rd.infected_fraction,
                        run=rd.run,
                    )
                )
    return out


def run_experiment(g: Graph, protocol: Protocol, rng_seed: int, network: str = "") -> ExperimentResult:
    """Train on pooled training runs, score every classifier on every test run."""
    train, tests = collect_runs(g, protocol, rng_seed)
    return evaluate_runs(
        train, tests, protocol.classifiers, [protocol.features], rng_seed, network, protocol.observed_fraction
    )


def sweep_observed_fraction(
    g: Graph, fractions: Sequence[float], protocol: Protocol, rng_seed: int, network: str = ""
) -> list[ExperimentResult]:
    """One experiment per observed fraction, all from the same master seed.

    Cascades are shared across fractions and observed sets are nested, so
    differences between rows come from the extra observations alone.
    """
    for f in fractions:
        if not 0.0 < f < 1.0:
            raise ValueError(f"observed fraction {f} outside (0, 1)")
    return [run_experiment(g, replace(protocol, observed_fraction=f), rng_seed, network) for f in fractions]


def feature_predictiveness(
    g: Graph,
    protocol: Protocol,
    rng_seed: int,
    classifiers: Sequence[str] = ("gnb", "c45"),
    network: str = "",
) -> dict[tuple[str, str], float]:
    """Mean F-measure of each classifier using each feature on its own."""
    train, tests = collect_runs(g, protocol, rng_seed)
    res = evaluate_runs(
        train, tests, classifiers, [(f,) for f in protocol.features], rng_seed, network, protocol.observed_fraction
    )
    return {(c, f): res.mean_f(c, f) for c in classifiers for f in protocol.features}


def rank_correlation(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation of the average-rank vectors (Spearman's rho)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) != len(y) or len(x) == 0:
        raise ValueError("rank_correlation needs two non-empty sequences of equal length")
    rx, ry = rankdata(x) - 0.0, rankdata(y) - 0.0
    rx -= rx.mean()
    ry -= ry.mean()
    den = math.sqrt(float(rx @ rx) * float(ry @ ry))
    if den == 0.0:
        raise UndefinedCorrelationError("a rank vector has zero variance")
    return float(np.clip(rx @ ry / den, -1.0, 1.0))


def characteristic_rank_correlation(
    characteristic: Sequence[float], f_by_classifier: dict[str, Sequence[float]]
) -> dict[str, float]:
    """Rank correlation between a network characteristic and each classifier's F across networks.

    ``characteristic[k]`` and ``f_by_classifier[c][k]`` describe network ``k``.
    The returned dict also holds the average over classifiers under ``"mean"``.
    """
    out = {c: rank_correlation(characteristic, fs) for c, fs in f_by_classifier.items()}
    out["mean"] = float(np.mean(list(out.values())))
    return out


RESULTS_HEADER = "network,classifier,features,observed_fraction,run,precision,recall,f"
SUMMARY_HEADER = (
    "network,classifier,features,observed_fraction,runs,"
    "precision_mean_of_runs,precision_se,recall_mean_of_runs,recall_se,f_mean_of_runs,f_se,"
    "precision_pooled,recall_pooled,f_pooled"
)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_results_csv(reports: Iterable[EvalReport], fh: TextIO, header: bool = True) -> None:
    if header:
        fh.write(RESULTS_HEADER + "\n")
    for r in reports:
        fh.write(
            f"{r.network},{r.classifier},{r.features},{_fmt(r.observed_fraction)},{r.run},"
            f"{_fmt(r.precision)},{_fmt(r.recall)},{_fmt(r.f_measure)}\n"
        )


def write_summary_csv(summaries: Iterable[Summary], fh: TextIO, header: bool = True) -> None:
    if header:
        fh.write(SUMMARY_HEADER + "\n")
    for s in summaries:
        p = s.pooled
        fh.write(
            f"{s.network},{s.classifier},{s.features},{_fmt(s.observed_fraction)},{s.runs},"
            f"{_fmt(s.precision_mean)},{_fmt(s.precision_se)},{_fmt(s.recall_mean)},{_fmt(s.recall_se)},"
            f"{_fmt(s.f_mean)},{_fmt(s.f_se)},{_fmt(p.precision)},{_fmt(p.recall)},{_fmt(p.f_measure)}\n"
        )
