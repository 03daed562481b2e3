"""Gaussian naive Bayes, kernel-density naive Bayes, a C4.5-style tree and a coin-flip baseline.

All models are binary: class 1 is infected, class 0 susceptible. A row is
labeled infected only when its infected posterior is strictly above 0.5.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Any, Sequence, TextIO

import numpy as np

from latent_infection.errors import FitError, ShapeError
from latent_infection.features import FeatureMatrix
from latent_infection.rng import stream

__all__ = [
    "Prediction",
    "Model",
    "GaussianNB",
    "KernelNB",
    "C45Tree",
    "RandomGuess",
    "fit",
    "predict",
    "save_model",
    "load_model",
    "parse_kind",
    "MODEL_FORMAT_VERSION",
]

MODEL_FORMAT_VERSION = 1
VARIANCE_FLOOR = 1e-9
BANDWIDTH_FLOOR = 1e-6  # times the feature's training range
# kernel centers are merged onto a grid of this many steps per bandwidth
# once a class has more distinct values than KDE_EXACT_LIMIT
KDE_GRID_PER_BANDWIDTH = 16
KDE_EXACT_LIMIT = 512
GAIN_RATIO_TIE = 1e-12

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Prediction:
    node: int
    label: int
    posterior_infected: float


def _decide(posterior: np.ndarray) -> np.ndarray:
    return (posterior > 0.5).astype(np.int64)


class Model:
    kind: str = ""
    feature_names: tuple[str, ...] = ()

    def _check(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            raise ShapeError(f"{self.kind} model expects {len(self.feature_names)} features, got shape {X.shape}")
        return X

    def predict_log_proba(self, X: np.ndarray) -> np.ndarray:
        """``(rows, 2)`` log posteriors, column 0 susceptible, column 1 infected."""
        raise NotImplementedError

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return np.exp(self.predict_log_proba(X))

    def params(self) -> dict[str, Any]:
        raise NotImplementedError

    def to_dict(self) -> dict[str, Any]:
        return {
            "format": "latent-infection-model",
            "version": MODEL_FORMAT_VERSION,
            "kind": self.kind,
            "feature_names": list(self.feature_names),
            "params": self.params(),
        }


def _log_joint_to_posterior(joint: np.ndarray) -> np.ndarray:
    norm = np.logaddexp(joint[:, 0], joint[:, 1])
    return joint - norm[:, None]


def _column_sorted(X: np.ndarray) -> np.ndarray:
    # sorting first makes sums independent of the training row order
    return np.sort(X, axis=0)


class GaussianNB(Model):
    kind = "gnb"

    def __init__(self, feature_names, priors, means, variances):
        self.feature_names = tuple(feature_names)
        self.priors = np.asarray(priors, dtype=np.float64)
        self.means = np.asarray(means, dtype=np.float64).reshape(2, -1)
        self.variances = np.asarray(variances, dtype=np.float64).reshape(2, -1)

    @classmethod
    def fit(cls, X, y, feature_names):
        means, variances, priors = [], [], []
        for c in (0, 1):
            Xc = _column_sorted(X[y == c])
            mu = Xc.mean(axis=0)
            var = _column_sorted((Xc - mu) ** 2).mean(axis=0)
            means.append(mu)
            variances.append(np.maximum(var, VARIANCE_FLOOR))
            priors.append(len(Xc) / len(X))
        return cls(feature_names, priors, means, variances)

    def predict_log_proba(self, X):
        X = self._check(X)
        joint = np.empty((len(X), 2))
        for c in (0, 1):
            var = self.variances[c]
            ll = -0.5 * (_LOG_2PI + np.log(var)) - (X - self.means[c]) ** 2 / (2.0 * var)
            joint[:, c] = math.log(self.priors[c]) + ll.sum(axis=1)
        return _log_joint_to_posterior(joint)

    def params(self):
        return {"priors": self.priors.tolist(), "means": self.means.tolist(), "variances": self.variances.tolist()}


class KernelNB(Model):
    """Naive Bayes with one Gaussian-kernel density per class and feature.

    Bandwidths follow Silverman's rule ``1.06 * std * m^(-1/5)``. Repeated
    training values become one weighted kernel; with many distinct values
    the kernels are pooled onto a grid of ``h / 16`` spacing.
    """

    kind = "nbk"

    def __init__(self, feature_names, priors, kernels):
        self.feature_names = tuple(feature_names)
        self.priors = np.asarray(priors, dtype=np.float64)
        # kernels[c][f] = (centers, log_weights, bandwidth)
        self.kernels = kernels

    @staticmethod
    def _kernel(values: np.ndarray, floor: float):
        v = np.sort(values)
        m = len(v)
        std = float(v.std(ddof=1)) if m > 1 else 0.0
        h = max(1.06 * std * m ** (-0.2), floor)
        centers, counts = np.unique(v, return_counts=True)
        if len(centers) > KDE_EXACT_LIMIT:
            step = h / KDE_GRID_PER_BANDWIDTH
            cell = np.floor((v - v[0]) / step + 0.5).astype(np.int64)
            cells, counts = np.unique(cell, return_counts=True)
            centers = v[0] + cells * step
        log_w = np.log(counts / m)
        return centers, log_w, h

    @classmethod
    def fit(cls, X, y, feature_names):
        span = X.max(axis=0) - X.min(axis=0)
        floors = np.where(span > 0, BANDWIDTH_FLOOR * span, VARIANCE_FLOOR)
        kernels, priors = [], []
        for c in (0, 1):
            Xc = X[y == c]
            priors.append(len(Xc) / len(X))
            kernels.append([cls._kernel(Xc[:, f], float(floors[f])) for f in range(X.shape[1])])
        return cls(feature_names, priors, kernels)

    @staticmethod
    def _log_density(x: np.ndarray, centers, log_w, h, chunk_cells: int = 1 << 22) -> np.ndarray:
        out = np.empty(len(x))
        step = max(1, chunk_cells // max(1, len(centers)))
        const = -0.5 * _LOG_2PI - math.log(h)
        for s in range(0, len(x), step):
            z = (x[s : s + step, None] - centers[None, :]) / h
            t = log_w[None, :] - 0.5 * z * z
            top = t.max(axis=1)
            out[s : s + step] = top + np.log(np.exp(t - top[:, None]).sum(axis=1)) + const
        return out

    def predict_log_proba(self, X):
        X = self._check(X)
        joint = np.empty((len(X), 2))
        for c in (0, 1):
            acc = np.full(len(X), math.log(self.priors[c]))
            for f, (centers, log_w, h) in enumerate(self.kernels[c]):
                acc += self._log_density(X[:, f], centers, log_w, h)
            joint[:, c] = acc
        return _log_joint_to_posterior(joint)

    def params(self):
        return {
            "priors": self.priors.tolist(),
            "kernels": [
                [{"centers": ce.tolist(), "log_weights": lw.tolist(), "bandwidth": h} for ce, lw, h in per_class]
                for per_class in self.kernels
            ],
        }


# -- C4.5-style tree ----------------------------------------------------------


@dataclass(eq=False, repr=False)
class TreeNode:
    counts: tuple[int, int]
    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    @property
    def errors(self) -> int:
        return min(self.counts)

    def walk(self):
        """Pre-order traversal, iterative (unpruned trees can be thousands of levels deep)."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            if not node.is_leaf:
                stack.extend((node.right, node.left))

    def depth(self) -> int:
        best, stack = 0, [(self, 0)]
        while stack:
            node, d = stack.pop()
            best = max(best, d)
            if not node.is_leaf:
                stack.extend(((node.left, d + 1), (node.right, d + 1)))
        return best

    def n_leaves(self) -> int:
        return sum(1 for node in self.walk() if node.is_leaf)

    def to_list(self) -> list[list]:
        """Flat pre-order encoding: ``[c0, c1]`` for leaves, ``[c0, c1, feature, threshold]`` for splits."""
        out = []
        for node in self.walk():
            row = [node.counts[0], node.counts[1]]
            if not node.is_leaf:
                row += [node.feature, node.threshold]
            out.append(row)
        return out

    @classmethod
    def from_list(cls, rows: Sequence[Sequence]) -> "TreeNode":
        it = iter(rows)

        def make(row):
            node = cls((int(row[0]), int(row[1])))
            if len(row) == 4:
                node.feature, node.threshold = int(row[2]), float(row[3])
            return node

        root = make(next(it))
        # split nodes still missing a child
        stack = [root] if len(rows[0]) == 4 else []
        for row in it:
            node = make(row)
            parent = stack[-1]
            if parent.left is None:
                parent.left = node
            else:
                parent.right = node
                stack.pop()
            if len(row) == 4:
                stack.append(node)
        if stack:
            raise ValueError("truncated tree encoding")
        return root


def _entropy2(pos: np.ndarray, total: np.ndarray) -> np.ndarray:
    """Binary entropy in bits of ``pos / total``, elementwise, 0 where undefined."""
    with np.errstate(divide="ignore", invalid="ignore"):
        p = pos / total
        q = 1.0 - p
        h = -(np.where(p > 0, p * np.log2(p), 0.0) + np.where(q > 0, q * np.log2(q), 0.0))
    return np.where(total > 0, h, 0.0)


def split_candidates(x: np.ndarray, y: np.ndarray, min_leaf: int):
    """All binary splits ``x <= t`` of one feature with their gain ratios.

    Returns ``(thresholds, gain_ratios, gains)``; thresholds are midpoints
    between consecutive distinct values with at least ``min_leaf`` rows on
    each side.
    """
    n = len(x)
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    k = np.arange(1, n)
    ok = (xs[1:] > xs[:-1]) & (k >= min_leaf) & (n - k >= min_leaf)
    k = k[ok]
    if len(k) == 0:
        empty = np.empty(0)
        return empty, empty, empty
    cum = np.cumsum(ys)
    left_pos = cum[k - 1].astype(np.float64)
    total_pos = float(cum[-1])
    kf = k.astype(np.float64)
    parent = float(_entropy2(np.array(total_pos), np.array(float(n))))
    children = (kf / n) * _entropy2(left_pos, kf) + ((n - kf) / n) * _entropy2(total_pos - left_pos, n - kf)
    gain = np.maximum(parent - children, 0.0)
    split_info = _entropy2(kf, np.full_like(kf, n))
    ratio = gain / split_info
    lo, hi = xs[k - 1], xs[k]
    thr = lo + (hi - lo) / 2.0
    thr = np.where(thr >= hi, lo, thr)
    return thr, ratio, gain


def best_split(X: np.ndarray, y: np.ndarray, min_leaf: int):
    """Highest gain ratio over every feature and threshold.

    Ratios within ``GAIN_RATIO_TIE`` count as equal; ties go to the lower
    threshold, then the lower feature index. Returns ``None`` when no split
    is admissible, else ``(feature, threshold, ratio)``.
    """
    best = None
    for f in range(X.shape[1]):
        thr, ratio, _ = split_candidates(X[:, f], y, min_leaf)
        if len(thr) == 0:
            continue
        top = ratio.max()
        tied = ratio >= top - GAIN_RATIO_TIE
        t = float(thr[tied].min())
        cand = (f, t, float(top))
        if best is None or top > best[2] + GAIN_RATIO_TIE:
            best = cand
        elif abs(top - best[2]) <= GAIN_RATIO_TIE:
            if t < best[1]:
                best = (f, t, max(best[2], float(top)))
    return best


_Z_CACHE: dict[float, float] = {}


def added_errors(n: float, e: float, confidence: float = 0.25) -> float:
    """Extra errors C4.5 adds to ``e`` observed errors among ``n`` cases.

    ``e + added_errors(n, e)`` is the upper confidence limit on the error
    count at level ``confidence``.
    """
    if confidence > 0.5:
        raise ValueError("confidence must be <= 0.5")
    if e < 1.0:
        base = n * (1.0 - confidence ** (1.0 / n))
        if e == 0.0:
            return base
        return base + e * (added_errors(n, 1.0, confidence) - base)
    if e + 0.5 >= n:
        return max(n - e, 0.0)
    z = _Z_CACHE.get(confidence)
    if z is None:
        z = _Z_CACHE[confidence] = NormalDist().inv_cdf(1.0 - confidence)
    f = (e + 0.5) / n
    r = (f + z * z / (2 * n) + z * math.sqrt(f / n - f * f / n + z * z / (4 * n * n))) / (1 + z * z / n)
    return r * n - e


class C45Tree(Model):
    kind = "c45"

    def __init__(self, feature_names, root: TreeNode, pruned: bool = True, min_leaf: int = 2, confidence: float = 0.25):
        self.feature_names = tuple(feature_names)
        self.root = root
        self.pruned = pruned
        self.min_leaf = min_leaf
        self.confidence = confidence

    @classmethod
    def fit(cls, X, y, feature_names, prune: bool = True, min_leaf: int = 2, confidence: float = 0.25):
        if min_leaf < 1:
            raise FitError("min_leaf must be at least 1")
        root = TreeNode((int((y == 0).sum()), int((y == 1).sum())))
        todo = [(root, np.arange(len(y)))]
        while todo:
            node, idx = todo.pop()
            c0, c1 = node.counts
            if c0 == 0 or c1 == 0 or len(idx) < 2 * min_leaf:
                continue
            split = best_split(X[idx], y[idx], min_leaf)
            if split is None:
                continue
            f, t, _ = split
            go_left = X[idx, f] <= t
            li, ri = idx[go_left], idx[~go_left]
            node.feature, node.threshold = f, t
            node.left = TreeNode((int((y[li] == 0).sum()), int((y[li] == 1).sum())))
            node.right = TreeNode((int((y[ri] == 0).sum()), int((y[ri] == 1).sum())))
            todo.append((node.right, ri))
            todo.append((node.left, li))
        if prune:
            cls._prune(root, confidence)
        return cls(feature_names, root, pruned=prune, min_leaf=min_leaf, confidence=confidence)

    @staticmethod
    def _prune(root: TreeNode, confidence: float) -> None:
        """Pessimistic error pruning, bottom-up, no subtree raising."""
        estimate: dict[int, float] = {}
        post, stack = [], [root]
        while stack:
            node = stack.pop()
            post.append(node)
            if not node.is_leaf:
                stack.extend((node.left, node.right))
        for node in reversed(post):
            n = float(sum(node.counts))
            e = float(node.errors)
            as_leaf = e + added_errors(n, e, confidence)
            if node.is_leaf:
                estimate[id(node)] = as_leaf
                continue
            subtree = estimate[id(node.left)] + estimate[id(node.right)]
            if as_leaf <= subtree + 0.1:
                node.left = node.right = None
                node.feature, node.threshold = -1, 0.0
                estimate[id(node)] = as_leaf
            else:
                estimate[id(node)] = subtree

    def leaf_counts(self, X: np.ndarray) -> np.ndarray:
        X = self._check(X)
        out = np.empty((len(X), 2))
        todo = [(self.root, np.arange(len(X)))]
        while todo:
            node, idx = todo.pop()
            if len(idx) == 0:
                continue
            if node.is_leaf:
                out[idx] = node.counts
                continue
            left = X[idx, node.feature] <= node.threshold
            todo.append((node.left, idx[left]))
            todo.append((node.right, idx[~left]))
        return out

    def predict_log_proba(self, X):
        counts = self.leaf_counts(X)
        # Laplace smoothing
        return np.log(counts + 1.0) - np.log(counts.sum(axis=1, keepdims=True) + 2.0)

    def params(self):
        return {
            "pruned": self.pruned,
            "min_leaf": self.min_leaf,
            "confidence": self.confidence,
            "tree": self.root.to_list(),
        }


class RandomGuess(Model):
    """Declares each row infected with probability ``q``, ignoring features."""

    kind = "random"

    def __init__(self, feature_names, q: float):
        if not 0.0 <= q <= 1.0:
            raise FitError(f"random baseline rate must be in [0,1], got {q}")
        self.feature_names = tuple(feature_names)
        self.q = float(q)

    def predict_log_proba(self, X):
        X = self._check(X)
        with np.errstate(divide="ignore"):
            row = np.log([1.0 - self.q, self.q])
        return np.tile(row, (len(X), 1))

    def params(self):
        return {"q": self.q}


def parse_kind(kind: str) -> tuple[str, dict[str, Any]]:
    """``"random(0.1)"`` -> ``("random", {"q": 0.1})``; ``"c45-unpruned"`` -> ``("c45", {"prune": False, "min_leaf": 1})``."""
    k = kind.strip().lower()
    if k.startswith("random"):
        arg = k[len("random") :].strip()
        q = float(arg.strip("()")) if arg else 0.1
        return "random", {"q": q}
    if k in ("gnb", "nb"):
        return "gnb", {}
    if k == "nbk":
        return "nbk", {}
    if k in ("c45", "c4.5"):
        return "c45", {}
    if k in ("c45-unpruned", "c45u"):
        return "c45", {"prune": False, "min_leaf": 1}
    raise FitError(f"unknown classifier kind {kind!r}")


def fit(kind: str, train: FeatureMatrix, rng_seed: int = 0, **options) -> Model:
    """Train a model of ``kind`` (``gnb``, ``nbk``, ``c45``, ``c45-unpruned`` or ``random(q)``).

    Extra keyword options go to the model (``prune``, ``min_leaf``,
    ``confidence`` for ``c45``; ``q`` for ``random``). All current models
    are deterministic, so ``rng_seed`` is accepted only for interface
    stability.
    """
    name, opts = parse_kind(kind)
    opts.update(options)
    if name == "random":
        return RandomGuess(train.feature_names, **opts)
    if len(train) == 0:
        raise FitError("empty training set")
    if train.y is None:
        raise FitError("training rows are unlabeled")
    X = np.asarray(train.X, dtype=np.float64)
    y = np.asarray(train.y, dtype=np.int64)
    if name == "c45":
        return C45Tree.fit(X, y, train.feature_names, **opts)
    for c, cname in ((0, "susceptible"), (1, "infected")):
        if not np.any(y == c):
            raise FitError(f"class {cname!r} absent from training data; {name} needs both classes")
    cls = GaussianNB if name == "gnb" else KernelNB
    return cls.fit(X, y, train.feature_names)


def predict(m: Model, rows: FeatureMatrix, rng_seed: int | np.random.Generator = 0) -> list[Prediction]:
    if tuple(rows.feature_names) != tuple(m.feature_names):
        if len(rows.feature_names) != len(m.feature_names):
            raise ShapeError(f"model has {len(m.feature_names)} features, rows have {len(rows.feature_names)}")
        raise ShapeError(f"feature order {rows.feature_names} does not match model order {m.feature_names}")
    post, labels = predict_arrays(m, rows.X, rng_seed)
    return [Prediction(int(v), int(l), float(p)) for v, l, p in zip(rows.node_ids, labels, post)]


def predict_arrays(m: Model, X: np.ndarray, rng_seed: int | np.random.Generator = 0) -> tuple[np.ndarray, np.ndarray]:
    """Infected posterior and 0/1 labels for each row of ``X``."""
    if isinstance(m, RandomGuess):
        m._check(X)
        rng = rng_seed if isinstance(rng_seed, np.random.Generator) else stream(rng_seed)
        labels = (rng.random(len(X)) < m.q).astype(np.int64)
        return np.full(len(X), m.q), labels
    post = np.exp(m.predict_log_proba(X)[:, 1])
    return post, _decide(post)


def save_model(m: Model, fh: TextIO) -> None:
    json.dump(m.to_dict(), fh, indent=1, sort_keys=True)
    fh.write("\n")


def load_model(fh: TextIO) -> Model:
    d = json.load(fh)
    if d.get("format") != "latent-infection-model":
        raise ValueError("not a model file")
    if d.get("version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {d.get('version')}")
    names, p = d["feature_names"], d["params"]
    kind = d["kind"]
    if kind == "gnb":
        return GaussianNB(names, p["priors"], p["means"], p["variances"])
    if kind == "nbk":
        kernels = [
            [(np.asarray(k["centers"]), np.asarray(k["log_weights"]), float(k["bandwidth"])) for k in per_class]
            for per_class in p["kernels"]
        ]
        return KernelNB(names, p["priors"], kernels)
    if kind == "c45":
        return C45Tree(names, TreeNode.from_list(p["tree"]), p["pruned"], p["min_leaf"], p["confidence"])
    if kind == "random":
        return RandomGuess(names, p["q"])
    raise ValueError(f"unknown model kind {kind!r}")
