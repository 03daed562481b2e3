"""Per-node features for hidden nodes.

Six columns, in this order:

``D``   degree divided by the maximum degree of the graph
``R``   share of a node's neighbors that are observed infected
``Cb``  shortest-path betweenness
``Cc``  closeness within the node's component
``Ce``  eigenvector centrality (largest component, max entry 1)
``P``   Infection Betweenness probability on the reduced graph
"""

from __future__ import annotations

import csv
import functools
from dataclasses import dataclass
from typing import Iterator, Sequence, TextIO

import numpy as np
from scipy.sparse import csgraph

from latent_infection.cascade import Cascade, Observation
from latent_infection.errors import NumericError
from latent_infection.graph import Graph, largest_component
from latent_infection.ib import DENSE_LIMIT, PathWeightMatrix, path_weight_columns, path_weight_matrix, probability_from_rows
from latent_infection.reduction import ReducedGraph

__all__ = [
    "FEATURE_NAMES",
    "FeatureVector",
    "FeatureMatrix",
    "betweenness_centrality",
    "closeness_centrality",
    "eigenvector_centrality",
    "topology_features",
    "ib_probabilities",
    "build_features",
]

FEATURE_NAMES = ("D", "R", "Cb", "Cc", "Ce", "P")


def betweenness_centrality(g: Graph, batch: int = 128) -> np.ndarray:
    """Exact shortest-path betweenness, normalized by ``(n - 1)(n - 2) / 2``.

    Brandes' accumulation done level-synchronously for a batch of sources
    at a time: path counts move forward one BFS layer per sparse product
    and dependencies flow back the same way.
    """
    n = g.n
    bc = np.zeros(n)
    if n < 3 or g.m == 0:
        return bc
    A = g.adjacency()
    for start in range(0, n, batch):
        src = np.arange(start, min(start + batch, n))
        b = len(src)
        cols = np.arange(b)
        dist = np.full((n, b), -1, dtype=np.int64)
        sigma = np.zeros((n, b))
        dist[src, cols] = 0
        sigma[src, cols] = 1.0
        frontier = sigma.copy()
        depth = 0
        while True:
            reach = A @ frontier
            new = (dist < 0) & (reach > 0)
            if not new.any():
                break
            depth += 1
            dist[new] = depth
            sigma[new] = reach[new]
            frontier = np.where(new, sigma, 0.0)
        delta = np.zeros((n, b))
        with np.errstate(divide="ignore", invalid="ignore"):
            for d in range(depth, 0, -1):
                at_d = dist == d
                coef = np.where(at_d, (1.0 + delta) / sigma, 0.0)
                back = A @ coef
                at_prev = dist == d - 1
                delta[at_prev] += sigma[at_prev] * back[at_prev]
        delta[src, cols] = 0.0
        bc += delta.sum(axis=1)
    # each unordered pair was counted from both endpoints
    bc /= 2.0
    bc /= (n - 1) * (n - 2) / 2.0
    return bc


def closeness_centrality(g: Graph, chunk: int = 256) -> np.ndarray:
    """``(n_c - 1) / sum of distances`` within each node's component; isolated nodes get 0."""
    out = np.zeros(g.n)
    if g.m == 0:
        return out
    A = g.adjacency()
    for start in range(0, g.n, chunk):
        idx = np.arange(start, min(start + chunk, g.n))
        dist = csgraph.shortest_path(A, method="D", directed=False, unweighted=True, indices=idx)
        finite = np.isfinite(dist)
        reach = finite.sum(axis=1) - 1
        total = np.where(finite, dist, 0.0).sum(axis=1)
        ok = total > 0
        out[idx[ok]] = reach[ok] / total[ok]
    return out


def eigenvector_centrality(g: Graph, tol: float = 1e-9, max_iter: int = 10000) -> np.ndarray:
    """Principal eigenvector of the largest component, scaled so its maximum is 1.

    Power iteration on ``A + I`` (same eigenvectors, no bipartite
    oscillation). Nodes outside the largest component get 0.
    """
    out = np.zeros(g.n)
    lcc = largest_component(g)
    if len(lcc) == 0:
        return out
    if len(lcc) == 1:
        out[lcc] = 1.0
        return out
    sub, _ = g.subgraph(lcc)
    A = sub.adjacency()
    x = np.ones(sub.n)
    for _ in range(max_iter):
        y = A @ x + x
        y /= y.max()
        if np.abs(y - x).max() < tol:
            out[lcc] = y
            return out
        x = y
    raise NumericError(f"eigenvector centrality did not converge in {max_iter} iterations")


@functools.lru_cache(maxsize=16)
def topology_features(g: Graph) -> np.ndarray:
    """``(n, 3)`` read-only array of betweenness, closeness and eigenvector centrality."""
    cols = np.column_stack([betweenness_centrality(g), closeness_centrality(g), eigenvector_centrality(g)])
    np.clip(cols, 0.0, 1.0, out=cols)
    cols.setflags(write=False)
    return cols


def ib_probabilities(red: ReducedGraph, n_original: int, alpha: float, pwm: PathWeightMatrix | None = None) -> np.ndarray:
    """Infection Betweenness probability for every original node.

    Nodes pruned from the reduced graph get 0; so do observed infected
    nodes, whose value is never used. Graphs larger than ``DENSE_LIMIT``
    only compute the rows of the walk-weight matrix that are needed.
    """
    out = np.zeros(n_original)
    anchors = sorted(red.retained_observed_infected)
    if len(anchors) < 2:
        return out
    if pwm is None and red.graph.n > DENSE_LIMIT:
        rows = path_weight_columns(red.graph, alpha, anchors).T
    else:
        if pwm is None:
            pwm = path_weight_matrix(red.graph, alpha)
        elif pwm.size != red.graph.n:
            raise ValueError(f"path-weight matrix has {pwm.size} nodes, reduced graph has {red.graph.n}")
        rows = pwm.n_matrix[anchors, :]
    p = probability_from_rows(rows)
    p[anchors] = 0.0
    out[red.to_original] = p
    return out


@dataclass(frozen=True)
class FeatureVector:
    node: int
    D: float
    R: float
    Cb: float
    Cc: float
    Ce: float
    P: float
    label: int | None = None


@dataclass(frozen=True)
class FeatureMatrix:
    """Feature rows for a set of nodes.

    ``nodes`` are graph-internal ids, ``node_ids`` the ids used in files.
    ``y`` is 1 for infected, 0 for susceptible, or ``None`` when unlabeled.
    """

    nodes: np.ndarray
    node_ids: np.ndarray
    X: np.ndarray
    y: np.ndarray | None = None
    feature_names: tuple[str, ...] = FEATURE_NAMES

    def __post_init__(self):
        if self.X.shape != (len(self.nodes), len(self.feature_names)):
            raise ValueError(f"X has shape {self.X.shape}, expected {(len(self.nodes), len(self.feature_names))}")
        if self.y is not None and len(self.y) != len(self.nodes):
            raise ValueError("label count does not match row count")

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def labeled(self) -> bool:
        return self.y is not None

    def select(self, names: Sequence[str]) -> "FeatureMatrix":
        idx = [self.feature_names.index(n) for n in names]
        return FeatureMatrix(self.nodes, self.node_ids, self.X[:, idx], self.y, tuple(names))

    def rows(self) -> Iterator[FeatureVector]:
        full = self.select(FEATURE_NAMES) if self.feature_names != FEATURE_NAMES else self
        for k in range(len(self)):
            lab = None if self.y is None else int(self.y[k])
            yield FeatureVector(int(self.node_ids[k]), *map(float, full.X[k]), label=lab)

    @classmethod
    def concat(cls, parts: Sequence["FeatureMatrix"]) -> "FeatureMatrix":
        if not parts:
            raise ValueError("nothing to concatenate")
        names = parts[0].feature_names
        if any(p.feature_names != names for p in parts):
            raise ValueError("feature order differs between parts")
        labeled = [p.labeled for p in parts]
        if any(labeled) and not all(labeled):
            raise ValueError("cannot mix labeled and unlabeled rows")
        return cls(
            np.concatenate([p.nodes for p in parts]),
            np.concatenate([p.node_ids for p in parts]),
            np.concatenate([p.X for p in parts]).reshape(-1, len(names)),
            np.concatenate([p.y for p in parts]) if all(labeled) else None,
            names,
        )

    def to_csv(self, fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node", *self.feature_names, "label"])
        for k in range(len(self)):
            lab = "" if self.y is None else int(self.y[k])
            w.writerow([int(self.node_ids[k]), *(repr(float(v)) for v in self.X[k]), lab])

    @classmethod
    def from_csv(cls, fh: TextIO) -> "FeatureMatrix":
        r = csv.reader(fh)
        header = next(r)
        if header[0] != "node" or header[-1] != "label":
            raise ValueError(f"unexpected feature header {header!r}")
        names = tuple(header[1:-1])
        ids, X, y = [], [], []
        for row in r:
            if not row:
                continue
            ids.append(int(row[0]))
            X.append([float(v) for v in row[1:-1]])
            y.append(row[-1])
        has = [v != "" for v in y]
        if any(has) and not all(has):
            raise ValueError("feature file mixes labeled and unlabeled rows")
        ids_arr = np.asarray(ids, dtype=np.int64)
        X_arr = np.asarray(X, dtype=np.float64).reshape(-1, len(names))
        y_arr = np.asarray([int(v) for v in y], dtype=np.int64) if ids and all(has) else None
        return cls(ids_arr, ids_arr, X_arr, y_arr, names)


def build_features(
    g: Graph,
    obs: Observation,
    red: ReducedGraph,
    pwm: PathWeightMatrix | None = None,
    cascade: Cascade | None = None,
    alpha: float = 0.01,
    centrality_graph: str = "original",
) -> FeatureMatrix:
    """One feature row per hidden node of ``g``, ascending by node id.

    Centralities come from the full topology by default; pass
    ``centrality_graph="reduced"`` to compute them on the reduced graph
    instead (pruned nodes then get 0). ``P`` is 0 for nodes pruned as
    deterministic susceptible. When ``cascade`` is given, rows carry the
    true state as label.
    """
    if len(red.to_original) and (red.to_original.max() >= g.n or not np.array_equal(red.graph.labels, g.labels[red.to_original])):
        raise ValueError("reduced graph does not map onto this graph")
    hidden = np.asarray(sorted(obs.hidden), dtype=np.int64)
    deg = g.degree.astype(np.float64)
    top = deg.max() if g.n else 0.0
    D = deg / top if top > 0 else np.zeros(g.n)

    infected_obs = np.zeros(g.n, dtype=bool)
    infected_obs[list(obs.observed_infected)] = True
    A = g.adjacency()
    hits = A @ infected_obs.astype(np.float64)
    R = np.divide(hits, deg, out=np.zeros(g.n), where=deg > 0)

    if centrality_graph == "original":
        cent = topology_features(g)
    elif centrality_graph == "reduced":
        cent = np.zeros((g.n, 3))
        cent[red.to_original] = topology_features(red.graph)
    else:
        raise ValueError(f"centrality_graph must be 'original' or 'reduced', got {centrality_graph!r}")

    P = ib_probabilities(red, g.n, alpha, pwm)
    X = np.column_stack([D[hidden], R[hidden], cent[hidden], P[hidden]])
    np.clip(X, 0.0, 1.0, out=X)
    y = cascade.infected_mask[hidden].astype(np.int64) if cascade is not None else None
    return FeatureMatrix(hidden, g.labels[hidden], X, y)
