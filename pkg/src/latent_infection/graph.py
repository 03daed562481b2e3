"""Undirected simple graphs, edge-list ingestion, generators and summary statistics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph
from scipy.stats import skew

from latent_infection.errors import ConfigurationError, EdgeListParseError

__all__ = [
    "Graph",
    "NetworkStats",
    "parse_edge_list",
    "write_edge_list",
    "components",
    "largest_component",
    "network_stats",
    "generate",
    "erdos_renyi",
    "barabasi_albert",
    "watts_strogatz",
]


class Graph:
    """Immutable undirected simple graph over node ids ``0..n-1``.

    Edges are stored once as ``(u, v)`` with ``u < v``; adjacency is kept in
    CSR form so neighbor queries work in both directions. ``labels`` maps
    each node id back to the id it had in the source file (identity for
    generated graphs).
    """

    __slots__ = ("_n", "_edges", "_indptr", "_indices", "_labels")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] | np.ndarray = (), labels=None):
        if n < 0:
            raise ValueError("node count must be non-negative")
        e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        e = e.reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise ValueError("edge endpoint out of range")
        e = e[e[:, 0] != e[:, 1]]
        e = np.sort(e, axis=1)
        e = np.unique(e, axis=0) if len(e) else e
        self._n = int(n)
        self._edges = e
        self._edges.setflags(write=False)

        both = np.concatenate([e, e[:, ::-1]]) if len(e) else np.empty((0, 2), dtype=np.int64)
        order = np.lexsort((both[:, 1], both[:, 0]))
        both = both[order]
        counts = np.bincount(both[:, 0], minlength=n) if len(both) else np.zeros(n, dtype=np.int64)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        self._indptr = indptr
        self._indices = np.ascontiguousarray(both[:, 1])
        self._indptr.setflags(write=False)
        self._indices.setflags(write=False)

        if labels is None:
            labels = np.arange(n, dtype=np.int64)
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape != (n,):
            raise ValueError("labels must have one entry per node")
        labels.setflags(write=False)
        self._labels = labels

    @property
    def n(self) -> int:
        return self._n

    @property
    def m(self) -> int:
        return len(self._edges)

    @property
    def edges(self) -> np.ndarray:
        """``(m, 2)`` array of edges with ``u < v``, lexicographically sorted."""
        return self._edges

    @property
    def labels(self) -> np.ndarray:
        return self._labels

    @property
    def degree(self) -> np.ndarray:
        return np.diff(self._indptr)

    def neighbors(self, v: int) -> np.ndarray:
        return self._indices[self._indptr[v] : self._indptr[v + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        k = np.searchsorted(nb, v)
        return bool(k < len(nb) and nb[k] == v)

    def adjacency(self) -> sp.csr_matrix:
        data = np.ones(len(self._indices), dtype=np.float64)
        return sp.csr_matrix((data, self._indices, self._indptr), shape=(self._n, self._n))

    def adjacency_lists(self) -> list[list[int]]:
        ip, ix = self._indptr, self._indices.tolist()
        return [ix[ip[v] : ip[v + 1]] for v in range(self._n)]

    def subgraph(self, nodes) -> tuple["Graph", np.ndarray]:
        """Induced subgraph on ``nodes``.

        Returns the subgraph (ids ``0..k-1`` in ascending order of the kept
        ids) and the array mapping each new id to its id in ``self``.
        """
        keep = np.unique(np.asarray(list(nodes) if not isinstance(nodes, np.ndarray) else nodes, dtype=np.int64))
        new_id = np.full(self._n, -1, dtype=np.int64)
        new_id[keep] = np.arange(len(keep))
        e = self._edges
        if len(e):
            mask = (new_id[e[:, 0]] >= 0) & (new_id[e[:, 1]] >= 0)
            e = new_id[e[mask]]
        return Graph(len(keep), e, labels=self._labels[keep]), keep

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self._n == other._n
            and np.array_equal(self._edges, other._edges)
            and np.array_equal(self._labels, other._labels)
        )

    def __hash__(self):
        return hash((self._n, self._edges.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(n={self._n}, m={self.m})"


def parse_edge_list(text: str | TextIO | Iterable[str]) -> Graph:
    """Parse a whitespace-separated edge list.

    Lines starting with ``#`` (or ``%``) and blank lines are skipped.
    Original ids are remapped to ``0..n-1`` in ascending numeric order, so
    the result does not depend on line order or edge orientation.
    """
    if isinstance(text, str):
        lines = text.splitlines()
    else:
        lines = text
    pairs = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line[0] in "#%":
            continue
        toks = line.split()
        if len(toks) != 2:
            raise EdgeListParseError(lineno, raw.rstrip("\n"), f"expected 2 node ids, got {len(toks)}")
        try:
            pairs.append((int(toks[0]), int(toks[1])))
        except ValueError:
            raise EdgeListParseError(lineno, raw.rstrip("\n"), "node id is not an integer") from None
    if not pairs:
        return Graph(0)
    raw_edges = np.asarray(pairs, dtype=np.int64)
    original, inverse = np.unique(raw_edges, return_inverse=True)
    return Graph(len(original), inverse.reshape(-1, 2), labels=original)


def write_edge_list(g: Graph, fh: TextIO, original_ids: bool = True) -> None:
    lab = g.labels if original_ids else np.arange(g.n)
    for u, v in g.edges:
        fh.write(f"{lab[u]} {lab[v]}\n")


def components(g: Graph) -> list[np.ndarray]:
    """Connected components, largest first; ties go to the one holding the smallest id."""
    if g.n == 0:
        return []
    _, comp = csgraph.connected_components(g.adjacency(), directed=False)
    order = np.argsort(comp, kind="stable")
    bounds = np.flatnonzero(np.diff(comp[order])) + 1
    parts = np.split(order, bounds)
    # each part is ascending, so part[0] is its smallest id
    parts.sort(key=lambda c: (-len(c), int(c[0])))
    return parts


def largest_component(g: Graph) -> np.ndarray:
    comps = components(g)
    return comps[0] if comps else np.empty(0, dtype=np.int64)


@dataclass(frozen=True)
class NetworkStats:
    n: int
    m: int
    c: float
    sigma: float
    s: float
    d: int
    skew_defined: bool = field(default=True)

    def csv_row(self, name: str) -> str:
        return f"{name},{self.n},{self.m},{self.c:.4f},{self.sigma:.4f},{self.s:.4f},{self.d}"


def local_clustering(g: Graph) -> np.ndarray:
    A = g.adjacency()
    tri = np.asarray((A @ A).multiply(A).sum(axis=1)).ravel() / 2.0
    deg = g.degree.astype(np.float64)
    pairs = deg * (deg - 1) / 2.0
    out = np.zeros(g.n)
    ok = pairs > 0
    out[ok] = tri[ok] / pairs[ok]
    return out


def diameter(g: Graph, nodes: np.ndarray | None = None, chunk: int = 256) -> int:
    """Exact diameter of the subgraph induced by ``nodes`` (all nodes by default).

    Runs a BFS from every node; the induced subgraph must be connected.
    """
    if nodes is not None:
        g, _ = g.subgraph(nodes)
    if g.n <= 1:
        return 0
    A = g.adjacency()
    best = 0.0
    for start in range(0, g.n, chunk):
        idx = np.arange(start, min(start + chunk, g.n))
        dist = csgraph.shortest_path(A, method="D", directed=False, unweighted=True, indices=idx)
        top = dist.max()
        if not np.isfinite(top):
            raise ValueError("diameter requested on a disconnected node set")
        best = max(best, top)
    return int(best)


def network_stats(g: Graph) -> NetworkStats:
    """Node/edge counts, mean local clustering, degree spread and LCC diameter.

    ``sigma`` is the population standard deviation of all node degrees and
    ``s`` the bias-corrected (adjusted Fisher-Pearson) skewness. A constant
    degree sequence gives ``s = 0`` with ``skew_defined = False``.
    """
    if g.n == 0:
        return NetworkStats(0, 0, 0.0, 0.0, 0.0, 0, skew_defined=False)
    deg = g.degree.astype(np.float64)
    c = float(local_clustering(g).mean())
    sigma = float(deg.std())
    if sigma == 0.0 or g.n < 3:
        s, ok = 0.0, False
    else:
        s, ok = float(skew(deg, bias=False)), True
    d = diameter(g, largest_component(g))
    return NetworkStats(g.n, g.m, c, sigma, s, d, skew_defined=ok)


# -- generators ---------------------------------------------------------------


def erdos_renyi(n: int, p: float, rng: np.random.Generator) -> Graph:
    if n < 0 or not 0.0 <= p <= 1.0:
        raise ConfigurationError(f"erdos_renyi needs n >= 0 and p in [0,1], got n={n}, p={p}")
    chunks = []
    for u in range(n - 1):
        hit = np.flatnonzero(rng.random(n - u - 1) < p)
        if len(hit):
            chunks.append(np.column_stack([np.full(len(hit), u), hit + u + 1]))
    edges = np.concatenate(chunks) if chunks else np.empty((0, 2), dtype=np.int64)
    return Graph(n, edges)


def barabasi_albert(n: int, k: int, rng: np.random.Generator) -> Graph:
    """Preferential attachment: start from a clique on ``k + 1`` nodes, then each
    new node links to ``k`` distinct existing nodes chosen proportionally to degree."""
    if k < 1 or k >= n:
        raise ConfigurationError(f"barabasi_albert needs 1 <= k < n, got n={n}, k={k}")
    edges = [(u, v) for u in range(k + 1) for v in range(u + 1, k + 1)]
    # every node appears once per incident edge end
    ends = [x for e in edges for x in e]
    for new in range(k + 1, n):
        targets: set[int] = set()
        while len(targets) < k:
            targets.add(ends[int(rng.integers(len(ends)))])
        for t in sorted(targets):
            edges.append((t, new))
            ends.extend((t, new))
    return Graph(n, edges)


def watts_strogatz(n: int, k: int, beta: float, rng: np.random.Generator) -> Graph:
    """Ring lattice with ``k // 2`` neighbors per side, each lattice edge rewired with
    probability ``beta`` to a uniformly chosen non-neighbor."""
    if k < 1 or k >= n or not 0.0 <= beta <= 1.0:
        raise ConfigurationError(f"watts_strogatz needs 1 <= k < n and beta in [0,1], got n={n}, k={k}, beta={beta}")
    half = k // 2
    adj: list[set[int]] = [set() for _ in range(n)]
    for u in range(n):
        for j in range(1, half + 1):
            v = (u + j) % n
            adj[u].add(v)
            adj[v].add(u)
    for j in range(1, half + 1):
        for u in range(n):
            v = (u + j) % n
            if v not in adj[u] or rng.random() >= beta:
                continue
            if len(adj[u]) >= n - 1:
                continue
            w = int(rng.integers(n))
            while w == u or w in adj[u]:
                w = int(rng.integers(n))
            adj[u].discard(v)
            adj[v].discard(u)
            adj[u].add(w)
            adj[w].add(u)
    edges = [(u, v) for u in range(n) for v in adj[u] if u < v]
    return Graph(n, edges)


_MODELS = {"er": erdos_renyi, "erdos_renyi": erdos_renyi, "ba": barabasi_albert,
           "barabasi_albert": barabasi_albert, "ws": watts_strogatz, "watts_strogatz": watts_strogatz}


def parse_model(spec: str) -> tuple[str, tuple]:
    """``"ba:1000,2"`` -> ``("barabasi_albert", (1000, 2))``."""
    try:
        name, _, args = spec.partition(":")
        fn = _MODELS[name.strip().lower()]
        vals = [a.strip() for a in args.split(",") if a.strip()]
        parsed = tuple(int(v) if i < (1 if fn is erdos_renyi else 2) else float(v) for i, v in enumerate(vals))
    except (KeyError, ValueError):
        raise ConfigurationError(f"bad generator spec {spec!r}; expected er:N,P | ba:N,K | ws:N,K,BETA") from None
    expected = 3 if fn is watts_strogatz else 2
    if len(parsed) != expected:
        raise ConfigurationError(f"generator {name!r} takes {expected} parameters, got {len(parsed)}")
    return fn.__name__, parsed


def generate(model: str | tuple, rng_seed: int) -> Graph:
    """Build a synthetic graph, deterministically from ``rng_seed``.

    ``model`` is either a spec string (``"er:100,0.05"``, ``"ba:1000,2"``,
    ``"ws:1000,4,0.1"``) or a ``(name, params)`` tuple.
    """
    from latent_infection.rng import stream

    name, params = parse_model(model) if isinstance(model, str) else model
    fn = _MODELS[name]
    return fn(*params, rng=stream(rng_seed))
