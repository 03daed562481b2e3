"""Pruning of provably susceptible nodes and vertex-separator checks.

Under single-source SI spread the infected set is connected and never
contains an observed-susceptible node. Deleting the observed-susceptible
nodes therefore leaves every infected node inside the one component that
holds the observed infected nodes; hidden nodes anywhere else are certainly
susceptible.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from latent_infection.cascade import Observation
from latent_infection.errors import InconsistentObservationError
from latent_infection.graph import Graph, components

__all__ = ["ReducedGraph", "reduce_property1", "is_separator"]


@dataclass(frozen=True)
class ReducedGraph:
    graph: Graph
    to_original: np.ndarray
    deterministic_susceptible: frozenset[int]
    retained_observed_infected: frozenset[int]
    no_anchor: bool = False

    def from_original(self, n_original: int) -> np.ndarray:
        """Array mapping original ids to reduced ids (-1 where pruned)."""
        out = np.full(n_original, -1, dtype=np.int64)
        out[self.to_original] = np.arange(len(self.to_original))
        return out

    def verdicts(self, obs: Observation, n_original: int) -> list[str]:
        out = ["kept"] * n_original
        for v in self.deterministic_susceptible:
            out[v] = "det_susceptible"
        for v in obs.observed_susceptible:
            out[v] = "observed_susceptible"
        return out

    def to_csv(self, fh: TextIO, obs: Observation, labels: np.ndarray) -> None:
        fh.write("node,verdict\n")
        for v, verdict in enumerate(self.verdicts(obs, len(labels))):
            fh.write(f"{int(labels[v])},{verdict}\n")


def reduce_property1(g: Graph, obs: Observation) -> ReducedGraph:
    """Remove observed-susceptible nodes and keep only the component holding
    the observed infected nodes.

    Hidden nodes in the discarded components are returned as
    ``deterministic_susceptible``. With no observed infected node there is
    nothing to anchor on: every component of ``g - S_o`` is kept and
    ``no_anchor`` is set.

    Raises
    ------
    InconsistentObservationError
        If the observed infected nodes fall in two or more components of
        ``g - S_o``, which no single-source SI cascade can produce.
    """
    remaining = np.ones(g.n, dtype=bool)
    remaining[list(obs.observed_susceptible)] = False
    sub, sub_to_g = g.subgraph(np.flatnonzero(remaining))

    if not obs.observed_infected:
        return ReducedGraph(sub, sub_to_g, frozenset(), frozenset(), no_anchor=True)

    g_to_sub = np.full(g.n, -1, dtype=np.int64)
    g_to_sub[sub_to_g] = np.arange(sub.n)
    comp_id = np.empty(sub.n, dtype=np.int64)
    for k, comp in enumerate(components(sub)):
        comp_id[comp] = k
    anchors = {int(comp_id[g_to_sub[v]]) for v in obs.observed_infected}
    if len(anchors) > 1:
        raise InconsistentObservationError(
            f"observed infected nodes span {len(anchors)} components after removing observed susceptible nodes"
        )
    (anchor,) = anchors
    keep_sub = comp_id == anchor
    keep = sub_to_g[keep_sub]
    pruned = sub_to_g[~keep_sub]
    det_sus = frozenset(int(v) for v in pruned) - obs.observed_susceptible

    red, red_to_sub = sub.subgraph(np.flatnonzero(keep_sub))
    to_original = sub_to_g[red_to_sub]
    assert np.array_equal(to_original, keep)
    back = np.full(g.n, -1, dtype=np.int64)
    back[to_original] = np.arange(len(to_original))
    retained = frozenset(int(back[v]) for v in obs.observed_infected)
    return ReducedGraph(red, to_original, det_sus, retained)


def is_separator(g: Graph, s, i: int, j: int) -> bool:
    """True iff deleting the node set ``s`` leaves no path between ``i`` and ``j``."""
    if i == j:
        raise ValueError("i and j must differ")
    blocked = np.zeros(g.n, dtype=bool)
    blocked[list(s)] = True
    if blocked[i] or blocked[j]:
        raise ValueError("endpoints must not be in the separator")
    seen = blocked.copy()
    seen[i] = True
    todo = deque([i])
    while todo:
        u = todo.popleft()
        for v in g.neighbors(u).tolist():
            if v == j:
                return False
            if not seen[v]:
                seen[v] = True
                todo.append(v)
    return True
