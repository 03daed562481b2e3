"""Continuous-time SI cascades and partial observations of them."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from latent_infection.errors import ConfigurationError
from latent_infection.graph import Graph, largest_component
from latent_infection.rng import stream

__all__ = ["Cascade", "Observation", "simulate_si", "observe", "stop_count", "observed_count"]


@dataclass(frozen=True)
class Cascade:
    """One realized SI epidemic.

    ``infection_time[v]`` is NaN for nodes that were never infected.
    """

    seed_node: int
    infection_time: np.ndarray
    lam: float

    @property
    def infected(self) -> frozenset[int]:
        return frozenset(np.flatnonzero(~np.isnan(self.infection_time)).tolist())

    @property
    def infected_mask(self) -> np.ndarray:
        return ~np.isnan(self.infection_time)

    def order(self) -> np.ndarray:
        """Infected nodes sorted by infection time (seed first)."""
        idx = np.flatnonzero(self.infected_mask)
        return idx[np.argsort(self.infection_time[idx], kind="stable")]

    def to_csv(self, fh: TextIO, labels: np.ndarray | None = None) -> None:
        fh.write("node,infection_time\n")
        for v in self.order():
            name = int(labels[v]) if labels is not None else int(v)
            fh.write(f"{name},{float(self.infection_time[v])!r}\n")

    @classmethod
    def from_csv(cls, fh: TextIO, g: Graph, lam: float = float("nan")) -> "Cascade":
        """Inverse of :meth:`to_csv`; the node with time 0 is taken as the seed."""
        index = {int(lab): i for i, lab in enumerate(g.labels)}
        header = fh.readline().strip()
        if header != "node,infection_time":
            raise ValueError(f"unexpected cascade header {header!r}")
        times = np.full(g.n, np.nan)
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            node, _, t = line.partition(",")
            try:
                times[index[int(node)]] = float(t)
            except (KeyError, ValueError):
                raise ValueError(f"line {lineno}: bad row {line!r}") from None
        seeds = np.flatnonzero(times == 0.0)
        if len(seeds) != 1:
            raise ValueError("cascade file must contain exactly one node with infection time 0")
        times.setflags(write=False)
        return cls(int(seeds[0]), times, lam)


@dataclass(frozen=True)
class Observation:
    """Partition of the nodes into observed-infected, observed-susceptible and hidden."""

    observed_infected: frozenset[int]
    observed_susceptible: frozenset[int]
    hidden: frozenset[int]

    def __post_init__(self):
        a, b, c = self.observed_infected, self.observed_susceptible, self.hidden
        if a & b or a & c or b & c:
            raise ValueError("observation sets must be disjoint")

    @property
    def n(self) -> int:
        return len(self.observed_infected) + len(self.observed_susceptible) + len(self.hidden)

    @classmethod
    def from_states(cls, n: int, states: dict[int, int]) -> "Observation":
        """Build from ``{node: 1 (infected) | 0 (susceptible)}``; other nodes are hidden."""
        inf = frozenset(v for v, s in states.items() if s)
        sus = frozenset(v for v, s in states.items() if not s)
        hidden = frozenset(range(n)) - inf - sus
        return cls(inf, sus, hidden)

    def to_csv(self, fh: TextIO, labels: np.ndarray | None = None) -> None:
        fh.write("node,state\n")
        rows = [(v, "I") for v in self.observed_infected] + [(v, "S") for v in self.observed_susceptible]
        for v, st in sorted(rows):
            name = int(labels[v]) if labels is not None else v
            fh.write(f"{name},{st}\n")

    @classmethod
    def from_csv(cls, fh: TextIO, g: Graph) -> "Observation":
        index = {int(lab): i for i, lab in enumerate(g.labels)}
        header = fh.readline().strip()
        if header != "node,state":
            raise ValueError(f"unexpected observation header {header!r}")
        states = {}
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            node, _, st = line.partition(",")
            if st not in ("I", "S"):
                raise ValueError(f"line {lineno}: state must be I or S, got {st!r}")
            try:
                states[index[int(node)]] = 1 if st == "I" else 0
            except (KeyError, ValueError):
                raise ValueError(f"line {lineno}: unknown node {node!r}") from None
        return cls.from_states(g.n, states)


def stop_count(n: int, stop_fraction: float) -> int:
    # the 1e-9 guard keeps e.g. 0.1 * 100 = 10.000000000000002 from rounding up to 11
    return max(1, math.ceil(stop_fraction * n - 1e-9))


def observed_count(n: int, observed_fraction: float) -> int:
    # half-up rounding
    return int(math.floor(observed_fraction * n + 0.5))


def simulate_si(
    g: Graph,
    lam: float,
    stop_fraction: float,
    rng_seed: int | np.random.Generator,
    seed_node: int | None = None,
) -> Cascade:
    """Run an SI epidemic until ``ceil(stop_fraction * n)`` nodes are infected.

    Every infected-susceptible edge fires after an independent Exp(``lam``)
    delay. The source is drawn uniformly from the largest connected
    component unless ``seed_node`` is given.
    """
    if not lam > 0:
        raise ConfigurationError(f"infection rate must be positive, got {lam}")
    if not 0.0 < stop_fraction <= 1.0:
        raise ConfigurationError(f"stop_fraction must be in (0, 1], got {stop_fraction}")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else stream(rng_seed)
    target = stop_count(g.n, stop_fraction)
    lcc = largest_component(g)
    if seed_node is None:
        if len(lcc) < target:
            raise ConfigurationError(
                f"largest component has {len(lcc)} nodes but {target} infections were requested"
            )
        seed_node = int(lcc[int(rng.integers(len(lcc)))])
    times = np.full(g.n, np.nan)
    times[seed_node] = 0.0
    infected = 1
    queue: list[tuple[float, int]] = []
    scale = 1.0 / lam

    def expose(u: int, t: int):
        nb = g.neighbors(u)
        nb = nb[np.isnan(times[nb])]
        if len(nb):
            for v, dt in zip(nb.tolist(), rng.exponential(scale, size=len(nb)).tolist()):
                heapq.heappush(queue, (t + dt, v))

    expose(seed_node, 0.0)
    while infected < target and queue:
        t, v = heapq.heappop(queue)
        if not np.isnan(times[v]):
            continue
        times[v] = t
        infected += 1
        expose(v, t)
    if infected < target:
        raise ConfigurationError(
            f"cascade from node {seed_node} died out at {infected} of {target} infections"
        )
    times.setflags(write=False)
    return Cascade(int(seed_node), times, float(lam))


def observe(
    c: Cascade,
    g: Graph,
    observed_fraction: float,
    rng_seed: int | np.random.Generator,
) -> Observation:
    """Reveal the true state of ``round(observed_fraction * n)`` nodes chosen uniformly.

    The sample is the prefix of one random permutation, so for a fixed seed
    the observed sets are nested as the fraction grows.
    """
    if not 0.0 <= observed_fraction <= 1.0:
        raise ConfigurationError(f"observed_fraction must be in [0, 1], got {observed_fraction}")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else stream(rng_seed)
    k = observed_count(g.n, observed_fraction)
    chosen = rng.permutation(g.n)[:k]
    mask = c.infected_mask
    inf = frozenset(int(v) for v in chosen if mask[v])
    sus = frozenset(int(v) for v in chosen if not mask[v])
    hidden = frozenset(range(g.n)) - inf - sus
    return Observation(inf, sus, hidden)
