"""Run configuration: an INI file with one section per concern.

Example::

    [network.ba]
    source = ba:1000,2
    graph_seed = 7

    [network.yeast]
    source = yeast.txt

    [simulation]
    lambda = 0.5
    stop_fraction = 0.1
    observed_fractions = 0.05, 0.1, 0.15, 0.2, 0.25
    alpha = 0.01
    n_train_runs = 30
    n_test_runs = 70

    [classification]
    classifiers = gnb, nbk, c45, random(0.1)
    features = D, R, Cb, Cc, Ce, P
    centrality_graph = original

    [run]
    master_seed = 0
    output = results
    jobs = 1

Relative file sources are looked up in the working directory first, then
in ``$LATENT_INFECTION_DATA``.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import os
from dataclasses import dataclass, replace
from pathlib import Path

from latent_infection.errors import ConfigurationError
from latent_infection.evaluation import DEFAULT_CLASSIFIERS, DEFAULT_FRACTIONS, Protocol
from latent_infection.features import FEATURE_NAMES
from latent_infection.graph import _MODELS, Graph, generate, parse_edge_list

DATA_ENV = "LATENT_INFECTION_DATA"


@dataclass(frozen=True)
class NetworkSource:
    name: str
    source: str
    graph_seed: int = 0

    @property
    def is_generated(self) -> bool:
        head = self.source.partition(":")[0].strip().lower()
        return ":" in self.source and head in _MODELS

    def load(self) -> Graph:
        return load_network(self.source, self.graph_seed)


def resolve_path(source: str) -> Path:
    p = Path(source).expanduser()
    if p.exists() or p.is_absolute():
        return p
    base = os.environ.get(DATA_ENV)
    if base and (Path(base) / p).exists():
        return Path(base) / p
    return p


def load_network(source: str, graph_seed: int = 0) -> Graph:
    """A generator spec (``ba:1000,2``) or an edge-list path."""
    head = source.partition(":")[0].strip().lower()
    if ":" in source and head in _MODELS:
        return generate(source, graph_seed)
    path = resolve_path(source)
    if not path.exists():
        raise FileNotFoundError(f"network file not found: {source}")
    with open(path, encoding="utf-8") as fh:
        return parse_edge_list(fh)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _names(text: str) -> tuple[str, ...]:
    # split on commas outside parentheses
    out, depth, cur = [], 0, ""
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            out.append(cur.strip())
            cur = ""
        else:
            cur += ch
    if cur.strip():
        out.append(cur.strip())
    return tuple(out)


@dataclass(frozen=True)
class RunConfig:
    networks: tuple[NetworkSource, ...] = ()
    lam: float = 0.5
    stop_fraction: float = 0.10
    observed_fractions: tuple[float, ...] = DEFAULT_FRACTIONS
    alpha: float = 0.01
    n_train_runs: int = 30
    n_test_runs: int = 70
    classifiers: tuple[str, ...] = DEFAULT_CLASSIFIERS
    features: tuple[str, ...] = FEATURE_NAMES
    centrality_graph: str = "original"
    master_seed: int = 0
    output: str = "results"
    jobs: int = 1

    def __post_init__(self):
        if not self.lam > 0:
            raise ConfigurationError("lambda must be positive")
        if not 0 < self.stop_fraction <= 1:
            raise ConfigurationError("stop_fraction must be in (0, 1]")
        if any(not 0 < f < 1 for f in self.observed_fractions) or not self.observed_fractions:
            raise ConfigurationError("observed_fractions must be non-empty and inside (0, 1)")
        if self.alpha < 0:
            raise ConfigurationError("alpha must be non-negative")
        if self.n_train_runs < 1 or self.n_test_runs < 1:
            raise ConfigurationError("run counts must be positive")
        if set(self.features) - set(FEATURE_NAMES) or not self.features:
            raise ConfigurationError(f"features must be a non-empty subset of {FEATURE_NAMES}")
        if self.centrality_graph not in ("original", "reduced"):
            raise ConfigurationError("centrality_graph must be 'original' or 'reduced'")
        if self.master_seed < 0:
            raise ConfigurationError("master_seed must be non-negative")
        if self.jobs < 1:
            raise ConfigurationError("jobs must be at least 1")
        names = [n.name for n in self.networks]
        if len(set(names)) != len(names):
            raise ConfigurationError("duplicate network names")

    def protocol(self, observed_fraction: float) -> Protocol:
        return Protocol(
            lam=self.lam,
            stop_fraction=self.stop_fraction,
            observed_fraction=observed_fraction,
            alpha=self.alpha,
            n_train_runs=self.n_train_runs,
            n_test_runs=self.n_test_runs,
            classifiers=self.classifiers,
            features=self.features,
            centrality_graph=self.centrality_graph,
        )

    # -- INI round trip --------------------------------------------------

    @classmethod
    def from_ini(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigurationError(f"malformed config: {exc}") from exc
        kw: dict = {}
        nets = []
        try:
            for sec in cp.sections():
                if sec.startswith("network."):
                    s = cp[sec]
                    nets.append(NetworkSource(sec[len("network.") :], s["source"], s.getint("graph_seed", 0)))
            if cp.has_section("simulation"):
                s = cp["simulation"]
                conv = {
                    "lambda": ("lam", float),
                    "stop_fraction": ("stop_fraction", float),
                    "observed_fractions": ("observed_fractions", _floats),
                    "alpha": ("alpha", float),
                    "n_train_runs": ("n_train_runs", int),
                    "n_test_runs": ("n_test_runs", int),
                }
                kw.update(_convert(s, conv, "simulation"))
            if cp.has_section("classification"):
                conv = {
                    "classifiers": ("classifiers", _names),
                    "features": ("features", _names),
                    "centrality_graph": ("centrality_graph", str.strip),
                }
                kw.update(_convert(cp["classification"], conv, "classification"))
            if cp.has_section("run"):
                conv = {
                    "master_seed": ("master_seed", int),
                    "output": ("output", str.strip),
                    "jobs": ("jobs", int),
                }
                kw.update(_convert(cp["run"], conv, "run"))
        except (KeyError, ValueError) as exc:
            raise ConfigurationError(f"bad config value: {exc}") from exc
        unknown = [s for s in cp.sections() if not s.startswith("network.") and s not in ("simulation", "classification", "run")]
        if unknown:
            raise ConfigurationError(f"unknown config sections {unknown}")
        return cls(networks=tuple(nets), **kw)

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        for net in self.networks:
            cp[f"network.{net.name}"] = {"source": net.source, "graph_seed": str(net.graph_seed)}
        cp["simulation"] = {
            "lambda": repr(self.lam),
            "stop_fraction": repr(self.stop_fraction),
            "observed_fractions": ", ".join(repr(f) for f in self.observed_fractions),
            "alpha": repr(self.alpha),
            "n_train_runs": str(self.n_train_runs),
            "n_test_runs": str(self.n_test_runs),
        }
        cp["classification"] = {
            "classifiers": ", ".join(self.classifiers),
            "features": ", ".join(self.features),
            "centrality_graph": self.centrality_graph,
        }
        cp["run"] = {"master_seed": str(self.master_seed), "output": self.output, "jobs": str(self.jobs)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def digest(self) -> str:
        """Hash of everything that affects results (output location and job count excluded)."""
        canon = replace(self, output="", jobs=1).to_ini()
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _convert(section, conv: dict, where: str) -> dict:
    out = {}
    for key, raw in section.items():
        if key not in conv:
            raise ConfigurationError(f"unknown key {key!r} in [{where}]")
        attr, fn = conv[key]
        out[attr] = fn(raw)
    return out
