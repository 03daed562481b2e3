import networkx as nx
import numpy as np
import pytest

from latent_infection.graph import Graph, generate, parse_edge_list

# diamond 1-2-4 / 1-3-4 with a tail 4-5-6-7
DIAMOND_TAIL_EDGES = "1 2\n1 3\n2 4\n3 4\n4 5\n5 6\n6 7\n"


def to_nx(g: Graph) -> nx.Graph:
    G = nx.Graph()
    G.add_nodes_from(range(g.n))
    G.add_edges_from(g.edges.tolist())
    return G


def from_nx(G: nx.Graph) -> Graph:
    G = nx.convert_node_labels_to_integers(G)
    return Graph(G.number_of_nodes(), list(G.edges()))


def path_graph(n: int) -> Graph:
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def star_graph(leaves: int) -> Graph:
    return Graph(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def complete_graph(n: int) -> Graph:
    return Graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def cycle_graph(n: int) -> Graph:
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


def mixed_graphs(count: int, seed: int, n_max: int = 200, n_min: int = 10):
    """Seeded mix of connected-ish ER / BA / WS graphs."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        n = int(rng.integers(n_min, n_max + 1))
        kind = k % 3
        if kind == 0:
            p = float(rng.uniform(1.5, 4.0)) / n
            out.append(generate(("erdos_renyi", (n, p)), int(rng.integers(2**31))))
        elif kind == 1:
            out.append(generate(("barabasi_albert", (n, int(rng.integers(1, 4)))), int(rng.integers(2**31))))
        else:
            out.append(generate(("watts_strogatz", (n, 2 * int(rng.integers(1, 4)), float(rng.uniform(0, 0.5)))), int(rng.integers(2**31))))
    return out


@pytest.fixture
def diamond_tail():
    return parse_edge_list(DIAMOND_TAIL_EDGES)


@pytest.fixture(scope="session")
def ba200():
    return generate("ba:200,2", 5)


# -- acceptance summary -----------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def record_acceptance(label: str, status: str, detail: str) -> None:
    line = f"{status:4s}  {label}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
