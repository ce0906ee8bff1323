import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pathmpnn.molgraph import FeaturizerConfig, MoleculeRecord, build_graph

settings.register_profile(
    "suite", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("suite")


@pytest.fixture
def probe_graph():
    """Five heavy atoms with a branch and generic 3D coordinates."""
    record = MoleculeRecord(
        id="probe",
        elements=("C", "C", "O", "N", "C"),
        bonds=((0, 1, "single"), (1, 2, "single"), (2, 3, "double"), (1, 4, "single")),
        targets=(1.0, -0.5),
        coords=np.array([
            [0.0, 0.0, 0.0],
            [1.5, 0.1, -0.2],
            [2.2, 1.4, 0.3],
            [3.6, 1.5, -0.4],
            [1.9, -1.2, 0.5],
        ]),
    )
    return build_graph(record, FeaturizerConfig(("C", "N", "O")))


class AdjacencyGraph:
    """Bare graph for the path engine: just n and adjacency."""

    def __init__(self, n, edges):
        self.n = n
        adj = [set() for _ in range(n)]
        for u, v in edges:
            adj[u].add(v)
            adj[v].add(u)
        self.adjacency = tuple(tuple(sorted(s)) for s in adj)


@pytest.fixture
def path4():
    return AdjacencyGraph(4, [(0, 1), (1, 2), (2, 3)])


@pytest.fixture
def k4():
    return AdjacencyGraph(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])


def random_graph(rng, n, p):
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return AdjacencyGraph(n, edges)
