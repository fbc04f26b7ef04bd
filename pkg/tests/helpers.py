"""Small graph builders shared across the test modules."""

import numpy as np

from chcl.graphs import Graph


def ones(n, f=1):
    return np.ones((n, f))


def complete_graph(n):
    edges = tuple((i, j) for i in range(n) for j in range(i + 1, n))
    return Graph(n=n, edges=edges, features=ones(n))


def cycle_graph(n):
    edges = tuple(sorted((min(i, (i + 1) % n), max(i, (i + 1) % n)) for i in range(n)))
    return Graph(n=n, edges=edges, features=ones(n))


def path_graph(n):
    return Graph(n=n, edges=tuple((i, i + 1) for i in range(n - 1)), features=ones(n))


def edgeless_graph(n):
    return Graph(n=n, edges=(), features=ones(n))


def star_graph(n):
    return Graph(n=n, edges=tuple((0, i) for i in range(1, n)), features=ones(n))


def barbell_k3():
    """Two triangles joined by one bridge edge."""
    edges = ((0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (3, 5), (4, 5))
    return Graph(n=6, edges=edges, features=ones(6))


def figure_eight():
    """Two 4-cycles sharing node 0; first Betti number 2."""
    edges = ((0, 1), (1, 2), (2, 3), (0, 3), (0, 4), (4, 5), (5, 6), (0, 6))
    return Graph(n=7, edges=edges, features=ones(7))


def random_graph(n, p, rng, connected=False):
    """Erdos-Renyi graph; optionally resample until connected."""
    from chcl.graphs import is_connected

    for _ in range(1000):
        edges = tuple(
            (i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p
        )
        g = Graph(n=n, edges=edges, features=ones(n))
        if not connected or is_connected(g):
            return g
    raise RuntimeError("failed to sample a connected graph")
