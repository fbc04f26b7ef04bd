"""Clique-triangle enumeration, oriented incidence matrices, and the
1-Hodge Laplacian on the edge space.

The 2-complex is always the clique complex: every 3-clique of the graph is a
filled triangle.  Edges carry the canonical orientation u -> v with u < v;
each sorted triangle (a, b, c) is traversed a -> b -> c -> a, which matches
the edge orientation on (a, b) and (b, c) and opposes it on (a, c).  Only
spectral quantities are contractual; the sign convention itself is not
(flipping any single orientation leaves the spectrum unchanged).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graphs import Graph
from .spectral import SymMatrix, smallest_eigenvalues

__all__ = [
    "HodgeComplex",
    "enumerate_triangles",
    "incidence_b1",
    "incidence_b2",
    "incidence_coo_text",
    "hodge_laplacian_1",
    "hodge_spectrum",
]


def enumerate_triangles(g: Graph) -> list[tuple[int, int, int]]:
    """All 3-cliques (a, b, c) with a < b < c, in lexicographic order.

    Forward/edge-iterator enumeration: intersect the sorted higher-numbered
    neighbor lists of each edge's endpoints, O(m^{3/2})-ish on sparse graphs.
    """
    above: list[set[int]] = [set() for _ in range(g.n)]
    for u, v in g.edges:
        above[u].add(v)
    out: list[tuple[int, int, int]] = []
    for u, v in g.edges:  # edges are canonically sorted, so output is lex
        common = above[u] & above[v]
        for w in sorted(common):
            out.append((u, v, w))
    return out


def incidence_b1(g: Graph) -> sp.csc_matrix:
    """Signed node-edge incidence matrix, shape (n, m), int64 entries.

    Column e for edge (u, v) holds -1 at row u and +1 at row v.
    """
    m = g.m
    rows = np.empty(2 * m, dtype=np.int64)
    cols = np.empty(2 * m, dtype=np.int64)
    data = np.empty(2 * m, dtype=np.int64)
    for e, (u, v) in enumerate(g.edges):
        rows[2 * e], cols[2 * e], data[2 * e] = u, e, -1
        rows[2 * e + 1], cols[2 * e + 1], data[2 * e + 1] = v, e, 1
    return sp.csc_matrix((data, (rows, cols)), shape=(g.n, m), dtype=np.int64)


def incidence_b2(
    g: Graph, triangles: list[tuple[int, int, int]] | None = None
) -> sp.csc_matrix:
    """Signed edge-triangle incidence matrix, shape (m, T), int64 entries.

    Column t for triangle (a, b, c) holds +1 on edges (a, b) and (b, c) and
    -1 on edge (a, c); triangle columns follow the enumeration order.
    """
    if triangles is None:
        triangles = enumerate_triangles(g)
    edge_index = {e: i for i, e in enumerate(g.edges)}
    rows, cols, data = [], [], []
    for t, (a, b, c) in enumerate(triangles):
        for pair, sign in (((a, b), 1), ((b, c), 1), ((a, c), -1)):
            try:
                rows.append(edge_index[pair])
            except KeyError:
                raise ValueError(
                    f"triangle {(a, b, c)} references non-edge {pair}"
                ) from None
            cols.append(t)
            data.append(sign)
    return sp.csc_matrix(
        (data, (rows, cols)), shape=(g.m, len(triangles)), dtype=np.int64
    )


@dataclass
class HodgeComplex:
    """Clique complex of a graph with its two boundary operators."""

    edge_order: tuple[tuple[int, int], ...]
    triangles: tuple[tuple[int, int, int], ...]
    b1: sp.csc_matrix
    b2: sp.csc_matrix

    @classmethod
    def from_graph(cls, g: Graph) -> "HodgeComplex":
        tri = enumerate_triangles(g)
        return cls(
            edge_order=g.edges,
            triangles=tuple(tri),
            b1=incidence_b1(g),
            b2=incidence_b2(g, tri),
        )

    def chain_identity_holds(self) -> bool:
        """B1 @ B2 == 0 in exact integer arithmetic."""
        prod = self.b1 @ self.b2
        return prod.nnz == 0 or not np.any(prod.data)

    def laplacian(self) -> SymMatrix:
        if len(self.edge_order) == 0:
            raise ValueError("empty edge set")
        lap = (self.b1.T @ self.b1 + self.b2 @ self.b2.T).astype(np.float64)
        return SymMatrix.from_scipy(lap)


def hodge_laplacian_1(g: Graph) -> SymMatrix:
    """1-Hodge Laplacian ``B1^T B1 + B2 B2^T`` of the clique complex, (m, m).

    Raises on an empty edge set; callers that must tolerate edgeless views
    (signature padding) should use :func:`hodge_spectrum` instead.
    """
    if g.m == 0:
        raise ValueError("empty edge set")
    return HodgeComplex.from_graph(g).laplacian()


def incidence_coo_text(matrix: sp.spmatrix) -> str:
    """Coordinate text dump: one ``row col value`` line per nonzero, sorted
    by (row, col).  Debugging format for the incidence matrices."""
    coo = matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    lines = [
        f"{coo.row[i]} {coo.col[i]} {coo.data[i]}"
        for i in order
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def hodge_spectrum(g: Graph, dim_hodge: int) -> np.ndarray:
    """The ``min(dim_hodge, m)`` smallest eigenvalues of L1, ascending and
    clipped at 0, zero-padded on the right to length ``dim_hodge``.

    An edgeless graph yields all zeros (aggressive augmentation can empty the
    edge set mid-training, and the padding keeps downstream shapes fixed).
    """
    if dim_hodge < 1:
        raise ValueError(f"dim_hodge must be >= 1, got {dim_hodge}")
    if g.m == 0:
        return np.zeros(dim_hodge)
    k = min(dim_hodge, g.m)
    spec = smallest_eigenvalues(hodge_laplacian_1(g), k)
    vals = np.maximum(spec.eigenvalues, 0.0)
    if k < dim_hodge:
        vals = np.concatenate([vals, np.zeros(dim_hodge - k)])
    return vals
