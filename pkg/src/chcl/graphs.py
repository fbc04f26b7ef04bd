"""Graph containers, dataset IO, and the stochastic view augmentations.

Graphs are simple and undirected: edges are canonical ``(u, v)`` pairs with
``u < v``, deduplicated, never self-loops.  Every graph carries a dense node
feature matrix (defaulting to the all-ones column when a file provides none)
and an optional integer class label.

Two augmentations generate contrastive views: independent per-edge dropping
and independent per-entry feature masking.  Both are pure functions of
``(graph, probability, seed)`` and are bit-reproducible across platforms
(numpy ``SeedSequence`` / PCG64 streams).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Graph",
    "AugmentConfig",
    "GraphDataset",
    "load_edge_list",
    "save_edge_list",
    "load_tu",
    "augment_edge_drop",
    "augment_feature_mask",
    "make_view",
    "is_connected",
    "connected_component_count",
]


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected graph with node features and an optional class label.

    Invariants enforced at construction: ``n >= 1``; every edge is ``(u, v)``
    with ``0 <= u < v < n``, no duplicates; ``features`` is a finite
    ``(n, F)`` float matrix with ``F >= 1``.  Instances are immutable and safe
    to share across workers.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    features: np.ndarray
    label: int | None = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"graph needs at least one node, got n={self.n}")
        canon = []
        for e in self.edges:
            u, v = int(e[0]), int(e[1])
            if u == v:
                raise ValueError(f"self-loop ({u},{v}) is not allowed")
            if u > v:
                raise ValueError(f"edge ({u},{v}) must be stored with u < v")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u},{v}) out of range for n={self.n}")
            canon.append((u, v))
        canon_sorted = tuple(sorted(canon))
        if len(set(canon_sorted)) != len(canon_sorted):
            raise ValueError("duplicate edges are not allowed")
        object.__setattr__(self, "edges", canon_sorted)

        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim != 2 or feats.shape[0] != self.n or feats.shape[1] < 1:
            raise ValueError(
                f"features must be ({self.n}, F>=1), got shape {feats.shape}"
            )
        if not np.all(np.isfinite(feats)):
            raise ValueError("features must be finite")
        feats = feats.copy()
        feats.setflags(write=False)
        object.__setattr__(self, "features", feats)
        if self.label is not None:
            object.__setattr__(self, "label", int(self.label))

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.float64)
        for u, v in self.edges:
            a[u, v] = 1.0
            a[v, u] = 1.0
        return a

    def neighbor_sets(self) -> list[set[int]]:
        nbrs: list[set[int]] = [set() for _ in range(self.n)]
        for u, v in self.edges:
            nbrs[u].add(v)
            nbrs[v].add(u)
        return nbrs

    def relabel(self, perm: np.ndarray) -> "Graph":
        """Return the graph with node ``i`` renamed to ``perm[i]``."""
        perm = np.asarray(perm, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(self.n)):
            raise ValueError("perm must be a permutation of 0..n-1")
        edges = tuple(
            (min(int(perm[u]), int(perm[v])), max(int(perm[u]), int(perm[v])))
            for u, v in self.edges
        )
        feats = np.empty_like(self.features)
        feats[perm] = self.features
        return Graph(n=self.n, edges=edges, features=feats, label=self.label)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n == other.n
            and self.edges == other.edges
            and self.label == other.label
            and np.array_equal(self.features, other.features)
        )

    def __repr__(self) -> str:
        return (
            f"Graph(n={self.n}, m={self.m}, F={self.feature_dim}, "
            f"label={self.label})"
        )


@dataclass(frozen=True)
class AugmentConfig:
    """Probabilities and seed for the two-step view augmentation."""

    p_edge: float
    p_feat: float
    seed: int

    def __post_init__(self) -> None:
        for name in ("p_edge", "p_feat"):
            p = getattr(self, name)
            if not (0.0 <= p <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass
class GraphDataset:
    """Ordered list of graphs sharing one feature dimension."""

    graphs: list[Graph]
    name: str = ""

    def __post_init__(self) -> None:
        dims = {g.feature_dim for g in self.graphs}
        if len(dims) > 1:
            raise ValueError(f"graphs disagree on feature dimension: {sorted(dims)}")

    def __len__(self) -> int:
        return len(self.graphs)

    def __getitem__(self, idx: int) -> Graph:
        return self.graphs[idx]

    def __iter__(self):
        return iter(self.graphs)

    @property
    def feature_dim(self) -> int:
        if not self.graphs:
            raise ValueError("empty dataset has no feature dimension")
        return self.graphs[0].feature_dim

    def labels(self) -> np.ndarray:
        if any(g.label is None for g in self.graphs):
            raise ValueError("dataset contains unlabeled graphs")
        return np.asarray([g.label for g in self.graphs], dtype=np.int64)


# ---------------------------------------------------------------------------
# Edge-list file format
#
#   # graph <id> [label=<int>]
#   n <node count>
#   f <F>              (optional; followed by n rows of F floats)
#   e <u> <v>          (one line per edge)
#
# Blocks repeat, one per graph.  Missing feature block means all-ones (n, 1).
# ---------------------------------------------------------------------------

_GRAPH_HEADER = re.compile(r"^#\s*graph\s+(\S+)(?:\s+label=(-?\d+))?\s*$")


class EdgeListParseError(ValueError):
    pass


def load_edge_list(path: str | Path) -> GraphDataset:
    """Parse an edge-list dataset file.

    Raises :class:`EdgeListParseError` with a line number on malformed input,
    out-of-range node ids, self-loops, or duplicate edges.  An empty file
    yields an empty dataset.
    """
    path = Path(path)
    lines = path.read_text().splitlines()
    graphs: list[Graph] = []

    i = 0
    nlines = len(lines)

    def err(lineno: int, msg: str) -> EdgeListParseError:
        return EdgeListParseError(f"{msg}, line {lineno}")

    while i < nlines:
        raw = lines[i].strip()
        if not raw:
            i += 1
            continue
        header = _GRAPH_HEADER.match(raw)
        if header is None:
            raise err(i + 1, f"expected '# graph <id>' header, got {raw!r}")
        label = int(header.group(2)) if header.group(2) is not None else None
        i += 1

        # n <count>
        while i < nlines and not lines[i].strip():
            i += 1
        if i >= nlines or not lines[i].strip().startswith("n "):
            raise err(i + 1, "expected 'n <count>' after graph header")
        try:
            n = int(lines[i].strip().split()[1])
        except (IndexError, ValueError):
            raise err(i + 1, "malformed node count") from None
        if n < 1:
            raise err(i + 1, f"node count must be >= 1, got {n}")
        i += 1

        # optional feature block
        features: np.ndarray | None = None
        while i < nlines and not lines[i].strip():
            i += 1
        if i < nlines and lines[i].strip().startswith("f "):
            try:
                fdim = int(lines[i].strip().split()[1])
            except (IndexError, ValueError):
                raise err(i + 1, "malformed feature dimension") from None
            if fdim < 1:
                raise err(i + 1, f"feature dimension must be >= 1, got {fdim}")
            i += 1
            rows = []
            for r in range(n):
                if i >= nlines:
                    raise err(i, f"expected {n} feature rows, got {r}")
                parts = lines[i].strip().split()
                if len(parts) != fdim:
                    raise err(i + 1, f"expected {fdim} feature values")
                try:
                    rows.append([float(p) for p in parts])
                except ValueError:
                    raise err(i + 1, "malformed feature value") from None
                i += 1
            features = np.asarray(rows, dtype=np.float64)
        if features is None:
            features = np.ones((n, 1), dtype=np.float64)

        # edge lines until next graph header / EOF
        edges: list[tuple[int, int]] = []
        seen: set[tuple[int, int]] = set()
        while i < nlines:
            raw = lines[i].strip()
            if not raw:
                i += 1
                continue
            if raw.startswith("#"):
                break
            if not raw.startswith("e "):
                raise err(i + 1, f"expected 'e <u> <v>' edge line, got {raw!r}")
            parts = raw.split()
            try:
                u, v = int(parts[1]), int(parts[2])
            except (IndexError, ValueError):
                raise err(i + 1, "malformed edge line") from None
            if u == v:
                raise err(i + 1, f"self-loop ({u},{v}) rejected")
            if not (0 <= u < n and 0 <= v < n):
                raise err(i + 1, "node id out of range")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise err(i + 1, f"duplicate edge ({key[0]},{key[1]}) rejected")
            seen.add(key)
            edges.append(key)
            i += 1

        graphs.append(Graph(n=n, edges=tuple(edges), features=features, label=label))

    return GraphDataset(graphs=graphs, name=path.stem)


def save_edge_list(dataset: GraphDataset, path: str | Path) -> None:
    """Serialize a dataset in the edge-list format (full float precision).

    The all-ones single-column default feature matrix is omitted on write, so
    load(save(d)) == d holds for generated and loaded datasets alike.
    """
    path = Path(path)
    out: list[str] = []
    for gid, g in enumerate(dataset.graphs):
        head = f"# graph {gid}"
        if g.label is not None:
            head += f" label={g.label}"
        out.append(head)
        out.append(f"n {g.n}")
        default_feats = g.feature_dim == 1 and np.all(g.features == 1.0)
        if not default_feats:
            out.append(f"f {g.feature_dim}")
            for row in g.features:
                out.append(" ".join(f"{x:.17g}" for x in row))
        for u, v in g.edges:
            out.append(f"e {u} {v}")
    path.write_text("\n".join(out) + ("\n" if out else ""))


def load_tu(directory: str | Path, prefix: str | None = None) -> GraphDataset:
    """Load a dataset in the standard four-file TU layout.

    Expects ``<prefix>_A.txt`` (1-based global node pairs), ``<prefix>_graph_
    indicator.txt``, ``<prefix>_graph_labels.txt``, and optionally
    ``<prefix>_node_labels.txt`` (one-hot encoded as features; all-ones
    otherwise).  The symmetric duplicate each undirected edge usually gets in
    ``_A.txt`` is folded into one canonical pair; self-loops are rejected.
    """
    directory = Path(directory)
    if prefix is None:
        prefix = directory.name
    base = directory / prefix

    indicator = np.loadtxt(f"{base}_graph_indicator.txt", dtype=np.int64, ndmin=1)
    glabels = np.loadtxt(f"{base}_graph_labels.txt", dtype=np.int64, ndmin=1)
    n_graphs = int(indicator.max())
    if len(glabels) != n_graphs:
        raise ValueError(
            f"graph_labels has {len(glabels)} rows but indicator names "
            f"{n_graphs} graphs"
        )

    # global node id (1-based) -> (graph index, local id)
    local_of = np.zeros(len(indicator), dtype=np.int64)
    counts = np.zeros(n_graphs, dtype=np.int64)
    for node, gid in enumerate(indicator):
        local_of[node] = counts[gid - 1]
        counts[gid - 1] += 1

    pairs = np.loadtxt(f"{base}_A.txt", dtype=np.int64, delimiter=",", ndmin=2)
    edge_sets: list[set[tuple[int, int]]] = [set() for _ in range(n_graphs)]
    for u_g, v_g in pairs:
        if u_g == v_g:
            raise ValueError(f"self-loop on global node {u_g} rejected")
        gu, gv = indicator[u_g - 1], indicator[v_g - 1]
        if gu != gv:
            raise ValueError(f"edge ({u_g},{v_g}) crosses graphs {gu} and {gv}")
        u, v = int(local_of[u_g - 1]), int(local_of[v_g - 1])
        edge_sets[gu - 1].add((min(u, v), max(u, v)))

    node_label_path = Path(f"{base}_node_labels.txt")
    features_per_graph: list[np.ndarray]
    if node_label_path.exists():
        nlabels = np.loadtxt(node_label_path, dtype=np.int64, ndmin=1)
        classes = np.unique(nlabels)
        col = {int(c): j for j, c in enumerate(classes)}
        features_per_graph = []
        for gid in range(1, n_graphs + 1):
            mask = indicator == gid
            feats = np.zeros((int(counts[gid - 1]), len(classes)))
            for node in np.nonzero(mask)[0]:
                feats[local_of[node], col[int(nlabels[node])]] = 1.0
            features_per_graph.append(feats)
    else:
        features_per_graph = [
            np.ones((int(c), 1), dtype=np.float64) for c in counts
        ]

    graphs = [
        Graph(
            n=int(counts[g]),
            edges=tuple(sorted(edge_sets[g])),
            features=features_per_graph[g],
            label=int(glabels[g]),
        )
        for g in range(n_graphs)
    ]
    return GraphDataset(graphs=graphs, name=prefix)


# ---------------------------------------------------------------------------
# Augmentations
# ---------------------------------------------------------------------------


def _rng(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


def augment_edge_drop(g: Graph, p_edge: float, seed: int) -> Graph:
    """Drop each undirected edge independently with probability ``p_edge``.

    One Bernoulli draw per undirected edge, so the symmetric pair is kept or
    dropped atomically.  Nodes and features are untouched; the same seed gives
    a bit-identical result.
    """
    if not (0.0 <= p_edge <= 1.0):
        raise ValueError(f"p_edge must lie in [0, 1], got {p_edge}")
    if p_edge == 0.0 or g.m == 0:
        return g
    keep = _rng(seed, 0).random(g.m) >= p_edge
    edges = tuple(e for e, k in zip(g.edges, keep) if k)
    return Graph(n=g.n, edges=edges, features=g.features, label=g.label)


def augment_feature_mask(g: Graph, p_feat: float, seed: int) -> Graph:
    """Zero each feature entry independently with probability ``p_feat``."""
    if not (0.0 <= p_feat <= 1.0):
        raise ValueError(f"p_feat must lie in [0, 1], got {p_feat}")
    if p_feat == 0.0:
        return g
    mask = _rng(seed, 1).random(g.features.shape) >= p_feat
    feats = np.where(mask, g.features, 0.0)
    return Graph(n=g.n, edges=g.edges, features=feats, label=g.label)


def make_view(g: Graph, config: AugmentConfig) -> Graph:
    """Apply edge dropping then feature masking with sub-seeds split off
    ``config.seed`` so the two draws are independent."""
    ss = np.random.SeedSequence(entropy=int(config.seed))
    edge_seed, feat_seed = ss.generate_state(2, dtype=np.uint64)
    view = augment_edge_drop(g, config.p_edge, int(edge_seed))
    return augment_feature_mask(view, config.p_feat, int(feat_seed))


# ---------------------------------------------------------------------------
# Connectivity (union-find; used as the structural oracle for lambda2)
# ---------------------------------------------------------------------------


def _union_find_roots(g: Graph) -> np.ndarray:
    parent = np.arange(g.n, dtype=np.int64)

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for u, v in g.edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    return np.asarray([find(i) for i in range(g.n)], dtype=np.int64)


def connected_component_count(g: Graph) -> int:
    return len(set(_union_find_roots(g).tolist()))


def is_connected(g: Graph) -> bool:
    return connected_component_count(g) == 1
