"""Downstream evaluation: linear probing, robustness sweeps, and the
synthetic benchmark generators.

The synthetic benchmark is a 4-class grid crossing global connectivity with
triangle content:

* class 0 ("expander, triangle-rich"): cycle plus a random perfect matching,
  with wedge-closing chords,
* class 1 ("expander, triangle-free"): the same base family with equally
  many chords placed so that no two endpoints share a neighbor,
* class 2 ("barbell, triangle-rich"): two dense triangle-rich communities
  joined by at most two bridges,
* class 3 ("barbell, triangle-free"): near-complete-bipartite communities of
  matched size and edge count, same bridge count.

Classes are paired on purpose: 0/1 share the base graph and edge count per
instance, 2/3 share sizes, per-community edge counts, and bridge counts, so
neither the connectivity branch nor the triangle branch of the signature can
separate the full grid alone.  Triangle-free instances keep enough
independent cycles that their low Hodge spectrum is identically zero, and
the barbell classes have conductance at most 2/vol, pinning their algebraic
connectivity under 0.2.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .graphs import Graph, GraphDataset, augment_edge_drop, augment_feature_mask, is_connected
from .model import ModelParams, gcn_forward, head_weights, mlp_forward
from .signature import joint_signature, signature_matrix
from .training import TrainConfig, pretrain

__all__ = [
    "ProbeResult",
    "SweepResult",
    "linear_probe",
    "embed_dataset",
    "robustness_sweep",
    "signature_displacement",
    "synthetic_dataset",
    "toy_dataset",
    "ablation_probe_table",
    "write_sweep_csv",
    "write_probe_csv",
    "EMBED_SOURCES",
]

EMBED_SOURCES = ("signature", "geo", "ch", "concat")
SWEEP_KINDS = ("edge_drop", "feature_mask")


# ---------------------------------------------------------------------------
# Linear probe
# ---------------------------------------------------------------------------


@dataclass
class ProbeResult:
    """Stratified k-fold accuracy of a multinomial logistic probe."""

    accuracy: float
    per_fold: list[float]
    n_classes: int
    embedding_source: str


def _stratified_folds(labels: np.ndarray, k_folds: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=[int(seed), int(labels.size)])
    )
    fold = np.empty(labels.size, dtype=np.int64)
    for c in np.unique(labels):
        idx = np.nonzero(labels == c)[0]
        idx = idx[rng.permutation(idx.size)]
        fold[idx] = np.arange(idx.size) % k_folds
    return fold


def _fit_softmax(
    x: np.ndarray, y: np.ndarray, n_classes: int, l2: float, iterations: int
) -> np.ndarray:
    """Full-batch gradient descent on L2-penalized multinomial logistic loss.

    The step size is set from the largest eigenvalue of the feature Gram
    matrix so descent is stable regardless of feature correlation.
    """
    n, d = x.shape
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y] = 1.0

    gram_top = float(np.linalg.eigvalsh(x.T @ x / n)[-1])
    lr = 1.0 / max(gram_top, 1e-3)

    w = np.zeros((d, n_classes))
    for _ in range(iterations):
        logits = x @ w
        logits -= logits.max(axis=1, keepdims=True)
        p = np.exp(logits)
        p /= p.sum(axis=1, keepdims=True)
        grad = x.T @ (p - onehot) / n + l2 * w
        grad[-1] -= l2 * w[-1]  # bias column is not penalized
        w -= lr * grad
    return w


def linear_probe(
    embeddings: np.ndarray,
    labels: np.ndarray,
    k_folds: int = 5,
    seed: int = 0,
    source: str = "signature",
    l2: float = 1e-3,
    iterations: int = 500,
) -> ProbeResult:
    """k-fold cross-validated multinomial logistic regression accuracy.

    Features are standardized per fold with the training split's statistics.
    Every class must have at least ``k_folds`` samples.
    """
    x = np.asarray(embeddings, dtype=np.float64)
    y_raw = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or x.shape[0] != y_raw.size:
        raise ValueError("embeddings and labels disagree on sample count")
    classes, y = np.unique(y_raw, return_inverse=True)
    if classes.size < 2:
        raise ValueError("probe needs at least two classes")
    counts = np.bincount(y)
    if counts.min() < k_folds:
        raise ValueError(
            f"every class needs >= {k_folds} samples, smallest has {counts.min()}"
        )

    fold = _stratified_folds(y, k_folds, seed)
    per_fold: list[float] = []
    for f in range(k_folds):
        train = fold != f
        mu = x[train].mean(axis=0)
        sd = x[train].std(axis=0)
        sd[sd < 1e-12] = 1.0
        xtr = np.hstack([(x[train] - mu) / sd, np.ones((int(train.sum()), 1))])
        xte = np.hstack([(x[~train] - mu) / sd, np.ones((int((~train).sum()), 1))])
        w = _fit_softmax(xtr, y[train], classes.size, l2, iterations)
        pred = np.argmax(xte @ w, axis=1)
        per_fold.append(float(np.mean(pred == y[~train])))
    return ProbeResult(
        accuracy=float(np.mean(per_fold)),
        per_fold=per_fold,
        n_classes=int(classes.size),
        embedding_source=source,
    )


# ---------------------------------------------------------------------------
# Embeddings
# ---------------------------------------------------------------------------


def _ablated_signature(sig: np.ndarray, ablation: str, dim_cheeger: int) -> np.ndarray:
    if ablation == "no_cheeger":
        sig = sig.copy()
        sig[:dim_cheeger] = 0.0
    elif ablation == "no_hodge":
        sig = sig.copy()
        sig[dim_cheeger:] = 0.0
    return sig


def embed_dataset(
    params: ModelParams,
    graphs,
    source: str,
    ablation: str = "full",
    signatures: np.ndarray | None = None,
) -> np.ndarray:
    """(N, D) embedding matrix for a dataset or list of graphs.

    Sources: raw joint ``signature`` values; encoder ``geo`` embeddings;
    structural-head ``ch`` embeddings; or their ``concat``.  Block zeroing
    mirrors the requested training ablation so evaluation sees the same
    inputs the heads were trained on.
    """
    if source not in EMBED_SOURCES:
        raise ValueError(f"source must be one of {EMBED_SOURCES}")
    glist = list(graphs)
    cfg = params.config

    need_sigs = source in ("signature", "ch", "concat")
    if need_sigs and signatures is None:
        signatures = np.stack(
            [joint_signature(g, cfg.dim_cheeger, cfg.dim_hodge).values for g in glist]
        )
    if need_sigs:
        signatures = np.stack(
            [_ablated_signature(s, ablation, cfg.dim_cheeger) for s in signatures]
        )

    if source == "signature":
        return signatures

    if source in ("geo", "concat"):
        geo = np.stack([gcn_forward(params, g)[1] for g in glist])
        if source == "geo":
            return geo

    ch_w = head_weights(params, "head_ch")
    ch = np.stack([mlp_forward(ch_w, s) for s in signatures])
    if source == "ch":
        return ch
    return np.hstack([geo, ch])


# ---------------------------------------------------------------------------
# Robustness sweep
# ---------------------------------------------------------------------------


@dataclass
class SweepResult:
    perturbation_kind: str
    levels: list[float]
    accuracy_per_level: list[float]
    signature_distance_per_level: list[float]
    seed_count: int

    def rows(self) -> list[tuple[str, float, int, float, float]]:
        return [
            (self.perturbation_kind, lv, self.seed_count, acc, disp)
            for lv, acc, disp in zip(
                self.levels, self.accuracy_per_level, self.signature_distance_per_level
            )
        ]


def _check_levels(levels: list[float]) -> list[float]:
    levels = [float(lv) for lv in levels]
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be strictly increasing")
    for lv in levels:
        if lv != 0.0 and not (0.05 <= lv <= 0.50):
            raise ValueError(f"level {lv} outside [0.05, 0.50] (0 allowed as clean)")
    return levels


def _perturb(g: Graph, kind: str, level: float, seed: int) -> Graph:
    if kind == "edge_drop":
        return augment_edge_drop(g, level, seed)
    if kind == "feature_mask":
        return augment_feature_mask(g, level, seed)
    raise ValueError(f"kind must be one of {SWEEP_KINDS}")


def _perturb_seed(seed: int, level_idx: int, eval_seed: int, graph_idx: int) -> int:
    ss = np.random.SeedSequence(
        entropy=[int(seed), int(level_idx), int(eval_seed), int(graph_idx)]
    )
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def signature_displacement(
    dataset: GraphDataset,
    kind: str,
    levels: list[float],
    n_seeds: int,
    seed: int = 0,
    dim_cheeger: int = 8,
    dim_hodge: int = 14,
    base_signatures: np.ndarray | None = None,
) -> np.ndarray:
    """Mean L2 distance between clean and perturbed signatures per level,
    averaged over graphs and evaluation seeds."""
    levels = _check_levels(levels)
    if base_signatures is None:
        base_signatures = signature_matrix(dataset, dim_cheeger, dim_hodge)
    out = np.zeros(len(levels))
    for li, lv in enumerate(levels):
        total = 0.0
        for s in range(n_seeds):
            for gi, g in enumerate(dataset):
                pg = _perturb(g, kind, lv, _perturb_seed(seed, li, s, gi))
                sig = joint_signature(pg, dim_cheeger, dim_hodge).values
                total += float(np.linalg.norm(sig - base_signatures[gi]))
        out[li] = total / (n_seeds * len(dataset))
    return out


def robustness_sweep(
    dataset: GraphDataset,
    params: ModelParams,
    kind: str,
    levels: list[float],
    n_seeds: int,
    seed: int = 0,
    probe_folds: int = 5,
    probe_seed: int = 0,
    source: str = "concat",
    ablation: str = "full",
) -> SweepResult:
    """Perturb-at-evaluation protocol: for each strength level, perturb every
    graph with fresh seeds, embed with the trained model, probe, and record
    both accuracy and the mean signature displacement."""
    if kind not in SWEEP_KINDS:
        raise ValueError(f"kind must be one of {SWEEP_KINDS}")
    levels = _check_levels(levels)
    labels = dataset.labels()
    cfg = params.config
    base_sigs = signature_matrix(dataset, cfg.dim_cheeger, cfg.dim_hodge)

    acc_per_level: list[float] = []
    disp_per_level: list[float] = []
    for li, lv in enumerate(levels):
        accs = []
        disp = 0.0
        for s in range(n_seeds):
            perturbed = [
                _perturb(g, kind, lv, _perturb_seed(seed, li, s, gi))
                for gi, g in enumerate(dataset)
            ]
            sigs = np.stack(
                [
                    joint_signature(pg, cfg.dim_cheeger, cfg.dim_hodge).values
                    for pg in perturbed
                ]
            )
            disp += float(np.mean(np.linalg.norm(sigs - base_sigs, axis=1)))
            emb = embed_dataset(params, perturbed, source, ablation, signatures=sigs)
            accs.append(
                linear_probe(
                    emb, labels, k_folds=probe_folds, seed=probe_seed, source=source
                ).accuracy
            )
        acc_per_level.append(float(np.mean(accs)))
        disp_per_level.append(disp / n_seeds)

    return SweepResult(
        perturbation_kind=kind,
        levels=levels,
        accuracy_per_level=acc_per_level,
        signature_distance_per_level=disp_per_level,
        seed_count=n_seeds,
    )


def write_sweep_csv(results: list[SweepResult], path: str | Path) -> None:
    lines = ["kind,level,seed_count,probe_accuracy,mean_sig_l2_displacement"]
    for res in results:
        for kind, lv, sc, acc, disp in res.rows():
            lines.append(f"{kind},{lv:.17g},{sc},{acc:.17g},{disp:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_probe_csv(results: list[ProbeResult], path: str | Path) -> None:
    lines = ["source,fold,accuracy"]
    for res in results:
        for f, acc in enumerate(res.per_fold):
            lines.append(f"{res.embedding_source},{f},{acc:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Synthetic benchmark
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    """Size envelope and margins for the 4-class benchmark generators."""

    expander_n: tuple[int, ...] = (12, 14, 16, 18, 20, 22, 24)
    barbell_n: tuple[int, ...] = (16, 18, 20, 22, 24)
    # triangle-free classes keep a cycle rank well above the 14 retained Hodge
    # eigenvalues, so mild edge dropping cannot push their harmonic space
    # below the signature window and flip them to "triangle-rich"
    min_cycle_rank: int = 19
    triangles_per_community: int = 5
    # accept/reject bands guaranteeing a lambda2 gap between the grid halves
    min_expander_lambda2: float = 0.14
    max_barbell_lambda2: float = 0.11


def _class_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=[int(seed), int(stream), int(index)])
    )


def _expander_base(n: int, rng: np.random.Generator) -> set[tuple[int, int]]:
    """Cycle plus a random perfect matching with cycle-distance >= 3 between
    matched nodes: connected, triangle-free, degree 3, and expander-like.

    The sparse degree-3 base is deliberate: the triangle-rich twin's chords
    never reduce the cycle rank of the clique complex, so the base's cycle
    rank n/2 + 1 <= 13 is what keeps its low Hodge spectrum from being all
    zeros.
    """
    cycle = {(min(i, (i + 1) % n), max(i, (i + 1) % n)) for i in range(n)}
    for _ in range(2000):
        perm = rng.permutation(n)
        pairs = [(int(perm[2 * i]), int(perm[2 * i + 1])) for i in range(n // 2)]
        dist = lambda u, v: min((u - v) % n, (v - u) % n)
        if all(dist(u, v) >= 3 for u, v in pairs):
            return cycle | {(min(u, v), max(u, v)) for u, v in pairs}
    raise RuntimeError("could not sample a matching with cycle-distance >= 3")


def _neighbor_map(n: int, edges: set[tuple[int, int]]) -> list[set[int]]:
    nbrs: list[set[int]] = [set() for _ in range(n)]
    for u, v in edges:
        nbrs[u].add(v)
        nbrs[v].add(u)
    return nbrs


def _add_wedge_closers(
    n: int, edges: set[tuple[int, int]], count: int, rng: np.random.Generator
) -> None:
    """Add ``count`` chords that each close at least one open wedge."""
    nbrs = _neighbor_map(n, edges)
    added = 0
    attempts = 0
    while added < count:
        attempts += 1
        if attempts > 10_000:
            raise RuntimeError("could not place wedge-closing chords")
        v = int(rng.integers(n))
        if len(nbrs[v]) < 2:
            continue
        u, w = rng.choice(sorted(nbrs[v]), size=2, replace=False)
        u, w = int(min(u, w)), int(max(u, w))
        if (u, w) in edges:
            continue
        edges.add((u, w))
        nbrs[u].add(w)
        nbrs[w].add(u)
        added += 1


def _add_triangle_free_chords(
    n: int, edges: set[tuple[int, int]], count: int, rng: np.random.Generator
) -> None:
    """Add ``count`` chords whose endpoints share no neighbor (no triangle is
    ever formed).  Greedy placement can corner itself on dense instances, so
    the whole batch restarts with a fresh order until it fits."""
    for _ in range(200):
        trial = set(edges)
        nbrs = _neighbor_map(n, trial)
        placed = 0
        while placed < count:
            candidates = [
                (u, w)
                for u in range(n)
                for w in range(u + 1, n)
                if (u, w) not in trial and not (nbrs[u] & nbrs[w])
            ]
            if not candidates:
                break
            u, w = candidates[int(rng.integers(len(candidates)))]
            trial.add((u, w))
            nbrs[u].add(w)
            nbrs[w].add(u)
            placed += 1
        if placed == count:
            edges |= trial
            return
    raise RuntimeError("no triangle-free chord placement left")


def _expander_instance(seed: int, index: int, spec: SyntheticSpec, triangle_rich: bool) -> Graph:
    from .spectral import lambda2 as _lambda2

    # node and chord counts are shared by the rich/free twins of an index,
    # so size and density cannot leak the triangle class
    pair_rng = _class_rng(seed, 0, index)
    n = int(pair_rng.choice(spec.expander_n))
    # cycle rank of the triangle-free twin is n/2 + extra + 1 >= min_cycle_rank
    extra = max(4, spec.min_cycle_rank - 1 - n // 2)
    rng = _class_rng(seed, 1 if triangle_rich else 2, index)
    for _ in range(500):
        edges = _expander_base(n, rng)
        try:
            if triangle_rich:
                _add_wedge_closers(n, edges, extra, rng)
            else:
                _add_triangle_free_chords(n, edges, extra, rng)
        except RuntimeError:
            continue
        g = Graph(
            n=n,
            edges=tuple(sorted(edges)),
            features=np.ones((n, 1)),
            label=0 if triangle_rich else 1,
        )
        if _lambda2(g) >= spec.min_expander_lambda2:
            return g
    raise RuntimeError("could not sample a well-connected expander instance")


def _connected_within(nodes: list[int], edges: set[tuple[int, int]]) -> bool:
    if not nodes:
        return True
    nbrs: dict[int, set[int]] = {v: set() for v in nodes}
    for u, v in edges:
        if u in nbrs and v in nbrs:
            nbrs[u].add(v)
            nbrs[v].add(u)
    seen = {nodes[0]}
    stack = [nodes[0]]
    while stack:
        for w in nbrs[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(nodes)


def _bipartite_community(
    nodes: list[int], drops: int, rng: np.random.Generator
) -> set[tuple[int, int]]:
    """Complete bipartite graph on the node list minus ``drops`` random edges
    chosen so the community stays connected."""
    half = len(nodes) // 2
    left, right = nodes[:half], nodes[half:]
    edges = {(min(u, v), max(u, v)) for u in left for v in right}
    removed = 0
    attempts = 0
    while removed < drops:
        attempts += 1
        if attempts > 1000:
            break
        e = sorted(edges)[int(rng.integers(len(edges)))]
        trial = edges - {e}
        if _connected_within(nodes, trial):
            edges = trial
            removed += 1
    return edges


def _rich_community(
    nodes: list[int], m_target: int, closers: int, rng: np.random.Generator
) -> set[tuple[int, int]]:
    """Connected community with exactly ``m_target`` edges and at least
    ``closers`` triangles: spanning path, wedge closers, then random fill."""
    order = list(rng.permutation(nodes))
    edges = {(min(a, b), max(a, b)) for a, b in zip(order, order[1:])}
    n_local = len(nodes)

    nbrs: dict[int, set[int]] = {v: set() for v in nodes}
    for u, v in edges:
        nbrs[u].add(v)
        nbrs[v].add(u)

    added_closers = 0
    attempts = 0
    while added_closers < closers and len(edges) < m_target:
        attempts += 1
        if attempts > 10_000:
            break
        v = nodes[int(rng.integers(n_local))]
        if len(nbrs[v]) < 2:
            continue
        u, w = rng.choice(sorted(nbrs[v]), size=2, replace=False)
        u, w = int(min(u, w)), int(max(u, w))
        if (u, w) in edges:
            continue
        edges.add((u, w))
        nbrs[u].add(w)
        nbrs[w].add(u)
        added_closers += 1

    pool = [
        (min(u, v), max(u, v))
        for i, u in enumerate(nodes)
        for v in nodes[i + 1 :]
        if (min(u, v), max(u, v)) not in edges
    ]
    pool = [pool[i] for i in rng.permutation(len(pool))]
    while len(edges) < m_target and pool:
        edges.add(pool.pop())
    return edges


def _barbell_instance(seed: int, index: int, spec: SyntheticSpec, triangle_rich: bool) -> Graph:
    from .spectral import lambda2 as _lambda2

    # sizes, per-community edge counts, and bridge counts are shared by the
    # rich/free twins of an index, so volume cannot leak the triangle class
    pair_rng = _class_rng(seed, 3, index)
    n = int(pair_rng.choice(spec.barbell_n))
    h = n // 2
    a, b = h // 2, h - h // 2
    bridges = int(pair_rng.integers(1, 3))
    # keep the cycle rank of the triangle-free twin above the Hodge dimension
    max_drops = (2 * a * b + bridges - n - spec.min_cycle_rank + 1) // 2
    drops = int(pair_rng.integers(0, max(0, max_drops) + 1))
    m_half = a * b - drops

    left_nodes = list(range(h))
    right_nodes = list(range(h, n))
    rng = _class_rng(seed, 5 if triangle_rich else 4, index)
    for _ in range(500):
        if triangle_rich:
            edges = _rich_community(left_nodes, m_half, spec.triangles_per_community, rng)
            edges |= _rich_community(right_nodes, m_half, spec.triangles_per_community, rng)
            label = 2
        else:
            edges = _bipartite_community(left_nodes, drops, rng)
            edges |= _bipartite_community(right_nodes, drops, rng)
            label = 3

        # endpoint-disjoint bridges never create a cross-community triangle
        lefts = rng.choice(left_nodes, size=bridges, replace=False)
        rights = rng.choice(right_nodes, size=bridges, replace=False)
        for u, v in zip(lefts, rights):
            edges.add((int(u), int(v)))
        g = Graph(n=n, edges=tuple(sorted(edges)), features=np.ones((n, 1)), label=label)
        if _lambda2(g) <= spec.max_barbell_lambda2:
            return g
    raise RuntimeError("could not sample a bottlenecked barbell instance")


def synthetic_dataset(
    count_per_class: int = 40,
    seed: int = 0,
    spec: SyntheticSpec | None = None,
) -> GraphDataset:
    """The labeled 4-class benchmark; bit-identical for a fixed seed."""
    if count_per_class < 1:
        raise ValueError("count_per_class must be >= 1")
    spec = spec or SyntheticSpec()
    graphs: list[Graph] = []
    for i in range(count_per_class):
        graphs.append(_expander_instance(seed, i, spec, triangle_rich=True))
    for i in range(count_per_class):
        graphs.append(_expander_instance(seed, i, spec, triangle_rich=False))
    for i in range(count_per_class):
        graphs.append(_barbell_instance(seed, i, spec, triangle_rich=True))
    for i in range(count_per_class):
        graphs.append(_barbell_instance(seed, i, spec, triangle_rich=False))
    for g in graphs:
        if not is_connected(g):
            raise RuntimeError("generator produced a disconnected graph")
    return GraphDataset(graphs=graphs, name=f"synthetic4_{count_per_class}x4_seed{seed}")


def toy_dataset(seed: int = 0) -> GraphDataset:
    """20-graph miniature of the benchmark, used for quick training checks."""
    ds = synthetic_dataset(count_per_class=5, seed=seed)
    return GraphDataset(graphs=ds.graphs, name=f"toy20_seed{seed}")


# ---------------------------------------------------------------------------
# Ablation comparison
# ---------------------------------------------------------------------------


def ablation_probe_table(
    dataset: GraphDataset,
    base_cfg: TrainConfig,
    seeds: list[int],
    probe_folds: int = 5,
    probe_seed: int = 0,
) -> list[dict]:
    """Pretrain every ablation variant over paired seeds and probe the
    resulting representations.

    The structural and geometry branches share no parameters, so removing the
    structural branch leaves the encoder bit-identical; the ``no_ch`` variant
    is therefore probed on the encoder embedding alone while the others are
    probed on the concatenated two-branch representation.
    """
    labels = dataset.labels()
    rows: list[dict] = []
    for variant in ("full", "no_cheeger", "no_hodge", "no_ch"):
        source = "geo" if variant == "no_ch" else "concat"
        accs: list[float] = []
        for s in seeds:
            cfg = replace(base_cfg, seed=int(s), ablation=variant)
            result = pretrain(dataset, cfg)
            emb = embed_dataset(result.params, dataset, source, ablation=variant)
            probe = linear_probe(
                emb, labels, k_folds=probe_folds, seed=probe_seed, source=source
            )
            accs.append(probe.accuracy)
        rows.append(
            {
                "variant": variant,
                "source": source,
                "median_accuracy": float(np.median(accs)),
                "accuracies": accs,
            }
        )
    return rows
