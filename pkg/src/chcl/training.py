"""Dual-branch contrastive pretraining.

Each graph in a batch yields two augmented views (edge dropping followed by
feature masking), each view yields a geometry embedding from the encoder and
a structural embedding from the signature head, and the two branches are
aligned across views with NT-Xent losses combined as
``lambda_geo * L_geo + lambda_ch * L_ch``.

View seeds derive from (run seed, epoch, graph index, view index), so runs
replay exactly and every epoch sees fresh views.  Ablations: ``no_cheeger``
zeroes the Cheeger block of the signature before the head, ``no_hodge``
zeroes the Hodge block, ``no_ch`` drops the structural branch entirely.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor, as_tensor
from .graphs import Graph, GraphDataset, augment_edge_drop, augment_feature_mask
from .model import (
    EncoderConfig,
    ModelParams,
    as_leaves,
    ch_embedding,
    collect_grads,
    geo_embedding,
    init_params,
)
from .signature import joint_signature

__all__ = [
    "TrainConfig",
    "PretrainResult",
    "ntxent_loss",
    "view_seeds",
    "make_training_view",
    "total_loss",
    "pretrain",
    "write_loss_trace",
    "parse_config_file",
]

ABLATIONS = ("full", "no_cheeger", "no_hodge", "no_ch")
NTXENT_MODES = ("standard", "paper_literal")


@dataclass(frozen=True)
class TrainConfig:
    """Everything a pretraining run needs; field names double as the config
    file keys."""

    tau: float = 0.2
    lambda_geo: float = 1.0
    lambda_ch: float = 1.0
    p_edge: float = 0.2
    p_feat: float = 0.2
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0
    ablation: str = "full"
    ntxent_denominator: str = "standard"
    hidden_dim: int = 64
    embed_dim: int = 64
    num_layers: int = 3
    dim_cheeger: int = 8
    dim_hodge: int = 14
    use_geo_head: bool = True

    def __post_init__(self) -> None:
        if self.tau <= 0:
            raise ValueError("tau must be > 0")
        if self.lambda_geo < 0 or self.lambda_ch < 0:
            raise ValueError("loss weights must be >= 0")
        for name in ("p_edge", "p_feat"):
            if not (0.0 <= getattr(self, name) <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.ablation not in ABLATIONS:
            raise ValueError(f"ablation must be one of {ABLATIONS}")
        if self.ntxent_denominator not in NTXENT_MODES:
            raise ValueError(f"ntxent_denominator must be one of {NTXENT_MODES}")

    def encoder_config(self, feature_dim: int) -> EncoderConfig:
        return EncoderConfig(
            feature_dim=feature_dim,
            hidden_dim=self.hidden_dim,
            embed_dim=self.embed_dim,
            num_layers=self.num_layers,
            dim_cheeger=self.dim_cheeger,
            dim_hodge=self.dim_hodge,
            use_geo_head=self.use_geo_head,
        )

    @classmethod
    def from_mapping(cls, mapping: dict[str, str]) -> "TrainConfig":
        """Build from string key-value pairs (config file / CLI overrides)."""
        kwargs = {}
        types = {f.name: f.type for f in fields(cls)}
        for key, raw in mapping.items():
            if key not in types:
                raise ValueError(f"unknown config key {key!r}")
            ftype = types[key]
            if ftype in ("int", int):
                kwargs[key] = int(raw)
            elif ftype in ("float", float):
                kwargs[key] = float(raw)
            elif ftype in ("bool", bool):
                kwargs[key] = _parse_bool(raw)
            else:
                kwargs[key] = str(raw)
        return cls(**kwargs)


def _parse_bool(raw) -> bool:
    if isinstance(raw, bool):
        return raw
    if str(raw).lower() in ("1", "true", "yes", "on"):
        return True
    if str(raw).lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"cannot parse boolean from {raw!r}")


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Flat ``key = value`` lines; '#' starts a comment."""
    mapping: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"malformed config line {lineno}: {line!r}")
        key, val = (part.strip() for part in stripped.split("=", 1))
        if not key or not val:
            raise ValueError(f"malformed config line {lineno}: {line!r}")
        mapping[key] = val
    return mapping


# ---------------------------------------------------------------------------
# NT-Xent
# ---------------------------------------------------------------------------


def ntxent_loss(z1, z2, tau: float, mode: str = "standard") -> Tensor:
    """Mean contrastive loss over anchors from view 1 against view 2.

    ``standard`` keeps the positive pair in the softmax denominator (bounded
    below by 0, uniform similarities give exactly ln N); ``paper_literal``
    sums only over j != i, which can push the loss negative.
    """
    if mode not in NTXENT_MODES:
        raise ValueError(f"mode must be one of {NTXENT_MODES}")
    if tau <= 0:
        raise ValueError("tau must be > 0")
    z1, z2 = as_tensor(z1), as_tensor(z2)
    n = z1.value.shape[0]
    if z2.value.shape[0] != n or n < 2:
        raise ValueError("need two equally sized batches with N >= 2")

    for z in (z1, z2):
        norms = np.linalg.norm(z.value, axis=1)
        if np.any(norms < 1e-12):
            raise ValueError("degenerate embedding")

    def normalize(z: Tensor) -> Tensor:
        sq = ad.tsum(z * z, axis=1, keepdims=True)
        return ad.div(z, ad.sqrt(sq))

    sims = ad.matmul(normalize(z1), ad.transpose(normalize(z2)))
    logits = sims * (1.0 / tau)

    eye = np.eye(n)
    pos = ad.tsum(logits * eye, axis=1)
    denom_mask = np.ones((n, n)) if mode == "standard" else 1.0 - eye
    denom = ad.tsum(ad.exp(logits) * denom_mask, axis=1)
    return ad.tmean(ad.log(denom) - pos)


# ---------------------------------------------------------------------------
# Views and the combined objective
# ---------------------------------------------------------------------------


def view_seeds(run_seed: int, epoch: int, graph_index: int, view: int) -> tuple[int, int]:
    """Independent edge-drop and feature-mask seeds for one view.

    Derived from the full coordinate tuple, so augmentation is reproducible
    and independent of batch composition or iteration order.
    """
    ss = np.random.SeedSequence(
        entropy=[int(run_seed), int(epoch), int(graph_index), int(view)]
    )
    edge_seed, feat_seed = ss.generate_state(2, dtype=np.uint64)
    return int(edge_seed), int(feat_seed)


def make_training_view(g: Graph, cfg: TrainConfig, epoch: int, graph_index: int, view: int) -> Graph:
    edge_seed, feat_seed = view_seeds(cfg.seed, epoch, graph_index, view)
    out = augment_edge_drop(g, cfg.p_edge, edge_seed)
    return augment_feature_mask(out, cfg.p_feat, feat_seed)


def _view_signature(view: Graph, cfg: TrainConfig) -> np.ndarray:
    """Signature of an augmented view with the ablation block-zeroing applied."""
    sig = joint_signature(view, cfg.dim_cheeger, cfg.dim_hodge).values
    if cfg.ablation == "no_cheeger":
        sig = sig.copy()
        sig[: cfg.dim_cheeger] = 0.0
    elif cfg.ablation == "no_hodge":
        sig = sig.copy()
        sig[cfg.dim_cheeger :] = 0.0
    return sig


def total_loss(
    graphs: list[Graph],
    graph_indices: list[int],
    params: ModelParams,
    cfg: TrainConfig,
    epoch: int,
) -> tuple[Tensor, dict[str, float], dict[str, Tensor]]:
    """Combined objective on one batch; returns (loss, components, leaves).

    Views are regenerated from seeds, and view signatures are recomputed here
    every time (they depend on the stochastic view, so caching would be
    wrong).  The structural branch is skipped entirely when its weight is
    zero or the ablation removes it.
    """
    if len(graphs) < 2:
        raise ValueError("batch must contain at least two graphs")
    leaves = as_leaves(params)
    enc_cfg = params.config

    use_ch = cfg.lambda_ch > 0.0 and cfg.ablation != "no_ch"
    use_geo = cfg.lambda_geo > 0.0

    z_geo: dict[int, list[Tensor]] = {1: [], 2: []}
    z_ch: dict[int, list[Tensor]] = {1: [], 2: []}
    for g, idx in zip(graphs, graph_indices):
        for view_id in (1, 2):
            view = make_training_view(g, cfg, epoch, idx, view_id)
            if use_geo:
                z_geo[view_id].append(geo_embedding(leaves, enc_cfg, g=view))
            if use_ch:
                sig = _view_signature(view, cfg)
                z_ch[view_id].append(ch_embedding(leaves, enc_cfg, sig))

    parts: list[Tensor] = []
    comps = {"geo": 0.0, "ch": 0.0}
    if use_geo:
        loss_geo = ntxent_loss(
            ad.concat_rows(z_geo[1]),
            ad.concat_rows(z_geo[2]),
            cfg.tau,
            cfg.ntxent_denominator,
        )
        comps["geo"] = loss_geo.item()
        parts.append(loss_geo * cfg.lambda_geo)
    if use_ch:
        loss_ch = ntxent_loss(
            ad.concat_rows(z_ch[1]),
            ad.concat_rows(z_ch[2]),
            cfg.tau,
            cfg.ntxent_denominator,
        )
        comps["ch"] = loss_ch.item()
        parts.append(loss_ch * cfg.lambda_ch)

    if not parts:
        loss = Tensor(0.0)
    else:
        loss = parts[0]
        for extra in parts[1:]:
            loss = ad.add(loss, extra)
    comps["total"] = loss.item()
    return loss, comps, leaves


# ---------------------------------------------------------------------------
# Adam and the training loop
# ---------------------------------------------------------------------------

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class AdamState:
    def __init__(self, params: ModelParams):
        self.m = params.zeros_like()
        self.v = params.zeros_like()
        self.t = 0

    def step(self, params: ModelParams, grads: dict[str, np.ndarray], lr: float) -> None:
        self.t += 1
        b1t = 1.0 - ADAM_BETA1**self.t
        b2t = 1.0 - ADAM_BETA2**self.t
        for name, g in grads.items():
            m = self.m[name]
            v = self.v[name]
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * (g * g)
            params.values[name] -= lr * (m / b1t) / (np.sqrt(v / b2t) + ADAM_EPS)


@dataclass
class PretrainResult:
    params: ModelParams
    trace: list[tuple[int, float, float, float]]  # (epoch, total, geo, ch)
    config: TrainConfig


def _batches(order: np.ndarray, batch_size: int) -> list[np.ndarray]:
    chunks = [order[i : i + batch_size] for i in range(0, len(order), batch_size)]
    # NT-Xent needs at least two graphs; fold a trailing singleton into the
    # previous batch instead of dropping it
    if len(chunks) >= 2 and len(chunks[-1]) == 1:
        chunks[-2] = np.concatenate([chunks[-2], chunks[-1]])
        chunks.pop()
    return chunks


def pretrain(
    dataset: GraphDataset,
    cfg: TrainConfig,
    initial_params: ModelParams | None = None,
) -> PretrainResult:
    """Run the pretraining loop; deterministic per (dataset, config).

    Emits one loss-trace row per epoch with per-graph-weighted means.  A
    non-finite loss aborts with the epoch/batch coordinates.
    """
    if len(dataset) == 0:
        raise ValueError("cannot pretrain on an empty dataset")
    if len(dataset) < 2:
        raise ValueError("pretraining needs at least two graphs")

    enc_cfg = cfg.encoder_config(dataset.feature_dim)
    params = initial_params.copy() if initial_params is not None else init_params(enc_cfg, cfg.seed)
    if params.config != enc_cfg:
        raise ValueError("initial_params disagree with the training config")

    state = AdamState(params)
    trace: list[tuple[int, float, float, float]] = []
    n = len(dataset)

    for epoch in range(cfg.epochs):
        shuffle_rng = np.random.default_rng(
            np.random.SeedSequence(entropy=[int(cfg.seed), int(epoch)])
        )
        order = shuffle_rng.permutation(n)
        sums = {"total": 0.0, "geo": 0.0, "ch": 0.0}
        for batch_id, batch in enumerate(_batches(order, cfg.batch_size)):
            graphs = [dataset[int(i)] for i in batch]
            loss, comps, leaves = total_loss(graphs, [int(i) for i in batch], params, cfg, epoch)
            if not np.isfinite(comps["total"]):
                raise RuntimeError(
                    f"non-finite loss at epoch {epoch}, batch {batch_id}"
                )
            loss.backward()
            grads = collect_grads(leaves)
            state.step(params, grads, cfg.learning_rate)
            for key in sums:
                sums[key] += comps[key] * len(batch)
        trace.append((epoch, sums["total"] / n, sums["geo"] / n, sums["ch"] / n))

    return PretrainResult(params=params, trace=trace, config=cfg)


def write_loss_trace(trace: list[tuple[int, float, float, float]], path: str | Path) -> None:
    lines = ["epoch,mean_total,mean_geo,mean_ch"]
    for epoch, total, geo, ch in trace:
        lines.append(f"{epoch},{total:.17g},{geo:.17g},{ch:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")
