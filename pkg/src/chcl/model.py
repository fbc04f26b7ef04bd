"""Graph encoder and projection heads with hand-implemented gradients.

The geometry branch is a GCN with the renormalization-trick propagation
matrix S = D^{-1/2} (A + I) D^{-1/2} (self-loops keep degrees positive),
ReLU activations, mean readout, and an optional 2-layer projection head.
The structural branch is a 2-layer MLP over the joint signature.  Forward
passes are built on the :mod:`chcl.autodiff` tape so training gets exact
reverse-mode gradients; inference helpers just read the tape values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .graphs import Graph

__all__ = [
    "EncoderConfig",
    "ModelParams",
    "GraphEmbedding",
    "embed_view",
    "init_params",
    "propagation_matrix",
    "gcn_forward",
    "mlp_forward",
    "geo_embedding",
    "ch_embedding",
    "collect_grads",
    "save_checkpoint",
    "load_checkpoint",
]


@dataclass(frozen=True)
class EncoderConfig:
    """Dimensions of the encoder and the two projection heads."""

    feature_dim: int
    hidden_dim: int = 64
    embed_dim: int = 64
    num_layers: int = 3
    dim_cheeger: int = 8
    dim_hodge: int = 14
    use_geo_head: bool = True

    def __post_init__(self) -> None:
        for name in ("feature_dim", "hidden_dim", "embed_dim", "num_layers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.dim_cheeger < 2:
            raise ValueError("dim_cheeger must be >= 2")
        if self.dim_hodge < 1:
            raise ValueError("dim_hodge must be >= 1")

    @property
    def signature_dim(self) -> int:
        return self.dim_cheeger + self.dim_hodge


@dataclass(frozen=True)
class GraphEmbedding:
    """One branch's embedding of one augmented view of one graph."""

    z: np.ndarray
    branch: str  # "geo" | "ch"
    view: int  # 1 | 2

    def __post_init__(self) -> None:
        z = np.asarray(self.z, dtype=np.float64)
        if z.ndim != 1 or not np.all(np.isfinite(z)):
            raise ValueError("embedding must be a finite 1-D vector")
        if self.branch not in ("geo", "ch"):
            raise ValueError(f"branch must be 'geo' or 'ch', got {self.branch!r}")
        if self.view not in (1, 2):
            raise ValueError(f"view must be 1 or 2, got {self.view}")
        object.__setattr__(self, "z", z)


@dataclass
class ModelParams:
    """Named parameter arrays plus the config that fixes their shapes."""

    config: EncoderConfig
    values: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        expected = _param_shapes(self.config)
        if list(self.values.keys()) != list(expected.keys()):
            raise ValueError("parameter names do not match the config")
        for name, arr in self.values.items():
            if arr.shape != expected[name]:
                raise ValueError(
                    f"{name} has shape {arr.shape}, expected {expected[name]}"
                )
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")

    def copy(self) -> "ModelParams":
        return ModelParams(self.config, {k: v.copy() for k, v in self.values.items()})

    def zeros_like(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.values.items()}

    def equals(self, other: "ModelParams") -> bool:
        return self.config == other.config and all(
            np.array_equal(self.values[k], other.values[k]) for k in self.values
        )


def _param_shapes(cfg: EncoderConfig) -> dict[str, tuple[int, int]]:
    shapes: dict[str, tuple[int, int]] = {}
    d_in = cfg.feature_dim
    for layer in range(cfg.num_layers):
        shapes[f"gcn{layer}.weight"] = (d_in, cfg.hidden_dim)
        shapes[f"gcn{layer}.bias"] = (1, cfg.hidden_dim)
        d_in = cfg.hidden_dim
    for head, in_dim in (("head_geo", cfg.hidden_dim), ("head_ch", cfg.signature_dim)):
        shapes[f"{head}.w1"] = (in_dim, cfg.hidden_dim)
        shapes[f"{head}.b1"] = (1, cfg.hidden_dim)
        shapes[f"{head}.w2"] = (cfg.hidden_dim, cfg.embed_dim)
        shapes[f"{head}.b2"] = (1, cfg.embed_dim)
    return shapes


def init_params(cfg: EncoderConfig, seed: int) -> ModelParams:
    """Xavier-uniform weights, small uniform biases; bit-identical per seed.

    Biases are not zero-initialized on purpose: aggressive augmentation can
    hand the structural head an all-zero signature (a view that lost its
    bridges and its triangles), and with zero biases that input would embed
    at the origin where the cosine-similarity loss is undefined.
    """
    rng = np.random.default_rng(np.random.SeedSequence(entropy=int(seed)))
    values: dict[str, np.ndarray] = {}
    for name, shape in _param_shapes(cfg).items():
        if name.endswith("bias") or name.endswith("b1") or name.endswith("b2"):
            values[name] = rng.uniform(-0.01, 0.01, size=shape)
        else:
            limit = np.sqrt(6.0 / (shape[0] + shape[1]))
            values[name] = rng.uniform(-limit, limit, size=shape)
    return ModelParams(cfg, values)


def propagation_matrix(g: Graph) -> np.ndarray:
    """S = D^{-1/2} (A + I) D^{-1/2} with self-loop-augmented degrees."""
    a = g.adjacency() + np.eye(g.n)
    dinv = 1.0 / np.sqrt(a.sum(axis=1))
    return a * dinv[:, None] * dinv[None, :]


# ---------------------------------------------------------------------------
# Tape forwards (training path)
# ---------------------------------------------------------------------------


def as_leaves(params: ModelParams) -> dict[str, Tensor]:
    return {name: Tensor(arr) for name, arr in params.values.items()}


def mlp_tape(leaves: dict[str, Tensor], head: str, x: Tensor) -> Tensor:
    """Linear -> ReLU -> Linear on the tape."""
    h = ad.relu(x @ leaves[f"{head}.w1"] + leaves[f"{head}.b1"])
    return h @ leaves[f"{head}.w2"] + leaves[f"{head}.b2"]


def gcn_tape(leaves: dict[str, Tensor], cfg: EncoderConfig, g: Graph) -> Tensor:
    """L propagation layers; returns the (n, hidden) node matrix."""
    if g.feature_dim != cfg.feature_dim:
        raise ValueError(
            f"graph features have dim {g.feature_dim}, model expects {cfg.feature_dim}"
        )
    s = propagation_matrix(g)
    h = Tensor(g.features)
    for layer in range(cfg.num_layers):
        h = ad.relu(
            ad.const_matmul(s, h) @ leaves[f"gcn{layer}.weight"]
            + leaves[f"gcn{layer}.bias"]
        )
    return h


def geo_embedding(leaves: dict[str, Tensor], cfg: EncoderConfig, g: Graph) -> Tensor:
    """Mean readout over nodes, optionally through the geometry head; (1, d)."""
    h = gcn_tape(leaves, cfg, g)
    pooled = ad.tmean(h, axis=0, keepdims=True)
    if cfg.use_geo_head:
        return mlp_tape(leaves, "head_geo", pooled)
    return pooled


def ch_embedding(leaves: dict[str, Tensor], cfg: EncoderConfig, sig: np.ndarray) -> Tensor:
    """Structural-branch embedding of a signature vector; (1, embed_dim)."""
    sig = np.asarray(sig, dtype=np.float64).reshape(1, -1)
    if sig.shape[1] != cfg.signature_dim:
        raise ValueError(
            f"signature has length {sig.shape[1]}, model expects {cfg.signature_dim}"
        )
    return mlp_tape(leaves, "head_ch", Tensor(sig))


# ---------------------------------------------------------------------------
# Inference wrappers
# ---------------------------------------------------------------------------


def gcn_forward(params: ModelParams, g: Graph) -> tuple[np.ndarray, np.ndarray]:
    """Node matrix after the last layer and the graph-level embedding."""
    leaves = as_leaves(params)
    h = gcn_tape(leaves, params.config, g)
    pooled = ad.tmean(h, axis=0, keepdims=True)
    z = mlp_tape(leaves, "head_geo", pooled) if params.config.use_geo_head else pooled
    return h.value, z.value[0]


def mlp_forward(weights: list[tuple[np.ndarray, np.ndarray]], x: np.ndarray) -> np.ndarray:
    """Plain-numpy Linear -> ReLU -> Linear for a 2-layer head."""
    (w1, b1), (w2, b2) = weights
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != w1.shape[0]:
        raise ValueError(f"input has dim {x.shape[1]}, weights expect {w1.shape[0]}")
    h = np.maximum(x @ w1 + b1, 0.0)
    return (h @ w2 + b2)[0]


def head_weights(params: ModelParams, head: str) -> list[tuple[np.ndarray, np.ndarray]]:
    v = params.values
    return [(v[f"{head}.w1"], v[f"{head}.b1"]), (v[f"{head}.w2"], v[f"{head}.b2"])]


def embed_view(
    params: ModelParams,
    g: Graph,
    branch: str,
    view: int = 1,
    signature: np.ndarray | None = None,
) -> GraphEmbedding:
    """Embed one (augmented) graph through one branch, tagged with its view.

    The structural branch needs the view's joint signature; it is computed
    here when not supplied.
    """
    if branch == "geo":
        return GraphEmbedding(z=gcn_forward(params, g)[1], branch="geo", view=view)
    if branch == "ch":
        if signature is None:
            from .signature import joint_signature

            cfg = params.config
            signature = joint_signature(g, cfg.dim_cheeger, cfg.dim_hodge).values
        z = mlp_forward(head_weights(params, "head_ch"), signature)
        return GraphEmbedding(z=z, branch="ch", view=view)
    raise ValueError(f"branch must be 'geo' or 'ch', got {branch!r}")


def collect_grads(leaves: dict[str, Tensor]) -> dict[str, np.ndarray]:
    """Pull accumulated gradients off the tape, zeros where a parameter was
    unused; raises naming the parameter on any non-finite entry."""
    grads: dict[str, np.ndarray] = {}
    for name, leaf in leaves.items():
        g = leaf.grad if leaf.grad is not None else np.zeros_like(leaf.value)
        if not np.all(np.isfinite(g)):
            raise RuntimeError(f"non-finite gradient in parameter {name}")
        grads[name] = g
    return grads


# ---------------------------------------------------------------------------
# Checkpoints: versioned text container, dims header then row-major blocks
# ---------------------------------------------------------------------------

_CKPT_MAGIC = "chcl-checkpoint v1"


def save_checkpoint(params: ModelParams, path: str | Path) -> None:
    cfg = params.config
    lines = [
        _CKPT_MAGIC,
        f"feature_dim {cfg.feature_dim}",
        f"hidden_dim {cfg.hidden_dim}",
        f"embed_dim {cfg.embed_dim}",
        f"num_layers {cfg.num_layers}",
        f"dim_cheeger {cfg.dim_cheeger}",
        f"dim_hodge {cfg.dim_hodge}",
        f"use_geo_head {int(cfg.use_geo_head)}",
    ]
    for name, arr in params.values.items():
        lines.append(f"param {name} {arr.shape[0]} {arr.shape[1]}")
        for row in arr:
            lines.append(" ".join(f"{x:.17g}" for x in row))
    lines.append("end")
    Path(path).write_text("\n".join(lines) + "\n")


def load_checkpoint(path: str | Path) -> ModelParams:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != _CKPT_MAGIC:
        raise ValueError(f"not a recognized checkpoint file: {path}")
    header: dict[str, int] = {}
    i = 1
    while i < len(lines) and not lines[i].startswith("param "):
        key, val = lines[i].split()
        header[key] = int(val)
        i += 1
    cfg = EncoderConfig(
        feature_dim=header["feature_dim"],
        hidden_dim=header["hidden_dim"],
        embed_dim=header["embed_dim"],
        num_layers=header["num_layers"],
        dim_cheeger=header["dim_cheeger"],
        dim_hodge=header["dim_hodge"],
        use_geo_head=bool(header["use_geo_head"]),
    )
    values: dict[str, np.ndarray] = {}
    while i < len(lines) and lines[i] != "end":
        parts = lines[i].split()
        if parts[0] != "param" or len(parts) != 4:
            raise ValueError(f"malformed checkpoint at line {i + 1}")
        name, r, c = parts[1], int(parts[2]), int(parts[3])
        block = lines[i + 1 : i + 1 + r]
        if len(block) != r:
            raise ValueError(f"truncated parameter block {name}")
        arr = np.asarray([[float(x) for x in row.split()] for row in block])
        if arr.shape != (r, c):
            raise ValueError(f"parameter {name} block does not match its header")
        values[name] = arr
        i += 1 + r
    # ModelParams validates the full shape chain against the config
    return ModelParams(cfg, values)
