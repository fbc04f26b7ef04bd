"""Cheeger-Hodge structural signatures and dual-branch contrastive pretraining.

The library computes perturbation-stable joint signatures of graphs (a
Cheeger-interval discretization of the algebraic connectivity concatenated
with the log-transformed low-frequency spectrum of the 1-Hodge Laplacian),
trains a small GCN encoder against them with a two-view NT-Xent objective,
and ships a desk-scale evaluation harness: linear probes, ablation runs, and
perturbation-robustness sweeps.
"""

__version__ = "0.1.0"

from .graphs import (
    AugmentConfig,
    Graph,
    GraphDataset,
    augment_edge_drop,
    augment_feature_mask,
    is_connected,
    load_edge_list,
    load_tu,
    make_view,
    save_edge_list,
)
from .spectral import (
    Spectrum,
    SymMatrix,
    brute_force_cheeger,
    lambda2,
    normalized_laplacian,
    smallest_eigenvalues,
)
from .hodge import (
    HodgeComplex,
    enumerate_triangles,
    hodge_laplacian_1,
    hodge_spectrum,
    incidence_b1,
    incidence_b2,
)
from .signature import (
    JointSignature,
    cheeger_signature,
    compute_signatures,
    hodge_signature,
    joint_signature,
    signature_matrix,
)
from .model import (
    EncoderConfig,
    GraphEmbedding,
    ModelParams,
    embed_view,
    gcn_forward,
    init_params,
    load_checkpoint,
    mlp_forward,
    save_checkpoint,
)
from .training import PretrainResult, TrainConfig, ntxent_loss, pretrain, total_loss
from .eval import (
    ProbeResult,
    SweepResult,
    ablation_probe_table,
    embed_dataset,
    linear_probe,
    robustness_sweep,
    signature_displacement,
    synthetic_dataset,
    toy_dataset,
)
