"""The joint structural signature: a uniform discretization of the Cheeger
interval [lambda2/2, sqrt(2*lambda2)] concatenated with the log-transformed
low-frequency Hodge spectrum.

Both blocks are spectral, hence invariant under node relabeling.  The Cheeger
block degenerates to all zeros for disconnected graphs (the interval formula
extends continuously to lambda2 = 0, which edge-dropped views produce in
practice); Hodge entries are log(1 + mu) >= 0, with right zero-padding when a
view has fewer edges than the requested dimension.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graphs import Graph, GraphDataset
from .hodge import hodge_spectrum
from .spectral import lambda2

__all__ = [
    "JointSignature",
    "cheeger_signature",
    "hodge_signature",
    "joint_signature",
    "compute_signatures",
    "signature_matrix",
    "write_signature_csv",
    "read_signature_csv",
]


@dataclass(frozen=True)
class JointSignature:
    """Cheeger block followed by Hodge block, plus the zero-pad count."""

    cheeger: np.ndarray
    hodge: np.ndarray
    padded_hodge_count: int

    def __post_init__(self) -> None:
        ch = np.asarray(self.cheeger, dtype=np.float64)
        ho = np.asarray(self.hodge, dtype=np.float64)
        if np.any(np.diff(ch) < -1e-12):
            raise ValueError("Cheeger block must be non-decreasing")
        if np.any(ho < 0.0):
            raise ValueError("Hodge block entries must be >= 0")
        if not (0 <= self.padded_hodge_count <= ho.size):
            raise ValueError("invalid padded_hodge_count")
        object.__setattr__(self, "cheeger", ch)
        object.__setattr__(self, "hodge", ho)

    @property
    def values(self) -> np.ndarray:
        return np.concatenate([self.cheeger, self.hodge])

    def __len__(self) -> int:
        return self.cheeger.size + self.hodge.size


def cheeger_signature(lam2: float, dim_cheeger: int) -> np.ndarray:
    """Uniformly sample the interval [lam2/2, sqrt(2*lam2)] at dim_cheeger
    points; first entry is the lower Cheeger bound, last the upper."""
    if dim_cheeger < 2:
        raise ValueError("Cheeger dimension must be >= 2")
    if lam2 < 0.0:
        raise ValueError(f"lambda2 must be >= 0, got {lam2}")
    low = lam2 / 2.0
    high = np.sqrt(2.0 * lam2)
    return low + np.linspace(0.0, 1.0, dim_cheeger) * (high - low)


def hodge_signature(mu: np.ndarray) -> np.ndarray:
    """Elementwise log(1 + mu); rejects negative eigenvalues (anything the
    solver's clip did not absorb is a genuine error)."""
    mu = np.asarray(mu, dtype=np.float64)
    if np.any(mu < 0.0):
        raise ValueError("negative Hodge eigenvalue")
    return np.log1p(mu)


def joint_signature(g: Graph, dim_cheeger: int = 8, dim_hodge: int = 14) -> JointSignature:
    """Deterministic per-graph signature of length dim_cheeger + dim_hodge."""
    if g.n < 2:
        raise ValueError("joint signature requires at least two nodes")
    lam = lambda2(g)
    cheeger = cheeger_signature(lam, dim_cheeger)
    mu = hodge_spectrum(g, dim_hodge)
    padded = dim_hodge - min(dim_hodge, g.m)
    return JointSignature(cheeger=cheeger, hodge=hodge_signature(mu), padded_hodge_count=padded)


def compute_signatures(
    dataset: GraphDataset,
    dim_cheeger: int = 8,
    dim_hodge: int = 14,
    workers: int = 1,
) -> list[JointSignature]:
    """Signatures for every graph, optionally over a process pool.

    Results are in dataset order regardless of worker count.
    """
    if workers > 1 and len(dataset) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            sigs = list(
                pool.map(
                    _signature_worker,
                    [(g, dim_cheeger, dim_hodge) for g in dataset],
                    chunksize=max(1, len(dataset) // (4 * workers)),
                )
            )
        return sigs
    return [joint_signature(g, dim_cheeger, dim_hodge) for g in dataset]


def _signature_worker(args) -> JointSignature:
    g, dim_cheeger, dim_hodge = args
    return joint_signature(g, dim_cheeger, dim_hodge)


def signature_matrix(
    dataset: GraphDataset,
    dim_cheeger: int = 8,
    dim_hodge: int = 14,
    workers: int = 1,
) -> np.ndarray:
    """(N, dim_cheeger + dim_hodge) matrix of stacked signature values."""
    sigs = compute_signatures(dataset, dim_cheeger, dim_hodge, workers)
    return np.stack([s.values for s in sigs]) if sigs else np.zeros((0, dim_cheeger + dim_hodge))


def write_signature_csv(
    sigs: list[JointSignature], path: str | Path, dim_cheeger: int, dim_hodge: int
) -> None:
    """One row per graph: graph_id, d_c, d_h, v_1..v_{d_c+d_h} at 17
    significant digits."""
    path = Path(path)
    total = dim_cheeger + dim_hodge
    header = "graph_id,d_c,d_h," + ",".join(f"v_{j + 1}" for j in range(total))
    lines = [header]
    for gid, s in enumerate(sigs):
        vals = s.values
        if vals.size != total:
            raise ValueError(f"signature {gid} has length {vals.size}, expected {total}")
        lines.append(
            f"{gid},{dim_cheeger},{dim_hodge},"
            + ",".join(f"{x:.17g}" for x in vals)
        )
    path.write_text("\n".join(lines) + "\n")


def read_signature_csv(path: str | Path) -> np.ndarray:
    """Signature values back as an (N, d_c + d_h) float matrix."""
    lines = Path(path).read_text().splitlines()
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        rows.append([float(x) for x in parts[3:]])
    return np.asarray(rows, dtype=np.float64)
