"""Normalized graph Laplacian, symmetric eigensolvers, and a brute-force
conductance oracle.

The dense LAPACK path is the correctness reference; a hand-rolled Lanczos
iteration with full reorthogonalization (and restarts on Krylov breakdown, so
eigenvalue multiplicities are resolved) kicks in for large matrices and falls
back to the dense solver whenever it fails to converge.

Fixed numerical constants: eigenvalues with ``|value| < CLIP_EPS`` snap to
exactly 0; iterative residual target ``RESIDUAL_TOL``; at most
``LANCZOS_MAX_FACTOR * dim`` Lanczos steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .graphs import Graph, is_connected

__all__ = [
    "SymMatrix",
    "Spectrum",
    "normalized_laplacian",
    "smallest_eigenvalues",
    "lambda2",
    "brute_force_cheeger",
    "CLIP_EPS",
    "RESIDUAL_TOL",
    "DENSE_CUTOFF",
]

CLIP_EPS = 1e-10
RESIDUAL_TOL = 1e-8
DENSE_CUTOFF = 512
LANCZOS_MAX_FACTOR = 4


@dataclass
class SymMatrix:
    """Sparse symmetric real matrix; only the upper triangle is stored.

    ``rows[i] <= cols[i]`` for every stored entry, values finite.  Dense and
    CSR materializations are built lazily and cached.
    """

    dim: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    _dense: np.ndarray | None = field(default=None, repr=False, compare=False)
    _csr: sp.csr_matrix | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.rows = np.asarray(self.rows, dtype=np.int64)
        self.cols = np.asarray(self.cols, dtype=np.int64)
        self.vals = np.asarray(self.vals, dtype=np.float64)
        if not (self.rows.shape == self.cols.shape == self.vals.shape):
            raise ValueError("rows, cols, vals must have matching length")
        if self.dim < 0:
            raise ValueError("dim must be nonnegative")
        if self.rows.size:
            if self.rows.min() < 0 or self.cols.max() >= self.dim:
                raise ValueError("entry index out of range")
            if np.any(self.rows > self.cols):
                raise ValueError("only upper-triangle entries may be stored")
        if not np.all(np.isfinite(self.vals)):
            raise ValueError("matrix values must be finite")

    @classmethod
    def from_dense(cls, a: np.ndarray, sym_tol: float = 1e-12) -> "SymMatrix":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("expected a square matrix")
        if a.size and np.max(np.abs(a - a.T)) > sym_tol:
            raise ValueError("matrix is not symmetric")
        iu = np.triu_indices(a.shape[0])
        mask = a[iu] != 0.0
        return cls(a.shape[0], iu[0][mask], iu[1][mask], a[iu][mask])

    @classmethod
    def from_scipy(cls, a: sp.spmatrix) -> "SymMatrix":
        coo = sp.triu(a.tocoo(), k=0).tocoo()
        return cls(a.shape[0], coo.row, coo.col, np.asarray(coo.data, dtype=np.float64))

    def to_dense(self) -> np.ndarray:
        if self._dense is None:
            a = np.zeros((self.dim, self.dim), dtype=np.float64)
            a[self.rows, self.cols] = self.vals
            off = self.rows != self.cols
            a[self.cols[off], self.rows[off]] = self.vals[off]
            self._dense = a
        return self._dense

    def to_csr(self) -> sp.csr_matrix:
        if self._csr is None:
            off = self.rows != self.cols
            r = np.concatenate([self.rows, self.cols[off]])
            c = np.concatenate([self.cols, self.rows[off]])
            v = np.concatenate([self.vals, self.vals[off]])
            self._csr = sp.csr_matrix((v, (r, c)), shape=(self.dim, self.dim))
        return self._csr

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.to_csr() @ x

    @property
    def nnz(self) -> int:
        return int(self.vals.size)


@dataclass
class Spectrum:
    """Ascending eigenvalues with per-eigenvalue residuals ``||Mv - lv||``."""

    eigenvalues: np.ndarray
    residuals: np.ndarray
    solver: str  # "dense" | "iterative"

    def __post_init__(self) -> None:
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=np.float64)
        self.residuals = np.asarray(self.residuals, dtype=np.float64)
        if np.any(np.diff(self.eigenvalues) < -1e-12):
            raise ValueError("eigenvalues must be ascending")
        if self.solver not in ("dense", "iterative"):
            raise ValueError(f"unknown solver tag {self.solver!r}")


def normalized_laplacian(g: Graph) -> SymMatrix:
    """Symmetric normalized Laplacian ``I - D^{-1/2} A D^{-1/2}``.

    Zero-degree convention: isolated nodes get ``D^{-1/2} = 0``, so their row
    keeps the identity's 1 on the diagonal.  Isolated nodes appear routinely
    in edge-dropped views, hence the explicit convention.
    """
    deg = g.degrees().astype(np.float64)
    dinv = np.zeros(g.n)
    pos = deg > 0
    dinv[pos] = 1.0 / np.sqrt(deg[pos])

    rows = list(range(g.n))
    cols = list(range(g.n))
    vals = [1.0] * g.n
    for u, v in g.edges:
        rows.append(u)
        cols.append(v)
        vals.append(-dinv[u] * dinv[v])
    return SymMatrix(g.n, np.asarray(rows), np.asarray(cols), np.asarray(vals))


def _dense_spectrum(m: SymMatrix, k: int) -> Spectrum:
    vals, vecs = np.linalg.eigh(m.to_dense())
    vals, vecs = vals[:k], vecs[:, :k]
    a = m.to_dense()
    residuals = np.linalg.norm(a @ vecs - vecs * vals, axis=0) if k else np.zeros(0)
    vals = vals.copy()
    vals[np.abs(vals) < CLIP_EPS] = 0.0
    return Spectrum(vals, residuals, "dense")


def _lanczos_smallest(m: SymMatrix, k: int) -> Spectrum | None:
    """Lanczos with full reorthogonalization; restarts on breakdown.

    Returns None if the k smallest Ritz pairs fail to reach RESIDUAL_TOL
    within the iteration budget (caller falls back to the dense solver).
    """
    dim = m.dim
    a = m.to_csr()
    max_steps = min(LANCZOS_MAX_FACTOR * dim, dim)
    rng = np.random.default_rng(0x1A2C05)

    def fresh_vector(basis: np.ndarray, used: int) -> np.ndarray | None:
        for _ in range(20):
            q = rng.standard_normal(dim)
            if used:
                q -= basis[:, :used] @ (basis[:, :used].T @ q)
            norm = np.linalg.norm(q)
            if norm > 1e-8:
                return q / norm
        return None

    basis = np.zeros((dim, max_steps))
    tri = np.zeros((max_steps, max_steps))
    q = fresh_vector(basis, 0)
    if q is None:
        return None
    basis[:, 0] = q
    j = 0
    while j < max_steps:
        u = a @ basis[:, j]
        alpha = float(basis[:, j] @ u)
        tri[j, j] = alpha
        r = u - alpha * basis[:, j]
        if j > 0:
            r -= tri[j - 1, j] * basis[:, j - 1]
        # full reorthogonalization, done twice for float safety
        for _ in range(2):
            r -= basis[:, : j + 1] @ (basis[:, : j + 1].T @ r)
        beta = float(np.linalg.norm(r))
        j += 1
        if j >= max_steps:
            break
        if beta < 1e-12:
            # invariant subspace exhausted: restart to pick up multiplicities
            q = fresh_vector(basis, j)
            if q is None:
                break
            basis[:, j] = q
            continue
        tri[j - 1, j] = tri[j, j - 1] = beta
        basis[:, j] = r / beta

        if j >= k and (j % 8 == 0 or j == max_steps - 1):
            theta, s = np.linalg.eigh(tri[: j + 1, : j + 1])
            est = np.abs(beta * s[j, :k])
            if np.all(est <= RESIDUAL_TOL):
                break

    used = j if j < max_steps else max_steps
    theta, s = np.linalg.eigh(tri[:used, :used])
    if theta.size < k:
        return None
    vecs = basis[:, :used] @ s[:, :k]
    vals = theta[:k]
    residuals = np.linalg.norm(a @ vecs - vecs * vals, axis=0)
    if np.any(residuals > RESIDUAL_TOL):
        return None
    vals = vals.copy()
    vals[np.abs(vals) < CLIP_EPS] = 0.0
    return Spectrum(vals, residuals, "iterative")


def smallest_eigenvalues(m: SymMatrix, k: int, method: str = "auto") -> Spectrum:
    """The ``k`` smallest eigenvalues of a symmetric PSD matrix, ascending.

    ``k`` above ``dim`` is clamped.  ``method`` is "auto" (dense up to
    ``DENSE_CUTOFF``, Lanczos beyond), "dense", or "lanczos"; a
    non-converged Lanczos run falls back to dense and the returned
    ``Spectrum.solver`` says which path produced the result.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if method not in ("auto", "dense", "lanczos"):
        raise ValueError(f"unknown method {method!r}")
    k = min(k, m.dim)
    if m.dim == 0:
        return Spectrum(np.zeros(0), np.zeros(0), "dense")

    use_lanczos = method == "lanczos" or (method == "auto" and m.dim > DENSE_CUTOFF)
    if use_lanczos:
        spec = _lanczos_smallest(m, k)
        if spec is not None:
            return spec
    return _dense_spectrum(m, k)


def lambda2(g: Graph) -> float:
    """Algebraic connectivity: second-smallest eigenvalue of the normalized
    Laplacian, with an exact 0 for disconnected graphs.

    The zero-degree convention keeps a 1 on isolated nodes' diagonal, which
    would make the raw second eigenvalue nonzero for graphs with isolated
    vertices; the union-find connectivity check restores the
    "0 iff disconnected" contract uniformly.
    """
    if g.n < 2:
        raise ValueError("lambda2 undefined for single node")
    if not is_connected(g):
        return 0.0
    spec = smallest_eigenvalues(normalized_laplacian(g), 2)
    return float(spec.eigenvalues[1])


def brute_force_cheeger(g: Graph) -> float:
    """Exhaustive conductance: min over cuts of ``cut(S) / min(vol S, vol S~)``
    with vol = degree sum.

    This is the degree-volume (conductance) normalization that pairs with the
    normalized Laplacian's Cheeger inequality.  Enumerates the 2^(n-1) cuts
    containing node 0, so it is restricted to 2 <= n <= 20 connected graphs.
    """
    if g.n < 2 or g.n > 20:
        raise ValueError("oracle limited to small graphs (2 <= n <= 20)")
    if not is_connected(g):
        raise ValueError("Cheeger constant requires a connected graph")

    deg = g.degrees().astype(np.int64)
    total_vol = int(deg.sum())

    # subsets containing node 0, encoded in bits 0..n-2 for nodes 1..n-1
    n_masks = 1 << (g.n - 1)
    masks = np.arange(n_masks, dtype=np.uint64)

    cut = np.zeros(n_masks, dtype=np.int64)
    for u, v in g.edges:
        in_u = np.ones(n_masks, dtype=np.uint64) if u == 0 else (masks >> np.uint64(u - 1)) & np.uint64(1)
        in_v = np.ones(n_masks, dtype=np.uint64) if v == 0 else (masks >> np.uint64(v - 1)) & np.uint64(1)
        cut += (in_u ^ in_v).astype(np.int64)

    vol = np.full(n_masks, int(deg[0]), dtype=np.int64)
    for node in range(1, g.n):
        vol += ((masks >> np.uint64(node - 1)) & np.uint64(1)).astype(np.int64) * int(deg[node])

    # exclude the full set (its complement is empty)
    proper = vol < total_vol
    vol = vol[proper]
    cut = cut[proper]
    ratios = cut / np.minimum(vol, total_vol - vol)
    return float(ratios.min())
