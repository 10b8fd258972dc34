"""
Greedy point selection on low-fidelity snapshots, Gramian projection,
bi-fidelity reconstruction and the empirical error estimators.
"""
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from bifi.errors import DegenerateSampleError, SurrogateConstructionError

JITTER = 1e-14
SELECTION_TOL = 1e-12

LowFidelityModel = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SnapshotSet:
    """Columns u(z_k) on one spatial grid, with the parameters that produced them."""
    vectors: np.ndarray     # (N, K)
    params: np.ndarray      # (K, d)
    ip_weight: float        # dx of the grid

    def __post_init__(self):
        if self.vectors.ndim != 2:
            raise ValueError(f"snapshot vectors must be a 2-d array, got shape {self.vectors.shape}")
        if self.params.ndim != 2 or self.params.shape[0] != self.vectors.shape[1]:
            raise ValueError(
                f"{self.vectors.shape[1]} snapshot columns but params has shape {self.params.shape}"
            )
        if not self.ip_weight > 0.0:
            raise ValueError(f"ip_weight must be positive, got {self.ip_weight}")

    @classmethod
    def from_samples(cls, samples: Sequence[np.ndarray], params: np.ndarray, ip_weight: float) -> "SnapshotSet":
        params = np.atleast_2d(np.asarray(params, dtype=float))
        return cls(vectors=np.column_stack(samples), params=params, ip_weight=ip_weight)

    def __len__(self) -> int:
        return self.vectors.shape[1]

    @property
    def length(self) -> int:
        return self.vectors.shape[0]

    def subset(self, indices) -> "SnapshotSet":
        indices = np.asarray(indices, dtype=int)
        return SnapshotSet(self.vectors[:, indices], self.params[indices], self.ip_weight)

    def inner(self, u: np.ndarray, w: np.ndarray) -> float:
        return float(self.ip_weight * np.dot(u, w))

    def norm(self, u: np.ndarray) -> float:
        return math.sqrt(max(0.0, self.inner(u, u)))


def gramian(snapshots: SnapshotSet) -> np.ndarray:
    """G_ij = dx * sum_m u_i[m] u_j[m], exactly symmetric."""
    if len(snapshots) == 0:
        raise ValueError("gramian of an empty snapshot set")
    G = snapshots.ip_weight * (snapshots.vectors.T @ snapshots.vectors)
    upper = np.triu(G)
    return upper + np.triu(upper, 1).T


@dataclass(frozen=True)
class SelectionResult:
    indices: np.ndarray
    pivots: np.ndarray
    chol: np.ndarray
    degenerate: bool = False

    def __len__(self) -> int:
        return self.indices.shape[0]

    def truncate(self, n: int) -> "SelectionResult":
        if not 0 <= n <= len(self):
            raise ValueError(f"cannot truncate a selection of {len(self)} points to {n}")
        return SelectionResult(self.indices[:n], self.pivots[:n], self.chol[:n, :n], self.degenerate)


def select_points(snapshots: SnapshotSet, n_max: int, tol: float = SELECTION_TOL) -> SelectionResult:
    """
    Greedy selection of the snapshots farthest from the span of those already chosen.

    Implemented as Cholesky with diagonal pivoting on the Gramian: the residual
    diagonal after k steps holds the squared distances of every candidate to the
    span of the first k picks, so each pivot is the greedy choice.

    Args:
        snapshots: Low-fidelity candidate snapshots
        n_max: Largest number of points to select, 1 <= n_max <= K
        tol: Stop when a pivot drops below tol times the first pivot

    Returns:
        SelectionResult with the ordered indices, their pivots and the factor of the selected Gramian
    """
    K = len(snapshots)
    if not 1 <= n_max <= K:
        raise ValueError(f"n_max must be in [1, {K}], got {n_max}")
    G = gramian(snapshots)
    residual = np.diag(G).copy()
    L = np.zeros((K, n_max))
    indices, pivots = [], []
    first = 0.0

    for k in range(n_max):
        available = residual.copy()
        available[indices] = -np.inf
        i = int(np.argmax(available))   # first maximum, so ties go to the smallest index
        pivot = float(available[i])
        if k == 0:
            if not pivot > 0.0:
                logging.warning("All candidate snapshots are zero, nothing to select")
                return SelectionResult(np.zeros(0, dtype=int), np.zeros(0), np.zeros((0, 0)), degenerate=True)
            first = pivot
        elif not pivot >= tol * first or pivot <= 0.0:
            logging.info(f"Selection stopped after {k} points: pivot {pivot:.3e} below {tol:.1e} x {first:.3e}")
            break
        column = (G[:, i] - L[:, :k] @ L[i, :k]) / math.sqrt(pivot)
        L[:, k] = column
        residual -= column ** 2
        indices.append(i)
        pivots.append(pivot)

    indices = np.array(indices, dtype=int)
    n = indices.shape[0]
    return SelectionResult(indices=indices, pivots=np.array(pivots), chol=np.tril(L[indices, :n]))


def _factorize(G: np.ndarray, what: str):
    """Cholesky factor of G, with diagonal jitter as a last resort. Returns (factor, jitter)."""
    try:
        return cho_factor(G, lower=True), 0.0
    except LinAlgError:
        pass
    n = G.shape[0]
    jitter = JITTER * float(np.trace(G)) / n
    logging.warning(f"{what} Gramian is not numerically SPD, adding jitter {jitter:.3e} to the diagonal")
    try:
        return cho_factor(G + jitter * np.eye(n), lower=True), jitter
    except (LinAlgError, ValueError) as e:
        raise SurrogateConstructionError(f"{what} Gramian of {n} snapshots cannot be factorized: {e}") from e


@dataclass(frozen=True)
class BiFiSurrogate:
    gamma: np.ndarray
    lf_basis: SnapshotSet
    hf_snapshots: SnapshotSet
    gram_factor: Tuple[np.ndarray, bool] = field(repr=False)
    jitter: float = 0.0

    @classmethod
    def build(cls, lf_basis: SnapshotSet, hf_snapshots: SnapshotSet) -> "BiFiSurrogate":
        if len(lf_basis) == 0:
            raise SurrogateConstructionError("surrogate needs at least one selected point")
        if len(lf_basis) != len(hf_snapshots):
            raise SurrogateConstructionError(
                f"{len(lf_basis)} low-fidelity columns but {len(hf_snapshots)} high-fidelity columns"
            )
        factor, jitter = _factorize(gramian(lf_basis), "low-fidelity")
        return cls(gamma=lf_basis.params, lf_basis=lf_basis, hf_snapshots=hf_snapshots,
                   gram_factor=factor, jitter=jitter)

    @property
    def size(self) -> int:
        return len(self.lf_basis)

    def truncate(self, n: int) -> "BiFiSurrogate":
        """Surrogate on the first n selected points."""
        if not 1 <= n <= self.size:
            raise ValueError(f"cannot truncate a surrogate of {self.size} points to {n}")
        if n == self.size:
            return self
        keep = np.arange(n)
        return BiFiSurrogate.build(self.lf_basis.subset(keep), self.hf_snapshots.subset(keep))

    @cached_property
    def hf_factor(self):
        factor, _ = _factorize(gramian(self.hf_snapshots), "high-fidelity")
        return factor


def _lf_load(u: np.ndarray, surrogate: BiFiSurrogate) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape[0] != surrogate.lf_basis.length:
        raise ValueError(
            f"vector of length {u.shape[0]} is not on the low-fidelity grid ({surrogate.lf_basis.length} cells)"
        )
    return surrogate.lf_basis.ip_weight * (surrogate.lf_basis.vectors.T @ u)


def project_coeffs(u: np.ndarray, surrogate: BiFiSurrogate) -> np.ndarray:
    """Coefficients c solving G c = f, f_k = <u, u^L(z_k)>; u may also hold one sample per column."""
    return cho_solve(surrogate.gram_factor, _lf_load(u, surrogate))


def bifi_reconstruct(z, surrogate: BiFiSurrogate, lf: LowFidelityModel) -> np.ndarray:
    """u^B(z) = sum_k c_k^L(z) u^H(z_k) from one low-fidelity solve at z."""
    return surrogate.hf_snapshots.vectors @ project_coeffs(lf(np.asarray(z, dtype=float)), surrogate)


def _probability(weights) -> np.ndarray:
    weights = np.asarray(weights, dtype=float)
    total = weights.sum()
    if not total > 0.0:
        raise ValueError(f"quadrature weights must have a positive sum, got {total}")
    return weights / total


def _lf_matrix(nodes, lf: Optional[LowFidelityModel], lf_values: Optional[np.ndarray]) -> np.ndarray:
    """Low-fidelity QoI at every node, one node per column."""
    if lf_values is not None:
        return np.asarray(lf_values, dtype=float).T
    if lf is None:
        raise ValueError("either a low-fidelity model or precomputed lf_values is required")
    return np.column_stack([lf(np.asarray(z, dtype=float)) for z in np.atleast_2d(nodes)])


def bifi_mean(surrogate: BiFiSurrogate, nodes, weights, lf: Optional[LowFidelityModel] = None,
              lf_values: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Bi-fidelity mean: project the low-fidelity sample mean and apply the coefficients to HF snapshots.

    Weights are rescaled to a probability measure. lf_values, shape (nodes, N_L), skips the LF solves.
    """
    w = _probability(weights)
    lf_mean = _lf_matrix(nodes, lf, lf_values) @ w
    return surrogate.hf_snapshots.vectors @ project_coeffs(lf_mean, surrogate)


def bifi_moments(surrogate: BiFiSurrogate, nodes, weights, lf: Optional[LowFidelityModel] = None,
                 lf_values: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Pointwise mean and standard deviation of the reconstructions u^B over a weighted node set."""
    w = _probability(weights)
    reconstructions = surrogate.hf_snapshots.vectors @ project_coeffs(_lf_matrix(nodes, lf, lf_values), surrogate)
    mean = reconstructions @ w
    variance = ((reconstructions - mean[:, None]) ** 2) @ w
    return mean, np.sqrt(np.maximum(0.0, variance))


def span_distances(values: np.ndarray, snapshots: SnapshotSet, factor=None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Distances sqrt(max(0, ||u||^2 - ||P u||^2)) to the span of the snapshot columns, and the norms ||u||.

    values holds one vector per row. factor is the Cholesky factor of the snapshot Gramian when known.
    """
    U = np.atleast_2d(np.asarray(values, dtype=float)).T
    if U.shape[0] != snapshots.length:
        raise ValueError(f"vectors of length {U.shape[0]} do not match snapshots of length {snapshots.length}")
    norms_sq = snapshots.ip_weight * np.sum(U ** 2, axis=0)
    if len(snapshots) == 0:
        return np.sqrt(norms_sq), np.sqrt(norms_sq)
    if factor is None:
        factor, _ = _factorize(gramian(snapshots), "snapshot")
    F = snapshots.ip_weight * (snapshots.vectors.T @ U)
    projected_sq = np.sum(F * cho_solve(factor, F), axis=0)
    return np.sqrt(np.maximum(0.0, norms_sq - projected_sq)), np.sqrt(norms_sq)


def lf_relative_distances(lf_values: np.ndarray, surrogate: BiFiSurrogate, k: int) -> np.ndarray:
    """d(u^L, U^L(gamma_k)) / ||u^L|| for each row of lf_values (shape (Q, N_L))."""
    if k == 0:
        distances, norms = span_distances(lf_values, surrogate.lf_basis.subset([]))
    else:
        level = surrogate.truncate(k)
        distances, norms = span_distances(lf_values, level.lf_basis, level.gram_factor)
    if np.any(norms <= 0.0):
        raise DegenerateSampleError(f"low-fidelity sample {int(np.argmin(norms))} has zero norm")
    return distances / norms


def similarity_Rs(z, k: int, lf_dist: float, hf_dist: float, lf_norm: float, hf_norm: float) -> float:
    """(hf_dist / hf_norm) / (lf_dist / lf_norm); +inf when only the LF sample lies in the span."""
    if not (lf_norm > 0.0 and hf_norm > 0.0):
        raise DegenerateSampleError(f"zero-norm sample at z={np.round(z, 6)} (k={k})")
    if hf_dist == 0.0:
        return 0.0
    if lf_dist == 0.0:
        logging.warning(f"R_s degenerate at k={k}: low-fidelity sample lies in the span, reporting inf")
        return math.inf
    return (hf_dist / hf_norm) / (lf_dist / lf_norm)


def inplane_Re(z_next, surrogate: BiFiSurrogate, k: int) -> float:
    """
    In-plane error ratio of the level-k surrogate at the (k+1)-th selected point.

    ||P_H u^H(z_{k+1}) - u^B(z_{k+1})|| / d(u^H(z_{k+1}), U^H(gamma_k)), +inf when the
    HF sample already lies in the span (adding it does not help).
    """
    if not 0 <= k < surrogate.size:
        raise ValueError(f"R_e at level {k} needs {k + 1} selected points, surrogate has {surrogate.size}")
    if not np.allclose(np.asarray(z_next, dtype=float), surrogate.gamma[k], rtol=0.0, atol=1e-14):
        raise ValueError(f"z_next does not match selected point {k}")
    hf = surrogate.hf_snapshots
    u_hf = hf.vectors[:, k]
    if k == 0:
        return 0.0 if hf.norm(u_hf) > 0.0 else math.inf
    level = surrogate.truncate(k)
    level_hf = level.hf_snapshots
    f_hf = level_hf.ip_weight * (level_hf.vectors.T @ u_hf)
    c_hf = cho_solve(level.hf_factor, f_hf)
    distance = math.sqrt(max(0.0, hf.inner(u_hf, u_hf) - float(f_hf @ c_hf)))
    if distance == 0.0:
        logging.warning(f"R_e degenerate at k={k}: high-fidelity sample lies in the span, stop adding samples")
        return math.inf
    c_lf = project_coeffs(surrogate.lf_basis.vectors[:, k], level)
    return hf.norm(level_hf.vectors @ (c_hf - c_lf)) / distance


def error_bound(z_star, k: int, surrogate: BiFiSurrogate, lf: Optional[LowFidelityModel], Re_next: float,
                c1: float = 1.0, c2: float = 1.0, lf_value: Optional[np.ndarray] = None) -> float:
    """[d(u^L(z*), U^L(gamma_k)) / ||u^L(z*)||] * (c1 + c2 R_e), with R_e taken at point k+1."""
    if not 0 <= k <= surrogate.size:
        raise ValueError(f"the bound at level {k} needs {k} selected points, surrogate has {surrogate.size}")
    if lf_value is None:
        lf_value = lf(np.asarray(z_star, dtype=float))
    relative = float(lf_relative_distances(np.asarray(lf_value)[None, :], surrogate, k)[0])
    if relative == 0.0:
        return 0.0
    return relative * (c1 + c2 * Re_next)


def expected_error_bound(lf_values: np.ndarray, surrogate: BiFiSurrogate, k: int, Re_next: float,
                         c1: float = 1.0, c2: float = 1.0) -> Tuple[float, float]:
    """Expectation bound over a validation set: (max form, mean form) of the LF relative distance times c1 + c2 R_e."""
    relative = lf_relative_distances(lf_values, surrogate, k)
    scale = c1 + c2 * Re_next
    return float(relative.max()) * scale, float(relative.mean()) * scale
