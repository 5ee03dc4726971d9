"""Codebook training: hard k-means clusters and diagonal Gaussian mixtures.

A Codebook is the per-cluster first and second moment table (means and
population standard deviations) produced by Lloyd's algorithm with k-means++
seeding. A GmmModel is a diagonal-covariance mixture fit by EM, initialized
from the k-means result. Both are deterministic functions of (data, K, seed):
the kernels are single-threaded and accumulate in a fixed order, so repeated
runs are bitwise identical.

Standard deviations are clamped to SIGMA_FLOOR on the training side and the
model types reject entries below the floor, so every downstream division is
safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (InsufficientDataError, NumericError,
                     TrainingDegenerateError)

# Lower bound on every stored standard deviation, in feature units.
SIGMA_FLOOR = 1e-4

# Component weights are floored here, then renormalized, each M-step.
WEIGHT_FLOOR = 1e-6

# Mean log-likelihood may wobble below its previous value by at most this
# much before EM reports an internal inconsistency.
EM_DECREASE_TOL = 1e-8

_MAX_EMPTY_REPAIRS = 10


def _as_matrix(data, name: str) -> np.ndarray:
    arr = np.ascontiguousarray(data, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be a 2-D matrix with at least one column")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} must contain only finite values")
    return arr


@dataclass(frozen=True, eq=False)
class InstanceSet:
    """One entity: a set of instance vectors sharing a dimension.

    vectors has shape (n, d) with n >= 0 and d >= 1; label is an optional
    integer class id carried through batch pipelines.
    """

    vectors: np.ndarray
    label: int | None = None

    def __post_init__(self):
        arr = _as_matrix(self.vectors, "vectors")
        arr.setflags(write=False)
        object.__setattr__(self, "vectors", arr)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True, eq=False)
class Codebook:
    """Per-cluster means and population stds, K x d each.

    Rows of means are pairwise distinct and every std entry is at least
    SIGMA_FLOOR; both are checked at construction. inertia_history is
    training metadata (k-means objective after each Lloyd iteration) and is
    not serialized.
    """

    means: np.ndarray
    stds: np.ndarray
    inertia_history: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        means = _as_matrix(self.means, "means")
        stds = _as_matrix(self.stds, "stds")
        if means.shape != stds.shape:
            raise ValueError("means and stds must have identical shapes")
        if (stds < SIGMA_FLOOR).any():
            raise ValueError(f"all stds must be >= {SIGMA_FLOOR}")
        if np.unique(means, axis=0).shape[0] != means.shape[0]:
            raise ValueError("cluster means must be pairwise distinct")
        means.setflags(write=False)
        stds.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stds", stds)

    @property
    def k(self) -> int:
        return self.means.shape[0]

    @property
    def d(self) -> int:
        return self.means.shape[1]


@dataclass(frozen=True, eq=False)
class GmmModel:
    """Diagonal-covariance Gaussian mixture.

    weights are strictly positive and sum to 1 (checked to 1e-10); stds obey
    SIGMA_FLOOR. loglik_history is training metadata (mean log-likelihood
    after each E-step) and is not serialized.
    """

    weights: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    loglik_history: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        means = _as_matrix(self.means, "means")
        stds = _as_matrix(self.stds, "stds")
        if weights.ndim != 1 or weights.shape[0] != means.shape[0]:
            raise ValueError("weights must be 1-D with one entry per component")
        if not np.isfinite(weights).all() or (weights <= 0.0).any():
            raise ValueError("weights must be finite and strictly positive")
        if abs(float(weights.sum()) - 1.0) > 1e-10:
            raise ValueError("weights must sum to 1 within 1e-10")
        if means.shape != stds.shape:
            raise ValueError("means and stds must have identical shapes")
        if (stds < SIGMA_FLOOR).any():
            raise ValueError(f"all stds must be >= {SIGMA_FLOOR}")
        for arr in (weights, means, stds):
            arr.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stds", stds)

    @property
    def k(self) -> int:
        return self.means.shape[0]

    @property
    def d(self) -> int:
        return self.means.shape[1]


# --------------------------------------------------------------------------
# k-means
# --------------------------------------------------------------------------

def _kmeans_pp_init(pts: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding; duplicates of chosen centers carry zero mass."""
    n, d = pts.shape
    centers = np.empty((k, d), dtype=np.float64)
    centers[0] = pts[int(rng.integers(n))]
    _, d2 = _kernels.nearest_centers(pts, centers[:1])
    for i in range(1, k):
        cum = np.cumsum(d2)
        r = rng.random() * cum[-1]
        cand = min(int(np.searchsorted(cum, r, side="right")), n - 1)
        centers[i] = pts[cand]
        _, nd2 = _kernels.nearest_centers(pts, centers[i:i + 1])
        d2 = np.minimum(d2, nd2)
    return centers


def _lloyd(pts, centers, k, max_iters, history):
    """Assignment/update sweeps until assignments stabilize."""
    idx, d2 = _kernels.nearest_centers(pts, centers)
    for _ in range(max_iters):
        counts, means, _ = _kernels.cluster_mean_std(pts, idx, k)
        centers = np.where(counts[:, None] > 0, means, centers)
        new_idx, d2 = _kernels.nearest_centers(pts, centers)
        history.append(float(d2.sum()))
        if np.array_equal(new_idx, idx):
            break
        idx = new_idx
    return centers, idx, d2


def train_kmeans(data, k: int, seed: int, max_iters: int = 100) -> Codebook:
    """Lloyd's k-means with k-means++ seeding from the given seed.

    Converges when assignments stop changing or max_iters is reached. The
    returned Codebook holds per-cluster per-dimension means and population
    standard deviations over the final hard assignment, with stds clamped to
    SIGMA_FLOOR. Any cluster left empty at convergence is re-seeded on the
    point farthest from its assigned center and Lloyd resumes, at most
    10 times, after which TrainingDegenerateError is raised.

    Raises InsufficientDataError when the data has fewer than k distinct
    rows. Output is bitwise deterministic for fixed (data, k, seed).
    """
    pts = _as_matrix(data, "data")
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ValueError("k must be a positive integer")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if pts.shape[0] < k or np.unique(pts, axis=0).shape[0] < k:
        raise InsufficientDataError(
            f"need at least {k} distinct rows, got "
            f"{np.unique(pts, axis=0).shape[0] if pts.size else 0}")
    rng = np.random.default_rng(seed)
    history: list[float] = []
    centers = _kmeans_pp_init(pts, k, rng)
    centers, idx, d2 = _lloyd(pts, centers, k, max_iters, history)
    counts, means, stds = _kernels.cluster_mean_std(pts, idx, k)
    repairs = 0
    while (counts == 0).any():
        if repairs >= _MAX_EMPTY_REPAIRS:
            raise TrainingDegenerateError(
                f"empty cluster persisted after {repairs} re-seedings")
        empty = int(np.argmax(counts == 0))
        centers = centers.copy()
        centers[empty] = pts[int(np.argmax(d2))]
        repairs += 1
        centers, idx, d2 = _lloyd(pts, centers, k, max_iters, history)
        counts, means, stds = _kernels.cluster_mean_std(pts, idx, k)
    if np.unique(means, axis=0).shape[0] != k:
        raise TrainingDegenerateError("training produced duplicate centers")
    return Codebook(means=means, stds=np.maximum(stds, SIGMA_FLOOR),
                    inertia_history=np.asarray(history))


def assign(codebook: Codebook, y) -> int:
    """Index of the nearest cluster center; ties go to the smallest index."""
    vec = np.ascontiguousarray(y, dtype=np.float64)
    if vec.ndim != 1 or vec.shape[0] != codebook.d:
        raise ValueError(f"vector must be 1-D of length {codebook.d}")
    if not np.isfinite(vec).all():
        raise ValueError("vector must contain only finite values")
    idx, _ = _kernels.nearest_centers(vec.reshape(1, -1), codebook.means)
    return int(idx[0])


def cluster_statistics(data, assignments, k: int):
    """Per-cluster (means, stds, counts) over a hard assignment.

    stds are population standard deviations (divide by n) and are returned
    unclamped; empty clusters yield zero rows and zero counts. The caller
    decides clamping.
    """
    pts = _as_matrix(data, "data")
    idx = np.ascontiguousarray(assignments, dtype=np.int64)
    if idx.ndim != 1 or idx.shape[0] != pts.shape[0]:
        raise ValueError("assignments must be 1-D, one entry per row")
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ValueError("k must be a positive integer")
    if idx.size and (idx.min() < 0 or idx.max() >= k):
        raise ValueError("assignments must lie in [0, k)")
    counts, means, stds = _kernels.cluster_mean_std(pts, idx, int(k))
    return means, stds, counts


# --------------------------------------------------------------------------
# Diagonal GMM via EM
# --------------------------------------------------------------------------

def _component_log_consts(weights, stds):
    d = stds.shape[1]
    return (np.log(weights) - np.log(stds).sum(axis=1)
            - 0.5 * d * math.log(2.0 * math.pi))


def _posterior_rows(pts, weights, means, stds):
    """Posteriors and per-row log-likelihoods, computed in log space."""
    log_joint = _kernels.gmm_log_joint(pts, means, 1.0 / stds,
                                       _component_log_consts(weights, stds))
    row_max = log_joint.max(axis=1)
    shifted = np.exp(log_joint - row_max[:, None])
    denom = shifted.sum(axis=1)
    ll_rows = row_max + np.log(denom)
    return shifted / denom[:, None], ll_rows


def train_gmm_em(data, k: int, seed: int, max_iters: int = 100,
                 tol: float = 1e-6) -> GmmModel:
    """Diagonal-covariance GMM fit by EM, initialized from train_kmeans.

    Initial weights are the k-means cluster fractions and initial means and
    stds the cluster statistics. Iterations stop when the improvement in
    mean per-point log-likelihood falls below tol or after max_iters
    E-steps. Variances are floored at SIGMA_FLOOR**2 and weights at 1e-6
    (then renormalized) every M-step. A decrease in mean log-likelihood
    beyond 1e-8 raises NumericError; loglik_history on the returned model
    records the trajectory.
    """
    pts = _as_matrix(data, "data")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if not math.isfinite(tol) or tol < 0.0:
        raise ValueError("tol must be finite and non-negative")
    km = train_kmeans(pts, k, seed)
    idx, _ = _kernels.nearest_centers(pts, km.means)
    counts = np.bincount(idx, minlength=km.k).astype(np.float64)
    weights = counts / pts.shape[0]
    weights = np.maximum(weights, WEIGHT_FLOOR)
    weights = weights / weights.sum()
    means = km.means.copy()
    stds = km.stds.copy()

    history: list[float] = []
    prev_ll = None
    for _ in range(max_iters):
        post, ll_rows = _posterior_rows(pts, weights, means, stds)
        ll = float(ll_rows.mean())
        history.append(ll)
        if prev_ll is not None:
            if ll - prev_ll < -EM_DECREASE_TOL:
                raise NumericError(
                    f"log-likelihood decreased from {prev_ll!r} to {ll!r}")
            if ll - prev_ll < tol:
                break
        prev_ll = ll

        mass = post.sum(axis=0)
        alive = mass > 1e-10
        new_w = mass / pts.shape[0]
        new_means = means.copy()
        new_stds = stds.copy()
        for comp in np.flatnonzero(alive):
            g = post[:, comp]
            mu = g @ pts / mass[comp]
            dev = pts - mu
            var = g @ (dev * dev) / mass[comp]
            new_means[comp] = mu
            new_stds[comp] = np.sqrt(var)
        weights = np.maximum(new_w, WEIGHT_FLOOR)
        weights = weights / weights.sum()
        means = new_means
        stds = np.maximum(new_stds, SIGMA_FLOOR)

    return GmmModel(weights=weights, means=means, stds=stds,
                    loglik_history=np.asarray(history))


def gmm_posteriors(model: GmmModel, y) -> np.ndarray:
    """Component posteriors for one vector, computed in log space.

    Uses max-subtraction so extreme exponents cannot overflow; the result
    sums to 1 within 1e-12.
    """
    vec = np.ascontiguousarray(y, dtype=np.float64)
    if vec.ndim != 1 or vec.shape[0] != model.d:
        raise ValueError(f"vector must be 1-D of length {model.d}")
    if not np.isfinite(vec).all():
        raise ValueError("vector must contain only finite values")
    post, _ = _posterior_rows(vec.reshape(1, -1), model.weights,
                              model.means, model.stds)
    return post[0]
