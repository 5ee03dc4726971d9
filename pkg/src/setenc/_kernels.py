"""Numeric kernels with paired numba and numpy implementations.

The hot loops live here: nearest-center assignment, per-cluster moment
accumulation, residual sums, diagonal-mixture log densities, and gradient
accumulation. Each exists twice, as an explicit-loop version compiled with
numba.njit when available and as a vectorized numpy fallback. Set
SETENC_NUMBA=0 in the environment to force the fallback; the choice is made
once at import and exposed as BACKEND.

Parity notes. nearest_centers, cluster_mean_std, vlad_sums and gmm_log_joint
accumulate in the same floating-point order in both backends and agree
bitwise. fv_accumulate reduces over rows with numpy's pairwise summation in
the fallback, so there the backends agree to roughly 1e-12 relative rather
than bitwise. Every kernel is single-threaded and run-to-run deterministic
within a backend; fastmath stays off.
"""

from __future__ import annotations

import os

import numpy as np

# Rows per chunk in the fallback assignment kernel; bounds the (rows, K)
# scratch distance matrix.
_CHUNK_ELEMS = 1 << 22


def _env_wants_numba() -> bool:
    flag = os.environ.get("SETENC_NUMBA", "").strip().lower()
    return flag not in {"0", "false", "off", "no"}


def _load_numba():
    try:
        import numba
    except ImportError:
        return None
    return numba


# --------------------------------------------------------------------------
# Explicit-loop bodies. Plain Python here; numba compiles these unchanged.
# --------------------------------------------------------------------------

def _nearest_centers_loop(points, centers):
    n, d = points.shape
    k_count = centers.shape[0]
    idx = np.empty(n, dtype=np.int64)
    best = np.empty(n, dtype=np.float64)
    for i in range(n):
        best_k = 0
        best_d2 = np.inf
        for k in range(k_count):
            acc = 0.0
            for j in range(d):
                t = points[i, j] - centers[k, j]
                acc += t * t
            if acc < best_d2:
                best_d2 = acc
                best_k = k
        idx[i] = best_k
        best[i] = best_d2
    return idx, best


def _cluster_mean_std_loop(points, assign, k_count):
    n, d = points.shape
    counts = np.zeros(k_count, dtype=np.int64)
    means = np.zeros((k_count, d), dtype=np.float64)
    stds = np.zeros((k_count, d), dtype=np.float64)
    for i in range(n):
        a = assign[i]
        counts[a] += 1
        for j in range(d):
            means[a, j] += points[i, j]
    for k in range(k_count):
        if counts[k] > 0:
            for j in range(d):
                means[k, j] /= counts[k]
    for i in range(n):
        a = assign[i]
        for j in range(d):
            t = points[i, j] - means[a, j]
            stds[a, j] += t * t
    for k in range(k_count):
        if counts[k] > 0:
            for j in range(d):
                stds[k, j] = np.sqrt(stds[k, j] / counts[k])
    return counts, means, stds


def _vlad_sums_loop(points, assign, centers):
    n, d = points.shape
    k_count = centers.shape[0]
    out = np.zeros((k_count, d), dtype=np.float64)
    for i in range(n):
        a = assign[i]
        for j in range(d):
            out[a, j] += points[i, j] - centers[a, j]
    return out


def _gmm_log_joint_loop(points, means, inv_std, comp_const):
    n, d = points.shape
    k_count = means.shape[0]
    out = np.empty((n, k_count), dtype=np.float64)
    for i in range(n):
        for k in range(k_count):
            acc = 0.0
            for j in range(d):
                t = (points[i, j] - means[k, j]) * inv_std[k, j]
                acc += t * t
            out[i, k] = comp_const[k] - 0.5 * acc
    return out


def _fv_accumulate_loop(points, post, means, inv_std):
    n, d = points.shape
    k_count = means.shape[0]
    f_mu = np.zeros((k_count, d), dtype=np.float64)
    f_sg = np.zeros((k_count, d), dtype=np.float64)
    for i in range(n):
        for k in range(k_count):
            g = post[i, k]
            for j in range(d):
                z = (points[i, j] - means[k, j]) * inv_std[k, j]
                f_mu[k, j] += g * z
                f_sg[k, j] += g * (z * z - 1.0)
    return f_mu, f_sg


# --------------------------------------------------------------------------
# Vectorized numpy fallbacks.
# --------------------------------------------------------------------------

def _nearest_centers_np(points, centers):
    n, d = points.shape
    k_count = centers.shape[0]
    idx = np.empty(n, dtype=np.int64)
    best = np.empty(n, dtype=np.float64)
    step = max(1, _CHUNK_ELEMS // max(1, k_count))
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        chunk = points[lo:hi]
        # Accumulate over dimensions one at a time so the addition order
        # matches the loop backend exactly.
        acc = np.zeros((hi - lo, k_count), dtype=np.float64)
        for j in range(d):
            t = chunk[:, j, None] - centers[None, :, j]
            acc += t * t
        sel = np.argmin(acc, axis=1)
        idx[lo:hi] = sel
        best[lo:hi] = acc[np.arange(hi - lo), sel]
    return idx, best


def _cluster_mean_std_np(points, assign, k_count):
    n, d = points.shape
    counts = np.bincount(assign, minlength=k_count).astype(np.int64)
    means = np.zeros((k_count, d), dtype=np.float64)
    np.add.at(means, assign, points)
    nz = counts > 0
    means[nz] /= counts[nz, None]
    stds = np.zeros((k_count, d), dtype=np.float64)
    dev = points - means[assign]
    np.add.at(stds, assign, dev * dev)
    stds[nz] = np.sqrt(stds[nz] / counts[nz, None])
    return counts, means, stds


def _vlad_sums_np(points, assign, centers):
    out = np.zeros_like(centers)
    np.add.at(out, assign, points - centers[assign])
    return out


def _gmm_log_joint_np(points, means, inv_std, comp_const):
    n = points.shape[0]
    d = points.shape[1]
    k_count = means.shape[0]
    acc = np.zeros((n, k_count), dtype=np.float64)
    for j in range(d):
        t = (points[:, j, None] - means[None, :, j]) * inv_std[None, :, j]
        acc += t * t
    return comp_const[None, :] - 0.5 * acc


def _fv_accumulate_np(points, post, means, inv_std):
    k_count = means.shape[0]
    f_mu = np.empty_like(means)
    f_sg = np.empty_like(means)
    for k in range(k_count):
        z = (points - means[k]) * inv_std[k]
        g = post[:, k:k + 1]
        f_mu[k] = (g * z).sum(axis=0)
        f_sg[k] = (g * (z * z - 1.0)).sum(axis=0)
    return f_mu, f_sg


_LOOPS = {
    "nearest_centers": _nearest_centers_loop,
    "cluster_mean_std": _cluster_mean_std_loop,
    "vlad_sums": _vlad_sums_loop,
    "gmm_log_joint": _gmm_log_joint_loop,
    "fv_accumulate": _fv_accumulate_loop,
}

_NUMPY_IMPLS = {
    "nearest_centers": _nearest_centers_np,
    "cluster_mean_std": _cluster_mean_std_np,
    "vlad_sums": _vlad_sums_np,
    "gmm_log_joint": _gmm_log_joint_np,
    "fv_accumulate": _fv_accumulate_np,
}

_BACKENDS: dict[str, dict] = {}


def get_backend(name: str) -> dict:
    """Return the kernel table for 'numpy' or 'numba', compiling on demand."""
    if name in _BACKENDS:
        return _BACKENDS[name]
    if name == "numpy":
        impls = dict(_NUMPY_IMPLS)
    elif name == "numba":
        numba = _load_numba()
        if numba is None:
            raise RuntimeError("numba backend requested but numba is not importable")
        impls = {key: numba.njit(cache=True)(fn) for key, fn in _LOOPS.items()}
    else:
        raise ValueError(f"unknown kernel backend {name!r}")
    _BACKENDS[name] = impls
    return impls


BACKEND = "numba" if (_env_wants_numba() and _load_numba() is not None) else "numpy"
NUMBA_ENABLED = BACKEND == "numba"

_active = get_backend(BACKEND)
nearest_centers = _active["nearest_centers"]
cluster_mean_std = _active["cluster_mean_std"]
vlad_sums = _active["vlad_sums"]
gmm_log_joint = _active["gmm_log_joint"]
fv_accumulate = _active["fv_accumulate"]
