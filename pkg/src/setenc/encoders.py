"""Fixed-length set encodings over a trained codebook or mixture.

Every encoder maps an InstanceSet (n vectors in R^d, n may be 0) to one
vector whose length depends only on the model:

  d3     erf of the standardized gap between the set's per-cluster
         statistics and the codebook's, block-normalized then globally
         normalized; length d*K.
  vlad   per-cluster residual sums with the same normalization; length d*K.
  fv     mixture gradient components f_mu and f_sigma (optionally f_w),
         signed square root by default, then global L2; length 2*d*K (+K).
  hybrid independently encoded parts, concatenated and renormalized.

Encodings have unit global norm unless degenerate (all-zero raw statistics,
e.g. an empty set), in which case the zero vector is returned and flagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from . import _kernels
from .codebook import Codebook, GmmModel, InstanceSet, _posterior_rows

_SQRT2 = math.sqrt(2.0)

Layout = tuple[tuple[str, int, int], ...]


@dataclass(frozen=True, eq=False)
class Encoding:
    """A fixed-length encoding plus its block layout.

    layout is an ordered tuple of (tag, block_count, block_length); the
    values length always equals the sum of count * length. Non-degenerate
    encodings have unit L2 norm (checked to 1e-9); degenerate ones are
    exactly zero.
    """

    values: np.ndarray
    layout: Layout
    degenerate: bool = False

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        if vals.ndim != 1:
            raise ValueError("values must be 1-D")
        expected = sum(count * length for _, count, length in self.layout)
        if vals.shape[0] != expected:
            raise ValueError(
                f"layout describes {expected} values, got {vals.shape[0]}")
        norm = float(np.linalg.norm(vals))
        if self.degenerate:
            if norm != 0.0:
                raise ValueError("degenerate encodings must be all zero")
        elif abs(norm - 1.0) > 1e-9:
            raise ValueError(f"encoding norm {norm!r} is not 1 within 1e-9")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "layout", tuple(self.layout))


@dataclass(frozen=True)
class DimensionPlan:
    """K choices that give every encoder the same output length d * target_k."""

    d: int
    target_k: int
    target_dims: int
    d3_k: int
    vlad_k: int
    fv_k: int
    hybrid: tuple[tuple[str, int], ...]


def _as_instance_set(y) -> InstanceSet:
    return y if isinstance(y, InstanceSet) else InstanceSet(vectors=y)


def _finish(values: np.ndarray, layout: Layout) -> Encoding:
    norm = float(np.linalg.norm(values))
    if norm == 0.0:
        return Encoding(values=values, layout=layout, degenerate=True)
    return Encoding(values=values / norm, layout=layout, degenerate=False)


def _normalize_rows(raw: np.ndarray) -> np.ndarray:
    """Scale each nonzero row to unit norm; zero rows pass through."""
    norms = np.sqrt((raw * raw).sum(axis=1))
    nz = norms > 0.0
    out = raw.copy()
    out[nz] /= norms[nz, None]
    return out


def encode_d3(y, codebook: Codebook) -> Encoding:
    """Directional-statistics encoding of a set against a codebook.

    For each cluster the hard-assigned subset's per-dimension mean mu' and
    population std sigma' give the block

        erf((mu' - mu_k) / (sqrt(2) * (sigma' + sigma_k)))

    which is normalized to unit length (empty clusters stay zero), then the
    concatenation is normalized globally. Each component's sign tracks the
    sign of mu' - mu_k.
    """
    inst = _as_instance_set(y)
    if inst.d != codebook.d:
        raise ValueError(
            f"vectors have dimension {inst.d}, codebook expects {codebook.d}")
    layout: Layout = (("d3", codebook.k, codebook.d),)
    if inst.n == 0:
        return Encoding(values=np.zeros(codebook.k * codebook.d),
                        layout=layout, degenerate=True)
    idx, _ = _kernels.nearest_centers(inst.vectors, codebook.means)
    counts, set_means, set_stds = _kernels.cluster_mean_std(
        inst.vectors, idx, codebook.k)
    args = (set_means - codebook.means) / (_SQRT2 * (set_stds + codebook.stds))
    raw = erf(args)
    raw[counts == 0] = 0.0
    return _finish(_normalize_rows(raw).ravel(), layout)


def encode_vlad(y, codebook: Codebook) -> Encoding:
    """Per-cluster residual sums with block and global normalization."""
    inst = _as_instance_set(y)
    if inst.d != codebook.d:
        raise ValueError(
            f"vectors have dimension {inst.d}, codebook expects {codebook.d}")
    layout: Layout = (("vlad", codebook.k, codebook.d),)
    if inst.n == 0:
        return Encoding(values=np.zeros(codebook.k * codebook.d),
                        layout=layout, degenerate=True)
    idx, _ = _kernels.nearest_centers(inst.vectors, codebook.means)
    raw = _kernels.vlad_sums(inst.vectors, idx, codebook.means)
    return _finish(_normalize_rows(raw).ravel(), layout)


def _fv_raw(inst: InstanceSet, model: GmmModel):
    """Raw gradient components (f_w, f_mu, f_sigma) before normalization."""
    post, _ = _posterior_rows(inst.vectors, model.weights, model.means,
                              model.stds)
    f_mu, f_sg = _kernels.fv_accumulate(inst.vectors, post, model.means,
                                        1.0 / model.stds)
    sqrt_w = np.sqrt(model.weights)
    f_w = (post.sum(axis=0) - inst.n * model.weights) / sqrt_w
    f_mu = f_mu / sqrt_w[:, None]
    f_sg = f_sg / np.sqrt(2.0 * model.weights)[:, None]
    return f_w, f_mu, f_sg


def encode_fv(y, model: GmmModel, include_weights: bool = False,
              power_normalize: bool = True) -> Encoding:
    """Mixture-gradient encoding (posterior-weighted moment residuals).

    Concatenates the per-component mean gradients f_mu and spread gradients
    f_sigma (2*d*K values); include_weights prepends the K weight gradients
    f_w. With power_normalize (default) each component passes through a
    signed square root before the global L2 normalization.
    """
    inst = _as_instance_set(y)
    if inst.d != model.d:
        raise ValueError(
            f"vectors have dimension {inst.d}, model expects {model.d}")
    layout: Layout = (("fv_mu", model.k, model.d),
                      ("fv_sigma", model.k, model.d))
    if include_weights:
        layout = (("fv_w", 1, model.k),) + layout
    total = sum(count * length for _, count, length in layout)
    if inst.n == 0:
        return Encoding(values=np.zeros(total), layout=layout, degenerate=True)
    f_w, f_mu, f_sg = _fv_raw(inst, model)
    pieces = [f_mu.ravel(), f_sg.ravel()]
    if include_weights:
        pieces.insert(0, f_w)
    values = np.concatenate(pieces)
    if power_normalize:
        values = np.sign(values) * np.sqrt(np.abs(values))
    return _finish(values, layout)


def encode_hybrid(y, parts) -> Encoding:
    """Encode each (tag, model) part independently, concatenate, renormalize.

    Tags are 'd3', 'vlad' (Codebook models) and 'fv' (GmmModel, default
    options). The combined vector is L2-normalized again so the result has
    unit norm; it is degenerate only if every part is.
    """
    parts = list(parts)
    if not parts:
        raise ValueError("hybrid encoding needs at least one part")
    inst = _as_instance_set(y)
    values = []
    layout: Layout = ()
    for tag, model in parts:
        if tag == "d3":
            enc = encode_d3(inst, model)
        elif tag == "vlad":
            enc = encode_vlad(inst, model)
        elif tag == "fv":
            enc = encode_fv(inst, model)
        else:
            raise ValueError(f"unknown encoder tag {tag!r}")
        values.append(enc.values)
        layout = layout + enc.layout
    return _finish(np.concatenate(values), layout)


def plan_dimensions(d: int, target_k: int) -> DimensionPlan:
    """K choices that dimension-match the encoders at d * target_k outputs.

    d3 and vlad use target_k clusters; fv uses target_k / 2 components
    (two gradient blocks per component); the hybrid splits the budget as
    target_k / 2 clusters of d3 plus target_k / 4 components of fv.
    target_k must be divisible by 4.
    """
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise ValueError("d must be a positive integer")
    if not isinstance(target_k, (int, np.integer)) or target_k < 4 \
            or target_k % 4 != 0:
        raise ValueError("target_k must be a positive multiple of 4")
    return DimensionPlan(
        d=int(d),
        target_k=int(target_k),
        target_dims=int(d) * int(target_k),
        d3_k=int(target_k),
        vlad_k=int(target_k),
        fv_k=int(target_k) // 2,
        hybrid=(("d3", int(target_k) // 2), ("fv", int(target_k) // 4)),
    )
