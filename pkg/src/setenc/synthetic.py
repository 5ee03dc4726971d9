"""Synthetic entity corpora for exercising the full pipeline.

Entities are sets of vectors drawn from a shared mixture of J base clusters.
Two regimes:

  mean-shift      every (class, cluster) pair gets its own mean offset;
                  classes separate through first-order statistics.
  variance-shift  all classes share the cluster means exactly and differ
                  only in within-cluster spread: each class has its own
                  subset of dimensions whose sigma is doubled, so any two
                  classes differ by a factor of 2 on the dimensions where
                  their patterns disagree.  A class-independent per-entity
                  location jitter (one scalar per cluster, applied to all
                  dimensions at once) keeps first-order residuals busy with
                  class-blind variation; only spread statistics separate
                  the classes.

Generation is a pure function of the parameters and seed; regenerating a
corpus is bitwise identical.
"""

from __future__ import annotations

import math
import os

import numpy as np

from .codebook import InstanceSet
from .io import save_manifest, write_svec

BASE_CLUSTERS = 4
CENTER_SCALE = 3.0
BASE_SIGMA = 1.0
MEAN_SHIFT_SCALE = 0.6
VARIANCE_FACTOR = 2.0
ENTITY_JITTER = 0.75

MODES = ("mean-shift", "variance-shift")


def spread_pattern(classes: int, dim: int) -> np.ndarray:
    """Per-class sigma multipliers, shape (classes, dim).

    Dimension j is boosted by VARIANCE_FACTOR for class j mod classes and
    left at 1 for everyone else.  With dim >= classes every class owns at
    least one boosted dimension.
    """
    boost = np.ones((classes, dim))
    for j in range(dim):
        boost[j % classes, j] = VARIANCE_FACTOR
    return boost


def generate_entities(classes: int, entities_per_class: int,
                      vectors_per_entity: int, dim: int, mode: str,
                      seed: int) -> list[InstanceSet]:
    """Draw the corpus, class-major, entities in generation order."""
    if classes < 2:
        raise ValueError("need at least 2 classes")
    if entities_per_class < 1 or vectors_per_entity < 1 or dim < 1:
        raise ValueError("counts and dimension must be positive")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, CENTER_SCALE, size=(BASE_CLUSTERS, dim))
    if mode == "mean-shift":
        offsets = rng.normal(0.0, MEAN_SHIFT_SCALE,
                             size=(classes, BASE_CLUSTERS, dim))
        class_centers = centers[None, :, :] + offsets
        boost = np.ones((classes, dim))
    else:
        class_centers = np.broadcast_to(
            centers, (classes, BASE_CLUSTERS, dim)).copy()
        boost = spread_pattern(classes, dim)
    out: list[InstanceSet] = []
    for label in range(classes):
        for _ in range(entities_per_class):
            picks = rng.integers(0, BASE_CLUSTERS, size=vectors_per_entity)
            base = class_centers[label, picks]
            if mode == "variance-shift":
                jitter = rng.normal(0.0, ENTITY_JITTER,
                                    size=(BASE_CLUSTERS, 1))
                base = base + jitter[picks]
            noise = rng.normal(0.0, 1.0, size=(vectors_per_entity, dim))
            vectors = base + (BASE_SIGMA * boost[label]) * noise
            out.append(InstanceSet(vectors=vectors, label=label))
    return out


def write_corpus(out_dir, entities, train_fraction: float = 0.0) -> None:
    """Write one SVEC per entity plus manifest.tsv into out_dir.

    With 0 < train_fraction < 1, also writes manifest-train.tsv and
    manifest-test.tsv, splitting stratified per class: the first
    ceil(fraction * count) entities of each class go to train.
    """
    if not (0.0 <= train_fraction < 1.0):
        raise ValueError("train_fraction must lie in [0, 1)")
    os.makedirs(out_dir, exist_ok=True)
    entries: list[tuple[int, str]] = []
    for i, inst in enumerate(entities):
        name = f"ent_{i:05d}.svec"
        write_svec(os.path.join(out_dir, name), inst.vectors)
        entries.append((int(inst.label), name))
    save_manifest(os.path.join(out_dir, "manifest.tsv"), entries)
    if train_fraction > 0.0:
        per_class: dict[int, list[tuple[int, str]]] = {}
        for label, name in entries:
            per_class.setdefault(label, []).append((label, name))
        train: list[tuple[int, str]] = []
        test: list[tuple[int, str]] = []
        for label in sorted(per_class):
            rows = per_class[label]
            cut = math.ceil(train_fraction * len(rows))
            train.extend(rows[:cut])
            test.extend(rows[cut:])
        save_manifest(os.path.join(out_dir, "manifest-train.tsv"), train)
        save_manifest(os.path.join(out_dir, "manifest-test.tsv"), test)
