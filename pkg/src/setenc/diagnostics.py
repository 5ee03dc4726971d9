"""Per-dimension discriminativeness diagnostics.

Each encoding dimension is quantized to 2 bits at its own quartile edges and
scored by plug-in empirical mutual information (in bits) against the class
labels. The per-dimension scores are summarized as a quantile curve and by
counts above a threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .io import atomic_write_text

_QUANTILE_GRID = tuple((i + 1) / 100.0 for i in range(100))


def quantize_2bit(column) -> np.ndarray:
    """Quartile-bin a column into levels {0, 1, 2, 3}.

    Edges are the 25th, 50th and 75th percentiles with midpoint
    interpolation; a value equal to an edge falls in the lower bin. A
    constant column lands entirely in bin 0.
    """
    col = np.ascontiguousarray(column, dtype=np.float64)
    if col.ndim != 1 or col.shape[0] < 1:
        raise ValueError("column must be 1-D and non-empty")
    if not np.isfinite(col).all():
        raise ValueError("column must contain only finite values")
    edges = np.percentile(col, [25.0, 50.0, 75.0], method="midpoint")
    return np.searchsorted(edges, col, side="left").astype(np.int64)


def mutual_information(quantized, labels) -> float:
    """Plug-in empirical mutual information in bits; zero cells contribute 0."""
    xs = np.ascontiguousarray(quantized, dtype=np.int64)
    ys = np.ascontiguousarray(labels, dtype=np.int64)
    if xs.ndim != 1 or ys.ndim != 1 or xs.shape[0] != ys.shape[0]:
        raise ValueError("quantized values and labels must be 1-D, same length")
    if xs.shape[0] < 1:
        raise ValueError("need at least one sample")
    n = xs.shape[0]
    _, x_inv = np.unique(xs, return_inverse=True)
    _, y_inv = np.unique(ys, return_inverse=True)
    joint = np.zeros((x_inv.max() + 1, y_inv.max() + 1), dtype=np.float64)
    np.add.at(joint, (x_inv, y_inv), 1.0)
    pxy = joint / n
    px = pxy.sum(axis=1)
    py = pxy.sum(axis=0)
    nz = pxy > 0.0
    ratio = pxy[nz] / (px[:, None] * py[None, :])[nz]
    return max(float((pxy[nz] * np.log2(ratio)).sum()), 0.0)


@dataclass(frozen=True, eq=False)
class MiReport:
    """Per-dimension MI scores plus their quantile summary.

    quantile_curve holds (q, mi) pairs on the grid q = 0.01 .. 1.00; it is
    non-decreasing in q by construction.
    """

    per_dimension_mi: np.ndarray
    quantile_curve: tuple[tuple[float, float], ...]

    @property
    def median_mi(self) -> float:
        return float(np.median(self.per_dimension_mi))

    def high_mi_count(self, threshold: float) -> int:
        """Number of dimensions with MI strictly above threshold."""
        return int((self.per_dimension_mi > threshold).sum())


def mi_report(encodings, labels) -> MiReport:
    """Quantize every encoding dimension and score it against the labels.

    encodings is an (N, D) matrix with N >= 2 rows; labels must contain at
    least two distinct classes, otherwise ValueError is raised (MI against
    a constant is identically zero and a report would only mislead).
    """
    enc = np.ascontiguousarray(encodings, dtype=np.float64)
    ys = np.ascontiguousarray(labels, dtype=np.int64)
    if enc.ndim != 2 or enc.shape[0] < 2:
        raise ValueError("encodings must be a 2-D matrix with at least 2 rows")
    if not np.isfinite(enc).all():
        raise ValueError("encodings must contain only finite values")
    if ys.ndim != 1 or ys.shape[0] != enc.shape[0]:
        raise ValueError("labels must be 1-D with one entry per encoding row")
    if np.unique(ys).shape[0] < 2:
        raise ValueError("labels must contain at least two distinct classes")
    mi = np.empty(enc.shape[1], dtype=np.float64)
    for j in range(enc.shape[1]):
        mi[j] = mutual_information(quantize_2bit(enc[:, j]), ys)
    curve = tuple((q, float(np.quantile(mi, q))) for q in _QUANTILE_GRID)
    mi.setflags(write=False)
    return MiReport(per_dimension_mi=mi, quantile_curve=curve)


def write_mi_csv(report: MiReport, path) -> None:
    """Write the per-dimension scores as 'dim,mi_bits' rows (LF endings)."""
    lines = ["dim,mi_bits"]
    for j, v in enumerate(report.per_dimension_mi):
        lines.append(f"{j},{v:.12g}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_quantile_csv(report: MiReport, path) -> None:
    """Write the quantile curve as 'q,mi_bits' rows (LF endings)."""
    lines = ["q,mi_bits"]
    for q, v in report.quantile_curve:
        lines.append(f"{q:.2f},{v:.12g}")
    atomic_write_text(path, "\n".join(lines) + "\n")
