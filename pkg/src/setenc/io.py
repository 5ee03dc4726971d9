"""Binary formats, manifests, and atomic file writes.

Three little-endian container formats share a 16-byte header layout
(magic, u16 version, u16 reserved, two u32 shape fields):

  SVEC  magic 'SVEC', rows x cols float32, row-major. Instance matrices
        and batch encoding outputs.
  D3CB  magic 'D3CB', K x d, then K*d float64 means and K*d float64 stds.
  D3GM  magic 'D3GM', K x d, then K float64 weights, K*d means, K*d stds.

Reads are strict: bad magic or version, truncation, or trailing bytes raise
FormatError with the offending byte offset; values that violate model
invariants raise ValidationError. Writes reject NaN/Inf and go through a
temp file plus rename so readers never observe partial files.

A manifest is UTF-8 text, one "label<TAB>path" entry per line, with '#'
comments and blank lines ignored. Relative paths are resolved against the
manifest's own directory.
"""

from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

from .codebook import SIGMA_FLOOR, Codebook, GmmModel, InstanceSet
from .errors import FormatError, ValidationError

_HEADER = struct.Struct("<4sHHII")
FORMAT_VERSION = 1
MAGIC_SVEC = b"SVEC"
MAGIC_CODEBOOK = b"D3CB"
MAGIC_GMM = b"D3GM"

# Header field offsets, for error messages.
_OFF_MAGIC = 0
_OFF_VERSION = 4
_OFF_COLS = 12
_OFF_DATA = 16


def atomic_write_bytes(path, data: bytes) -> None:
    """Write via a temp file in the target directory, then rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp.")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def _pack_header(magic: bytes, rows: int, cols: int) -> bytes:
    return _HEADER.pack(magic, FORMAT_VERSION, 0, rows, cols)


def _parse_header(data: bytes, magic: bytes, path) -> tuple[int, int]:
    if len(data) < _OFF_DATA:
        raise FormatError(
            f"{path}: truncated header, file ends at offset {len(data)}")
    found, version, _, rows, cols = _HEADER.unpack_from(data, 0)
    if found != magic:
        raise FormatError(
            f"{path}: bad magic {found!r} at offset {_OFF_MAGIC}, "
            f"expected {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(
            f"{path}: unsupported version {version} at offset {_OFF_VERSION}")
    return rows, cols


def _check_payload(data: bytes, expected: int, path) -> None:
    total = _OFF_DATA + expected
    if len(data) < total:
        raise FormatError(
            f"{path}: truncated payload, file ends at offset {len(data)}, "
            f"expected {total} bytes")
    if len(data) > total:
        raise FormatError(f"{path}: trailing data at offset {total}")


def _require_finite_write(arr: np.ndarray, what: str) -> None:
    if not np.isfinite(arr).all():
        raise ValueError(f"refusing to write non-finite {what}")


def write_svec(path, matrix) -> None:
    """Serialize a matrix as float32 SVEC; rejects NaN/Inf (also from
    float32 overflow of float64 input)."""
    arr = np.ascontiguousarray(matrix, dtype="<f4")
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise ValueError("matrix must be 2-D with at least one column")
    _require_finite_write(arr, "matrix values")
    payload = _pack_header(MAGIC_SVEC, arr.shape[0], arr.shape[1])
    atomic_write_bytes(path, payload + arr.tobytes(order="C"))


def read_svec(path) -> np.ndarray:
    """Read an SVEC file; returns a float32 (rows, cols) array."""
    with open(path, "rb") as handle:
        data = handle.read()
    rows, cols = _parse_header(data, MAGIC_SVEC, path)
    if cols < 1:
        raise FormatError(f"{path}: zero columns at offset {_OFF_COLS}")
    _check_payload(data, 4 * rows * cols, path)
    flat = np.frombuffer(data, dtype="<f4", count=rows * cols,
                         offset=_OFF_DATA)
    return flat.reshape(rows, cols).copy()


def write_codebook(path, cb: Codebook) -> None:
    means = np.ascontiguousarray(cb.means, dtype="<f8")
    stds = np.ascontiguousarray(cb.stds, dtype="<f8")
    _require_finite_write(means, "codebook means")
    _require_finite_write(stds, "codebook stds")
    payload = _pack_header(MAGIC_CODEBOOK, cb.k, cb.d)
    atomic_write_bytes(path, payload + means.tobytes(order="C")
                       + stds.tobytes(order="C"))


def read_codebook(path) -> Codebook:
    """Read a D3CB file, validating model invariants."""
    with open(path, "rb") as handle:
        data = handle.read()
    k, d = _parse_header(data, MAGIC_CODEBOOK, path)
    if k < 1 or d < 1:
        raise FormatError(f"{path}: empty shape at offset 8")
    _check_payload(data, 16 * k * d, path)
    block = k * d
    means = np.frombuffer(data, dtype="<f8", count=block,
                          offset=_OFF_DATA).reshape(k, d).copy()
    stds = np.frombuffer(data, dtype="<f8", count=block,
                         offset=_OFF_DATA + 8 * block).reshape(k, d).copy()
    if not (np.isfinite(stds).all() and (stds >= SIGMA_FLOOR).all()):
        raise ValidationError(
            f"{path}: stds below the {SIGMA_FLOOR} floor or non-finite")
    try:
        return Codebook(means=means, stds=stds)
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def write_gmm(path, gm: GmmModel) -> None:
    weights = np.ascontiguousarray(gm.weights, dtype="<f8")
    means = np.ascontiguousarray(gm.means, dtype="<f8")
    stds = np.ascontiguousarray(gm.stds, dtype="<f8")
    for arr, what in ((weights, "weights"), (means, "means"), (stds, "stds")):
        _require_finite_write(arr, f"mixture {what}")
    payload = _pack_header(MAGIC_GMM, gm.k, gm.d)
    atomic_write_bytes(path, payload + weights.tobytes(order="C")
                       + means.tobytes(order="C") + stds.tobytes(order="C"))


def read_gmm(path) -> GmmModel:
    """Read a D3GM file, validating model invariants."""
    with open(path, "rb") as handle:
        data = handle.read()
    k, d = _parse_header(data, MAGIC_GMM, path)
    if k < 1 or d < 1:
        raise FormatError(f"{path}: empty shape at offset 8")
    block = k * d
    _check_payload(data, 8 * k + 16 * block, path)
    weights = np.frombuffer(data, dtype="<f8", count=k,
                            offset=_OFF_DATA).copy()
    means = np.frombuffer(data, dtype="<f8", count=block,
                          offset=_OFF_DATA + 8 * k).reshape(k, d).copy()
    stds = np.frombuffer(data, dtype="<f8", count=block,
                         offset=_OFF_DATA + 8 * k + 8 * block).reshape(k, d).copy()
    if not np.isfinite(weights).all() or (weights <= 0.0).any():
        raise ValidationError(f"{path}: weights must be finite and positive")
    if abs(float(weights.sum()) - 1.0) > 1e-8:
        raise ValidationError(
            f"{path}: weights sum to {float(weights.sum())!r}, not 1 "
            f"within 1e-8")
    if not (np.isfinite(stds).all() and (stds >= SIGMA_FLOOR).all()):
        raise ValidationError(
            f"{path}: stds below the {SIGMA_FLOOR} floor or non-finite")
    try:
        return GmmModel(weights=weights, means=means, stds=stds)
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


# --------------------------------------------------------------------------
# Manifests
# --------------------------------------------------------------------------

def load_manifest(path) -> list[tuple[int, str]]:
    """Parse 'label<TAB>path' lines; paths come back absolute."""
    base = os.path.dirname(os.path.abspath(os.fspath(path)))
    entries: list[tuple[int, str]] = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = stripped.split("\t")
            if len(parts) != 2:
                raise FormatError(
                    f"{path}:{lineno}: expected 'label<TAB>path', "
                    f"got {stripped!r}")
            try:
                label = int(parts[0])
            except ValueError as exc:
                raise FormatError(
                    f"{path}:{lineno}: label {parts[0]!r} is not an "
                    f"integer") from exc
            entry = parts[1]
            if not os.path.isabs(entry):
                entry = os.path.join(base, entry)
            entries.append((label, entry))
    if not entries:
        raise FormatError(f"{path}: manifest lists no entities")
    return entries


def save_manifest(path, entries) -> None:
    """Write 'label<TAB>path' lines; paths are stored as given."""
    lines = [f"{int(label)}\t{entry}" for label, entry in entries]
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_entities(manifest_path) -> list[InstanceSet]:
    """Load every manifest entry as an InstanceSet (float64), in order.

    All entries must parse as SVEC and share one vector dimension.
    """
    sets: list[InstanceSet] = []
    dim = None
    for label, entry in load_manifest(manifest_path):
        matrix = read_svec(entry).astype(np.float64)
        if dim is None:
            dim = matrix.shape[1]
        elif matrix.shape[1] != dim:
            raise ValidationError(
                f"{entry}: dimension {matrix.shape[1]} does not match "
                f"the manifest's first entry ({dim})")
        try:
            sets.append(InstanceSet(vectors=matrix, label=label))
        except ValueError as exc:
            raise ValidationError(f"{entry}: {exc}") from exc
    return sets
