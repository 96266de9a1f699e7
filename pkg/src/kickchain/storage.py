"""On-disk formats.

Text tables::

    # kickchain-table 1
    # meta {"code_version": "...", "master_seed": 0, ...}
    # columns value realization
    3.5871234912361234 0
    ...

Floats are written with ``repr`` (shortest string that round-trips), so a
reload reproduces the in-memory values exactly and the output does not
depend on the locale.

Binary matrices: the 8-byte magic ``KCMAT001``, rows and columns as
little-endian uint64, then the entries in row-major order as little-endian
complex128 (real, imaginary pairs of float64).
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from . import __version__
from .errors import KickchainError

TABLE_MAGIC = "# kickchain-table 1"
MATRIX_MAGIC = b"KCMAT001"


class StorageError(KickchainError, OSError):
    """Unreadable, truncated or foreign file."""


def _format(value) -> str:
    if isinstance(value, str):
        if not value or any(c.isspace() for c in value):
            raise ValueError(f"text cell {value!r} must be a nonempty token")
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_table(path, columns: dict, meta: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    sizes = {a.shape[0] for a in arrays}
    if len(sizes) > 1:
        raise ValueError(f"columns have different lengths: {sizes}")
    header = {"code_version": __version__}
    header.update(meta or {})
    lines = [TABLE_MAGIC, "# meta " + json.dumps(header, sort_keys=True), "# columns " + " ".join(names)]
    as_lists = [a.tolist() for a in arrays]
    lines.extend(" ".join(_format(col[i]) for col in as_lists) for i in range(len(as_lists[0]) if as_lists else 0))
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise StorageError(f"cannot write {path}: {exc}") from exc
    return path


def read_table(path) -> tuple[dict, dict]:
    """Return ``(meta, {column: array})``; integer columns come back as int64, text as str."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise StorageError(f"cannot read {path}: {exc}") from exc
    if len(lines) < 3 or lines[0] != TABLE_MAGIC or not lines[1].startswith("# meta ") \
            or not lines[2].startswith("# columns "):
        raise StorageError(f"{path} is not a kickchain table")
    try:
        meta = json.loads(lines[1][len("# meta "):])
    except json.JSONDecodeError as exc:
        raise StorageError(f"{path}: corrupt metadata header") from exc
    names = lines[2][len("# columns "):].split()
    rows = [ln.split() for ln in lines[3:] if ln]
    if any(len(r) != len(names) for r in rows):
        raise StorageError(f"{path}: ragged rows")
    columns = {}
    for k, name in enumerate(names):
        raw = [r[k] for r in rows]
        try:
            columns[name] = np.array([int(x) for x in raw], dtype=np.int64)
        except ValueError:
            try:
                columns[name] = np.array([float(x) for x in raw])
            except ValueError:
                columns[name] = np.array(raw, dtype=str)
    return meta, columns


def write_matrix(path, matrix: np.ndarray) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    m = np.ascontiguousarray(matrix, dtype="<c16")
    if m.ndim != 2:
        raise ValueError("expected a 2-d array")
    try:
        with open(path, "wb") as fh:
            fh.write(MATRIX_MAGIC)
            fh.write(struct.pack("<QQ", *m.shape))
            fh.write(m.tobytes(order="C"))
    except OSError as exc:
        raise StorageError(f"cannot write {path}: {exc}") from exc
    return path


def read_matrix(path) -> np.ndarray:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise StorageError(f"cannot read {path}: {exc}") from exc
    if data[:8] != MATRIX_MAGIC or len(data) < 24:
        raise StorageError(f"{path} is not a kickchain matrix file")
    rows, cols = struct.unpack("<QQ", data[8:24])
    if len(data) != 24 + 16 * rows * cols:
        raise StorageError(f"{path}: truncated matrix payload")
    return np.frombuffer(data, dtype="<c16", offset=24).reshape(rows, cols).astype(complex)


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise StorageError(f"cannot write {path}: {exc}") from exc
    return path


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise StorageError(f"cannot read {path}: {exc}") from exc
