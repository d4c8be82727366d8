"""Matrix and manifest file I/O.

Matrix CSV format: a header line ``# rows=<r> cols=<c>`` followed by ``r``
lines of ``c`` comma-separated decimal floats. Values are written with
Python's shortest round-trip float representation, so save/load is lossless.
All writes go through a temp-file-plus-rename so readers never observe a
partially written file.
"""

import json
import os
import tempfile

import numpy as np

from .errors import DataError


def atomic_write_text(path: str, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def atomic_write_bytes(path: str, data: bytes) -> None:
    """Write ``data`` to ``path`` via a temp file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_float(x: float) -> str:
    """Shortest decimal string that round-trips to the same float64."""
    return repr(float(x))


def save_matrix_csv(path: str, a: np.ndarray) -> None:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {a.shape}")
    lines = [f"# rows={a.shape[0]} cols={a.shape[1]}"]
    for row in a:
        lines.append(",".join(format_float(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_matrix_csv(path: str) -> np.ndarray:
    """Read a matrix CSV, validating the header, shape and finiteness."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            body = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read matrix file {path}: {exc}") from exc
    if not header.startswith("# rows=") or " cols=" not in header:
        raise DataError(f"{path}: missing '# rows=<r> cols=<c>' header")
    try:
        rows = int(header.split("rows=")[1].split()[0])
        cols = int(header.split("cols=")[1].split()[0])
    except (IndexError, ValueError) as exc:
        raise DataError(f"{path}: unparsable header {header!r}") from exc
    if rows == 0 or cols == 0:
        return np.zeros((rows, cols))
    data_lines = [ln for ln in body.splitlines() if ln.strip()]
    if len(data_lines) != rows:
        raise DataError(f"{path}: header says {rows} rows, file has {len(data_lines)}")
    try:
        a = np.array([[float(v) for v in ln.split(",")] for ln in data_lines])
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric entry: {exc}") from exc
    if a.shape != (rows, cols):
        raise DataError(f"{path}: header says {rows}x{cols}, data is {a.shape[0]}x{a.shape[1]}")
    if not np.all(np.isfinite(a)):
        raise DataError(f"{path}: matrix contains non-finite entries")
    return a


def save_manifest(path: str, manifest: dict) -> None:
    atomic_write_text(path, json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def load_manifest(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid manifest: {exc}") from exc


def save_labels(path: str, labels: np.ndarray) -> None:
    labels = np.asarray(labels, dtype=np.int64)
    atomic_write_text(path, "\n".join(str(int(v)) for v in labels) + "\n")


def load_labels(path: str) -> np.ndarray:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return np.array([int(ln) for ln in fh.read().split()], dtype=np.int64)
    except OSError as exc:
        raise DataError(f"cannot read labels {path}: {exc}") from exc
    except ValueError as exc:
        raise DataError(f"{path}: non-integer label: {exc}") from exc
