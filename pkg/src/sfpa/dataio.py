"""Matrix ingestion (CSV and a small binary format), preprocessing
transforms, and report-friendly serialization.

The binary format is: magic bytes ``SFPA``, u32 version, u64 n, u64 p,
then n*p little-endian float64 entries in row-major order.

Note: row/column centering mildly violates the independent-entries noise
model; it is provided because real pipelines apply it anyway.
"""

from __future__ import annotations

import struct
import warnings

import numpy as np

from .exceptions import ParseError
from .kernel import check_matrix

__all__ = [
    "read_matrix_csv",
    "write_matrix_csv",
    "read_matrix_binary",
    "write_matrix_binary",
    "apply_preprocess",
    "PREPROCESS_STEPS",
]

PREPROCESS_STEPS = (
    "impute_missing_zero",
    "center_rows",
    "center_columns",
    "scale_columns_unit_variance",
)

_MAGIC = b"SFPA"
_BINARY_VERSION = 1


def read_matrix_csv(path, delimiter=",", has_header=False, missing_token=""):
    """Parse a rectangular numeric CSV into (matrix, missing mask).

    Missing cells (equal to ``missing_token`` after stripping) are stored
    as 0.0 with the mask set. Ragged rows and non-numeric fields raise
    ParseError with the 1-based line number.
    """
    rows = []
    mask_rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if lineno == 1 and has_header:
                continue
            if line == "" and width is not None:
                continue  # trailing blank line
            fields = line.split(delimiter)
            if width is None:
                width = len(fields)
            elif len(fields) != width:
                raise ParseError(
                    f"ragged row at line {lineno}: expected {width} fields, "
                    f"got {len(fields)}",
                    line=lineno,
                )
            values = np.empty(width)
            missing = np.zeros(width, dtype=bool)
            for j, field in enumerate(fields):
                token = field.strip()
                if token == missing_token:
                    values[j] = 0.0
                    missing[j] = True
                    continue
                try:
                    values[j] = float(token)
                except ValueError:
                    raise ParseError(
                        f"non-numeric field {token!r} at line {lineno}, column {j + 1}",
                        line=lineno,
                    ) from None
            rows.append(values)
            mask_rows.append(missing)
    if not rows:
        raise ParseError("no data rows found", line=1)
    matrix = np.vstack(rows)
    if not np.all(np.isfinite(matrix)):
        raise ParseError("matrix contains non-finite values")
    return matrix, np.vstack(mask_rows)


def write_matrix_csv(x, path, delimiter=","):
    """Write a matrix as plain numeric CSV with 17 significant digits."""
    x = check_matrix(x)
    with open(path, "w", encoding="utf-8") as fh:
        for row in x:
            fh.write(delimiter.join(f"{v:.17g}" for v in row))
            fh.write("\n")


def write_matrix_binary(x, path):
    x = check_matrix(x)
    n, p = x.shape
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IQQ", _BINARY_VERSION, n, p))
        fh.write(np.ascontiguousarray(x, dtype="<f8").tobytes())


def read_matrix_binary(path):
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ParseError(f"bad magic bytes {magic!r}, expected {_MAGIC!r}")
        header = fh.read(struct.calcsize("<IQQ"))
        if len(header) != struct.calcsize("<IQQ"):
            raise ParseError("truncated header")
        version, n, p = struct.unpack("<IQQ", header)
        if version != _BINARY_VERSION:
            raise ParseError(f"unsupported version {version}")
        payload = fh.read(8 * n * p)
        if len(payload) != 8 * n * p:
            raise ParseError("truncated payload")
        return np.frombuffer(payload, dtype="<f8").reshape(n, p).copy()


def apply_preprocess(x, mask=None, steps=()):
    """Apply preprocessing steps to a copy of x, in the declared order.

    Steps:
        impute_missing_zero           set masked entries to 0
        center_rows                   subtract each row's mean from the row
        center_columns                subtract the column mean vector
        scale_columns_unit_variance   divide columns by their sample std;
                                      zero-variance columns warn and pass
                                      through unscaled
    """
    x = check_matrix(x).copy()
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != x.shape:
            raise ValueError(f"mask shape {mask.shape} does not match {x.shape}")
    for step in steps:
        if step == "impute_missing_zero":
            if mask is not None:
                x[mask] = 0.0
        elif step == "center_rows":
            x -= x.mean(axis=1, keepdims=True)
        elif step == "center_columns":
            x -= x.mean(axis=0, keepdims=True)
        elif step == "scale_columns_unit_variance":
            if x.shape[0] < 2:
                warnings.warn("cannot scale columns with fewer than 2 rows", stacklevel=2)
                continue
            std = x.std(axis=0, ddof=1)
            flat = std <= 0
            if np.any(flat):
                warnings.warn(
                    f"{int(flat.sum())} zero-variance column(s) left unscaled",
                    stacklevel=2,
                )
            scale = np.where(flat, 1.0, std)
            x /= scale
        else:
            raise ValueError(f"unknown preprocessing step: {step!r}")
    return x
