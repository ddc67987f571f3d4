"""CSV and JSON interchange.

Design CSVs have a ``x1,...,xd`` header and one row per run. Lines starting
with ``#`` carry provenance metadata (``# key: value``) and are skipped when
reading.
"""

import csv
import io
import json
from pathlib import Path

import numpy as np

from .errors import ParseError


def _open_text(target, mode):
    if hasattr(target, "write") or hasattr(target, "read"):
        return target, False
    return open(Path(target), mode, newline=""), True


def format_metadata(metadata):
    return [f"# {key}: {json.dumps(value)}" for key, value in metadata.items()]


def write_matrix_csv(target, M, *, prefix="x", integer=False, metadata=None):
    M = np.asarray(M)
    if M.ndim == 1:
        M = M[:, None]
    fh, close = _open_text(target, "w")
    try:
        for line in format_metadata(metadata or {}):
            fh.write(line + "\n")
        fh.write(",".join(f"{prefix}{j + 1}" for j in range(M.shape[1])) + "\n")
        fmt = "{:d}" if integer else "{:.17g}"
        for row in M:
            fh.write(",".join(fmt.format(int(v) if integer else float(v)) for v in row) + "\n")
    finally:
        if close:
            fh.close()


def write_design_csv(target, X, metadata=None):
    write_matrix_csv(target, X, metadata=metadata)


def write_levels_csv(target, levels, metadata=None):
    write_matrix_csv(target, levels, prefix="l", integer=True, metadata=metadata)


def read_metadata(source):
    fh, close = _open_text(source, "r")
    try:
        meta = {}
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition(":")
            try:
                meta[key.strip()] = json.loads(value)
            except json.JSONDecodeError:
                meta[key.strip()] = value.strip()
        return meta
    finally:
        if close:
            fh.close()


def read_matrix_csv(source, *, integer=False):
    fh, close = _open_text(source, "r")
    try:
        text = fh.read()
    finally:
        if close:
            fh.close()
    rows = []
    header = None
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or row[0].startswith("#"):
            continue
        if header is None:
            header = row
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=lineno)
        try:
            rows.append([int(v) if integer else float(v) for v in row])
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
    if header is None:
        raise ParseError("missing header")
    dtype = np.int64 if integer else float
    return np.array(rows, dtype=dtype).reshape(len(rows), len(header))


def read_design_csv(source):
    return read_matrix_csv(source)


def read_levels_csv(source):
    return read_matrix_csv(source, integer=True)
