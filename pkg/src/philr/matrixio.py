"""Matrix Market and CSV input/output."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from .core import IOFailure, as_sparse


def read_matrix(path) -> sp.csc_matrix:
    """Read a real Matrix Market file (coordinate or array) as CSC."""
    try:
        M = scipy.io.mmread(str(path))
    except (OSError, ValueError, IndexError, TypeError) as exc:
        raise IOFailure(f"cannot read Matrix Market file {path}: {exc}") from exc
    if np.iscomplexobj(M.data if sp.issparse(M) else M):
        raise IOFailure(f"{path}: only real matrices are supported")
    return as_sparse(M)


def read_vector(path) -> np.ndarray:
    """Read a vector from Matrix Market array format or whitespace text."""
    path = Path(path)
    try:
        with open(path) as fh:
            head = fh.readline()
        if head.startswith("%%MatrixMarket"):
            v = scipy.io.mmread(str(path))
            v = v.toarray() if sp.issparse(v) else np.asarray(v)
        else:
            v = np.loadtxt(path, ndmin=1)
    except (OSError, ValueError) as exc:
        raise IOFailure(f"cannot read vector {path}: {exc}") from exc
    v = np.asarray(v, dtype=float)
    if v.ndim == 2 and 1 in v.shape:
        v = v.ravel()
    if v.ndim != 1:
        raise IOFailure(f"{path} does not hold a vector (shape {v.shape})")
    return v


def write_sparse(path, A):
    try:
        scipy.io.mmwrite(str(path), sp.coo_matrix(A), field="real",
                         precision=17, symmetry="general")
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc


def write_dense(path, M):
    try:
        scipy.io.mmwrite(str(path), np.atleast_2d(np.asarray(M, dtype=float)),
                         field="real", precision=17, symmetry="general")
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc


def read_labeled_csv(path, label_column="label"):
    """Read samples (one per row) and an integer label column.

    Returns ``(data, labels)`` with ``data`` laid out features by samples.
    The first row must be a header naming ``label_column``.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise IOFailure(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    if label_column not in header:
        raise IOFailure(f"{path} has no {label_column!r} column")
    li = header.index(label_column)
    try:
        body = np.array([[float(c) for c in r] for r in rows[1:]])
    except ValueError as exc:
        raise IOFailure(f"{path}: non-numeric entry ({exc})") from exc
    if body.ndim != 2 or body.shape[0] == 0 or body.shape[1] != len(header):
        raise IOFailure(f"{path}: ragged or empty table")
    labels = body[:, li]
    if np.any(labels != np.round(labels)):
        raise IOFailure(f"{path}: labels must be integers")
    data = np.delete(body, li, axis=1).T
    if not np.all(np.isfinite(data)):
        raise IOFailure(f"{path}: non-finite feature values")
    return data, labels.astype(int)


def write_labeled_csv(path, data, labels, label_column="label"):
    """Inverse of ``read_labeled_csv`` (used to prepare demo inputs)."""
    data = np.asarray(data)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"f{i}" for i in range(data.shape[0])] + [label_column])
        for j in range(data.shape[1]):
            w.writerow([repr(float(x)) for x in data[:, j]] + [int(labels[j])])
