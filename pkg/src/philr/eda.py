"""Scatter-matrix exponentials for exponential discriminant analysis.

Both scatter matrices come factored, ``S_B = H_B H_B^T`` and
``S_W = H_W H_W^T``, so their exponentials reduce to phi_1 of small Gram
matrices::

    exp(H H^T) = I + H phi_1(H^T H) H^T.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .core import DimensionMismatch, as_dense
from .lowrank import LowRankPhiFamily, build_phi_family
from .scr import ScrFactors


class EmptyClass(DimensionMismatch):
    """A class index in ``range(classes)`` has no samples."""


@dataclass(frozen=True, eq=False)
class LabeledData:
    """Samples as columns of ``data`` (features by samples) with integer labels."""

    data: np.ndarray
    labels: np.ndarray
    classes: int

    @classmethod
    def build(cls, data, labels, classes=None, scale_columns=True):
        """Validate and optionally scale every sample column to unit 2-norm."""
        data = as_dense(data, "data").copy()
        labels = np.asarray(labels)
        if labels.ndim != 1 or labels.shape[0] != data.shape[1]:
            raise DimensionMismatch(
                f"{labels.shape} labels for {data.shape[1]} samples")
        if not np.issubdtype(labels.dtype, np.integer):
            if np.any(labels != np.round(labels)):
                raise ValueError("labels must be integers")
            labels = labels.astype(int)
        if classes is None:
            classes = int(labels.max()) + 1 if labels.size else 0
        if labels.size and (labels.min() < 0 or labels.max() >= classes):
            raise ValueError(f"labels must lie in [0, {classes})")
        counts = np.bincount(labels, minlength=classes)
        if np.any(counts == 0):
            raise EmptyClass(f"classes {np.flatnonzero(counts == 0).tolist()} are empty")
        if scale_columns:
            norms = np.linalg.norm(data, axis=0)
            data /= np.where(norms > 0, norms, 1.0)
        return cls(data, labels, int(classes))

    @property
    def counts(self):
        return np.bincount(self.labels, minlength=self.classes)


@dataclass(frozen=True, eq=False)
class ScatterFactors:
    H_B: np.ndarray
    H_W: np.ndarray

    @property
    def S_B(self):
        return self.H_B @ self.H_B.T

    @property
    def S_W(self):
        return self.H_W @ self.H_W.T


def scatter_factors(d: LabeledData) -> ScatterFactors:
    """Between-class factor ``sqrt(m_j)(c_j - c)`` and within-class centered data.

    ``H_W`` keeps the sample order of ``d.data``.
    """
    counts = d.counts
    if np.any(counts == 0):
        raise EmptyClass("every class needs at least one sample")
    centroids = np.stack([d.data[:, d.labels == j].mean(axis=1)
                          for j in range(d.classes)], axis=1)
    # count-weighted centroid mean: equals the data mean, and is exact for one class
    c = centroids @ counts / counts.sum()
    H_W = d.data - centroids[:, d.labels]
    H_B = (centroids - c[:, None]) * np.sqrt(counts)
    return ScatterFactors(H_B, H_W)


def exp_scatter(H, threshold=None) -> LowRankPhiFamily:
    """``exp(H H^T)`` as the family ``X = Y = H``, ``T = I``, ``p = 0``.

    ``materialize(fam, 0)`` gives ``I + H phi_1(H^T H) H^T``.
    """
    H = as_dense(H, "H")
    k = H.shape[1]
    if threshold is not None and k > threshold:
        raise DimensionMismatch(f"factor width {k} exceeds {threshold}")
    Hs = sp.csc_matrix(H)
    return build_phi_family(ScrFactors.from_factors(Hs, np.eye(k), Hs), p=0)
