"""Shared semantic similarity graph over training samples.

The graph edge weight between two samples is the cosine similarity of
their multi-hot label vectors, so samples sharing more classes sit
closer in the learned subspace once the Laplacian penalty is applied.
The Laplacian is the unnormalized diag(S 1) - S.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnlabeledSampleError, ValidationError
from .numerics import as_matrix


@dataclass(frozen=True)
class SemanticGraph:
    """Pairwise label-cosine similarities and their graph Laplacian."""

    similarities: np.ndarray  # n x n, symmetric, unit diagonal, in [0, 1]
    laplacian: np.ndarray  # n x n, rows sum to zero, PSD


def validate_labels(y, name: str = "labels") -> np.ndarray:
    """Check a multi-hot label matrix: binary entries, no all-zero row."""
    m = as_matrix(y, name)
    if not np.all((m == 0.0) | (m == 1.0)):
        bad = np.argwhere((m != 0.0) & (m != 1.0))[0]
        raise ValidationError(
            f"{name} must be binary; entry at row {bad[0]}, column {bad[1]} "
            f"is {m[tuple(bad)]!r}"
        )
    row_sums = m.sum(axis=1)
    if np.any(row_sums == 0):
        idx = int(np.argmax(row_sums == 0))
        raise UnlabeledSampleError(f"sample {idx} has no labels")
    return m


def cosine_similarity(yi, yj) -> float:
    """Cosine of two label vectors; in [0, 1] for binary labels."""
    a = np.asarray(yi, dtype=np.float64).ravel()
    b = np.asarray(yj, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValidationError(f"label vectors differ in length: {a.size} vs {b.size}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise UnlabeledSampleError("cannot compare an all-zero label vector")
    return float(a @ b / (na * nb))


def build_graph(y) -> SemanticGraph:
    """Build the dense semantic graph and its Laplacian from labels."""
    m = validate_labels(y)
    norms = np.linalg.norm(m, axis=1)
    s = (m @ m.T) / np.outer(norms, norms)
    s = (s + s.T) / 2.0  # exact symmetry regardless of BLAS rounding
    np.clip(s, 0.0, 1.0, out=s)
    np.fill_diagonal(s, 1.0)
    lap = np.diag(s.sum(axis=1)) - s
    s.flags.writeable = False
    lap.flags.writeable = False
    return SemanticGraph(similarities=s, laplacian=lap)
