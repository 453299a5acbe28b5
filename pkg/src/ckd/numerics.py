"""Dense symmetric linear-algebra primitives shared by the other modules.

All functions accept anything convertible to a 2-D float64 array and
return plain ndarrays. Eigenvector columns follow a deterministic sign
convention (largest-magnitude entry positive) so repeated runs are
bit-reproducible; within a degenerate eigenspace the basis is unique
only up to rotation.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericError, ValidationError


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float64 array, rejecting empty or non-finite input."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got ndim={m.ndim}")
    if m.size == 0:
        raise ValidationError(f"{name} must be non-empty")
    if not np.all(np.isfinite(m)):
        raise NumericError(f"{name} contains NaN or Inf entries")
    return m


def centering_matrix(n: int) -> np.ndarray:
    """The n-by-n projector I - (1/n) 1 1^T.

    Symmetric, idempotent, and annihilates constant vectors; every row
    sums to zero.
    """
    if n < 2:
        raise ValidationError(f"centering matrix needs n >= 2, got n={n}")
    return np.eye(n) - np.full((n, n), 1.0 / n)


def gram(v) -> np.ndarray:
    """Linear Gram kernel V V^T of row-wise features (n-by-n, symmetric PSD)."""
    m = as_matrix(v, "features")
    k = m @ m.T
    return (k + k.T) / 2.0


def top_eigvecs(q, d: int) -> np.ndarray:
    """Orthonormal eigenvectors of symmetric q for the d largest eigenvalues.

    The input is symmetrized defensively as (q + q^T)/2. Columns are
    ordered by descending eigenvalue, and each column's sign is fixed so
    its largest-magnitude entry (first such entry on ties) is positive.
    """
    m = as_matrix(q, "eigenproblem matrix")
    n = m.shape[0]
    if m.shape[1] != n:
        raise ValidationError(f"eigenproblem matrix must be square, got {m.shape}")
    if not 1 <= d <= n:
        raise ValidationError(f"requested d={d} eigenvectors from a {n}x{n} matrix")
    sym = (m + m.T) / 2.0
    _, vecs = np.linalg.eigh(sym)  # ascending eigenvalues
    p = vecs[:, ::-1][:, :d].copy()
    return fix_column_signs(p)


def fix_column_signs(p: np.ndarray) -> np.ndarray:
    """Flip columns in place so each largest-magnitude entry is positive."""
    lead = np.abs(p).argmax(axis=0)
    signs = np.sign(p[lead, np.arange(p.shape[1])])
    signs[signs == 0] = 1.0
    p *= signs
    return p


def center_columns(x) -> np.ndarray:
    """Subtract the per-column mean; every output column sums to zero."""
    m = as_matrix(x, "features")
    return m - m.mean(axis=0)
