"""Reference comparators: two-view CCA and the two ablation presets.

The presets are configuration constructors, not separate solvers: the
structure-only variant zeroes the dependence weight, the
dependence-only (KDM-like) variant zeroes both structure weights.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import NumericError, ValidationError
from .numerics import as_matrix
from .solver import SolverConfig


@dataclass(frozen=True)
class BaselineModel:
    """Linear two-view baseline: projections plus centering offsets."""

    METHODS = ("cca",)

    method: str
    w1: np.ndarray  # d1 x d
    w2: np.ndarray  # d2 x d
    mean1: np.ndarray
    mean2: np.ndarray
    correlations: np.ndarray  # top-d canonical correlations, descending
    regularization: tuple[float, float]


def _inv_sqrt(cov: np.ndarray, ridge: float, view: str) -> np.ndarray:
    vals, vecs = np.linalg.eigh((cov + cov.T) / 2.0 + ridge * np.eye(cov.shape[0]))
    floor = 1e-12 * max(vals.max(), 1.0)
    if vals.min() <= floor:
        raise NumericError(
            f"covariance of {view} is numerically singular; pass ridge > 0"
        )
    return (vecs / np.sqrt(vals)) @ vecs.T


def fit_cca(x1, x2, d: int, ridge: float | None = None) -> BaselineModel:
    """Regularized two-view CCA via the whitened cross-covariance SVD.

    ridge=None scales a 1e-6 jitter by each view's mean covariance
    eigenvalue (covariances are singular whenever d_v >= n); an explicit
    ridge is used as given on both views. Canonical correlations come
    back sorted descending in [0, 1] up to roundoff.
    """
    x1 = as_matrix(x1, "view-1 features")
    x2 = as_matrix(x2, "view-2 features")
    n = x1.shape[0]
    if x2.shape[0] != n:
        raise ValidationError(f"views must be row-aligned: {n} vs {x2.shape[0]}")
    if not 1 <= d <= min(x1.shape[1], x2.shape[1]):
        raise ValidationError(
            f"d={d} must lie in [1, min({x1.shape[1]}, {x2.shape[1]})]"
        )
    if n <= d:
        raise ValidationError(f"need more samples than canonical pairs: n={n}, d={d}")

    mean1 = x1.mean(axis=0)
    mean2 = x2.mean(axis=0)
    x1c = x1 - mean1
    x2c = x2 - mean2
    c11 = x1c.T @ x1c / (n - 1)
    c22 = x2c.T @ x2c / (n - 1)
    c12 = x1c.T @ x2c / (n - 1)

    if ridge is None:
        r1 = 1e-6 * float(np.trace(c11)) / c11.shape[0]
        r2 = 1e-6 * float(np.trace(c22)) / c22.shape[0]
    else:
        if ridge < 0:
            raise ValidationError(f"ridge must be >= 0, got {ridge}")
        r1 = r2 = float(ridge)

    isqrt1 = _inv_sqrt(c11, r1, "view 1")
    isqrt2 = _inv_sqrt(c22, r2, "view 2")
    u, s, vt = np.linalg.svd(isqrt1 @ c12 @ isqrt2, full_matrices=False)
    w1 = isqrt1 @ u[:, :d]
    w2 = isqrt2 @ vt[:d].T
    # one shared sign per canonical pair keeps the correlation positive
    lead = np.abs(w1).argmax(axis=0)
    signs = np.sign(w1[lead, np.arange(d)])
    signs[signs == 0] = 1.0
    w1 = w1 * signs
    w2 = w2 * signs
    return BaselineModel(
        method="cca",
        w1=w1,
        w2=w2,
        mean1=mean1,
        mean2=mean2,
        correlations=np.clip(s[:d], 0.0, None),
        regularization=(r1, r2),
    )


def project_baseline(model: BaselineModel, x, modality: int) -> np.ndarray:
    """Center with the training offsets and project one view."""
    if modality not in (1, 2):
        raise ValidationError(f"modality index must be 1 or 2, got {modality}")
    x = as_matrix(x, "features")
    w = model.w1 if modality == 1 else model.w2
    mean = model.mean1 if modality == 1 else model.mean2
    if x.shape[1] != w.shape[0]:
        raise ValidationError(
            f"modality {modality} expects {w.shape[0]} features, got {x.shape[1]}"
        )
    return (x - mean) @ w


PRESETS = ("ckd", "ckd-beta0", "kdm")


def preset_config(name: str, base: SolverConfig) -> SolverConfig:
    """Ablation presets over a base configuration.

    "ckd" returns the base unchanged, "ckd-beta0" keeps only the
    structure-preserving terms, "kdm" keeps only kernel-dependence
    maximization.
    """
    if name == "ckd":
        return base
    if name == "ckd-beta0":
        return replace(base, beta=0.0)
    if name == "kdm":
        return replace(base, alpha1=0.0, alpha2=0.0)
    raise ValidationError(f"unknown preset {name!r}; expected one of {PRESETS}")
