"""Alternating eigendecomposition training loop for the CKD model.

Each iteration recomputes the row-reweighting matrices for the l2,1
penalty, then updates each projection in turn as the top eigenvectors
of its quadratic-form matrix. The tracked objective is the genuine one
(true l2,1 norm, not the reweighted surrogate), so the monotone-descent
guarantee is checked on what the model actually minimizes.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DegenerateConfigError, ValidationError
from .numerics import as_matrix, center_columns, fix_column_signs, top_eigvecs
from .semgraph import build_graph, validate_labels


@dataclass(frozen=True)
class SolverConfig:
    """Hyperparameters of one training run.

    alpha1/alpha2 weight the per-modality structure-preserving terms,
    lambda1/lambda2 the row-sparsity penalties inside them, and beta the
    three kernel-dependence traces (beta=0 drops them entirely;
    alpha1=alpha2=0 leaves dependence maximization only).
    """

    d: int
    alpha1: float = 0.01
    alpha2: float = 0.01
    lambda1: float = 0.01
    lambda2: float = 0.01
    beta: float = 1.0
    max_iters: int = 100
    rel_tol: float = 1e-6
    row_norm_eps: float = 1e-8
    seed: int = 0

    def validate(self) -> None:
        if self.d < 1:
            raise ValidationError(f"subspace dimension must be >= 1, got {self.d}")
        for name in ("alpha1", "alpha2", "lambda1", "lambda2", "beta"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.max_iters < 1:
            raise ValidationError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.rel_tol <= 0:
            raise ValidationError(f"rel_tol must be > 0, got {self.rel_tol}")
        if self.row_norm_eps <= 0:
            raise ValidationError(f"row_norm_eps must be > 0, got {self.row_norm_eps}")
        if self.beta == 0 and self.alpha1 == 0 and self.alpha2 == 0:
            raise DegenerateConfigError(
                "beta, alpha1 and alpha2 are all zero: every term of the "
                "objective vanishes and any orthonormal basis would be optimal"
            )

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ModelParams:
    """Fitted projections plus the training centering offsets."""

    p1: np.ndarray  # d1 x d, orthonormal columns
    p2: np.ndarray  # d2 x d, orthonormal columns
    mean1: np.ndarray  # training column means of modality 1
    mean2: np.ndarray  # training column means of modality 2
    config: SolverConfig


@dataclass(frozen=True)
class TraceRecord:
    """One iteration's objective value and term breakdown."""

    iteration: int
    objective: float
    hsic_term: float
    laplacian_term_1: float
    laplacian_term_2: float
    sparsity_term_1: float
    sparsity_term_2: float
    orth_residual: float

    FIELDS = (
        "iteration",
        "objective",
        "hsic_term",
        "laplacian_term_1",
        "laplacian_term_2",
        "sparsity_term_1",
        "sparsity_term_2",
        "orth_residual",
    )

    def row(self) -> tuple:
        return tuple(getattr(self, f) for f in self.FIELDS)


@dataclass
class TraceLog:
    """Per-iteration diagnostics of one fit; record 0 is the initial state."""

    records: list[TraceRecord] = field(default_factory=list)
    converged: bool = False
    projections: list[tuple[np.ndarray, np.ndarray]] | None = None

    @property
    def objectives(self) -> np.ndarray:
        return np.array([r.objective for r in self.records])

    @property
    def iterations(self) -> int:
        return len(self.records) - 1


def l21_norm(p) -> float:
    """Sum of Euclidean row norms (row-sparsity-promoting matrix norm)."""
    m = as_matrix(p, "projection")
    return float(np.linalg.norm(m, axis=1).sum())


def reweight_matrix(p, eps: float = 1e-8) -> np.ndarray:
    """Diagonal surrogate weights diag(1 / (2 max(||row_i||, eps))).

    eps guards rows whose norm underflows to zero, where the exact
    reweighting would be undefined; it keeps the weight finite while
    preserving the pressure toward row sparsity.
    """
    m = as_matrix(p, "projection")
    if eps <= 0:
        raise ValidationError(f"eps must be > 0, got {eps}")
    norms = np.linalg.norm(m, axis=1)
    return np.diag(1.0 / (2.0 * np.maximum(norms, eps)))


def _assemble_from_parts(cross, gy, lapx, d_diag, p_other, alpha, lam, beta):
    """Quadratic-form matrix for one modality from precomputed pieces.

    cross = X_own^T H X_other, gy = X_own^T H Y, lapx = X_own^T L X_own.
    """
    m = cross @ p_other
    q = beta * (m @ m.T + gy @ gy.T) - alpha * lapx - (alpha * lam) * d_diag
    return (q + q.T) / 2.0


def assemble_q(v: int, x1, x2, y, p_other, lap, d_v, cfg: SolverConfig) -> np.ndarray:
    """Symmetric matrix whose top-d eigenvectors update P_v.

    The two dependence-derived terms carry the beta weight; beta=1 is
    the plain update, beta=0 removes them for the structure-only
    configuration.
    """
    if v not in (1, 2):
        raise ValidationError(f"modality index must be 1 or 2, got {v}")
    x1 = as_matrix(x1, "modality-1 features")
    x2 = as_matrix(x2, "modality-2 features")
    y = as_matrix(y, "labels")
    p_other = as_matrix(p_other, "other-modality projection")
    lap = as_matrix(lap, "laplacian")
    d_v = as_matrix(d_v, "reweighting matrix")
    n = x1.shape[0]
    if x2.shape[0] != n or y.shape[0] != n or lap.shape != (n, n):
        raise ValidationError("features, labels and laplacian must share the sample count")
    x_own, x_other = (x1, x2) if v == 1 else (x2, x1)
    alpha = cfg.alpha1 if v == 1 else cfg.alpha2
    lam = cfg.lambda1 if v == 1 else cfg.lambda2
    if p_other.shape[0] != x_other.shape[1]:
        raise ValidationError(
            f"projection rows ({p_other.shape[0]}) must match other-modality "
            f"feature count ({x_other.shape[1]})"
        )
    if d_v.shape != (x_own.shape[1], x_own.shape[1]):
        raise ValidationError(
            f"reweighting matrix must be {x_own.shape[1]}x{x_own.shape[1]}, got {d_v.shape}"
        )
    xoc = center_columns(x_own)
    xtc = center_columns(x_other)
    cross = xoc.T @ xtc
    gy = xoc.T @ y
    lapx = x_own.T @ (lap @ x_own)
    return _assemble_from_parts(cross, gy, lapx, d_v, p_other, alpha, lam, cfg.beta)


def objective(x1, x2, y, p1, p2, lap, cfg: SolverConfig) -> tuple[float, dict[str, float]]:
    """True objective value and its additive term breakdown.

    The sparsity terms use the genuine l2,1 norm rather than the
    reweighted trace surrogate, so the returned sequence is the one the
    monotone-descent guarantee speaks about. Breakdown values carry
    their weights and sum to the total.
    """
    x1 = as_matrix(x1, "modality-1 features")
    x2 = as_matrix(x2, "modality-2 features")
    y = as_matrix(y, "labels")
    p1 = as_matrix(p1, "projection 1")
    p2 = as_matrix(p2, "projection 2")
    x1c = center_columns(x1)
    x2c = center_columns(x2)
    # tr(H K1 H K2) = ||P1^T (X1^T H X2) P2||_F^2 and analogously for the
    # label kernel; one H suffices since H is an idempotent projector.
    t12 = float(np.sum((p1.T @ (x1c.T @ x2c) @ p2) ** 2))
    t1y = float(np.sum((p1.T @ (x1c.T @ y)) ** 2))
    t2y = float(np.sum((p2.T @ (x2c.T @ y)) ** 2))
    z1 = x1 @ p1
    z2 = x2 @ p2
    lap1 = float(np.sum(z1 * (lap @ z1)))
    lap2 = float(np.sum(z2 * (lap @ z2)))
    terms = {
        "hsic": -cfg.beta * (t12 + t1y + t2y),
        "laplacian_1": cfg.alpha1 * lap1,
        "laplacian_2": cfg.alpha2 * lap2,
        "sparsity_1": cfg.alpha1 * cfg.lambda1 * l21_norm(p1),
        "sparsity_2": cfg.alpha2 * cfg.lambda2 * l21_norm(p2),
    }
    return float(sum(terms.values())), terms


def _orth_residual(p: np.ndarray) -> float:
    d = p.shape[1]
    return float(np.linalg.norm(p.T @ p - np.eye(d)))


def _cross_sign_align(p_new: np.ndarray, p_other: np.ndarray, cross: np.ndarray) -> np.ndarray:
    """Flip columns of p_new so paired coordinates of the two views
    correlate non-negatively on the training data.

    cross is X_own_centered^T X_other_centered. The objective, the
    kernels, and the eigenvector property are all invariant under
    per-view column sign flips, so the sign choice is free; fixing
    diag(P_own^T cross P_other) >= 0 pins it deterministically. Without
    this, each view's own sign convention can leave a subspace
    direction anti-correlated across views, which silently ruins
    per-coordinate cross-view similarity at retrieval time.
    """
    signs = np.sign(np.einsum("ij,ik,kj->j", p_new, cross, p_other))
    signs[signs == 0] = 1.0
    return p_new * signs


def fit(
    x1,
    x2,
    y,
    cfg: SolverConfig,
    init: str = "supervised",
    track_projections: bool = False,
) -> tuple[ModelParams, TraceLog]:
    """Train the two projections by alternating eigen-updates.

    Features are zero-centered column-wise (offsets are stored on the
    model), the semantic graph is built once, and the loop runs update
    order D1, D2, P1 (with the current P2), P2 (with the new P1) until
    the relative objective change falls below ``cfg.rel_tol`` or
    ``cfg.max_iters`` is hit.

    init="supervised" seeds each projection from the label-dependence
    term alone; init="random" draws a seeded orthonormal matrix instead
    (useful for robustness checks).

    After every update the fresh projection's column signs are aligned
    against the other view (see _cross_sign_align): a pure sign
    convention, invisible to the objective, that keeps paired subspace
    coordinates positively correlated across views so cross-view
    similarity ranking works.

    track_projections=True stores a copy of (P1, P2) per iteration on
    the returned trace for diagnostic use.
    """
    x1 = as_matrix(x1, "modality-1 features")
    x2 = as_matrix(x2, "modality-2 features")
    y = validate_labels(y)
    n = x1.shape[0]
    if x2.shape[0] != n or y.shape[0] != n:
        raise ValidationError(
            f"row-aligned inputs required: {n}, {x2.shape[0]}, {y.shape[0]} samples"
        )
    if n < 2:
        raise ValidationError("need at least 2 samples")
    cfg.validate()
    if cfg.d > min(x1.shape[1], x2.shape[1]):
        raise ValidationError(
            f"d={cfg.d} exceeds the smaller feature dimension "
            f"min({x1.shape[1]}, {x2.shape[1]})"
        )

    mean1 = x1.mean(axis=0)
    mean2 = x2.mean(axis=0)
    x1c = x1 - mean1
    x2c = x2 - mean2

    lap = build_graph(y).laplacian
    cross = x1c.T @ x2c
    g1y = x1c.T @ y
    g2y = x2c.T @ y
    lapx1 = x1c.T @ (lap @ x1c)
    lapx1 = (lapx1 + lapx1.T) / 2.0
    lapx2 = x2c.T @ (lap @ x2c)
    lapx2 = (lapx2 + lapx2.T) / 2.0

    if init == "supervised":
        p1 = top_eigvecs(g1y @ g1y.T, cfg.d)
        p2 = top_eigvecs(g2y @ g2y.T, cfg.d)
    elif init == "random":
        rng = np.random.default_rng(cfg.seed)
        p1 = fix_column_signs(np.linalg.qr(rng.standard_normal((x1.shape[1], cfg.d)))[0])
        p2 = fix_column_signs(np.linalg.qr(rng.standard_normal((x2.shape[1], cfg.d)))[0])
    else:
        raise ValidationError(f"unknown init {init!r}; use 'supervised' or 'random'")
    p2 = _cross_sign_align(p2, p1, cross.T)

    log = TraceLog(projections=[] if track_projections else None)

    def record(k: int, value: float, terms: dict[str, float]) -> None:
        log.records.append(
            TraceRecord(
                iteration=k,
                objective=value,
                hsic_term=terms["hsic"],
                laplacian_term_1=terms["laplacian_1"],
                laplacian_term_2=terms["laplacian_2"],
                sparsity_term_1=terms["sparsity_1"],
                sparsity_term_2=terms["sparsity_2"],
                orth_residual=max(_orth_residual(p1), _orth_residual(p2)),
            )
        )
        if track_projections:
            log.projections.append((p1.copy(), p2.copy()))

    t_prev, terms = objective(x1c, x2c, y, p1, p2, lap, cfg)
    record(0, t_prev, terms)

    for k in range(1, cfg.max_iters + 1):
        d1 = reweight_matrix(p1, cfg.row_norm_eps)
        d2 = reweight_matrix(p2, cfg.row_norm_eps)
        q1 = _assemble_from_parts(cross, g1y, lapx1, d1, p2, cfg.alpha1, cfg.lambda1, cfg.beta)
        p1 = _cross_sign_align(top_eigvecs(q1, cfg.d), p2, cross)
        q2 = _assemble_from_parts(cross.T, g2y, lapx2, d2, p1, cfg.alpha2, cfg.lambda2, cfg.beta)
        p2 = _cross_sign_align(top_eigvecs(q2, cfg.d), p1, cross.T)
        t_new, terms = objective(x1c, x2c, y, p1, p2, lap, cfg)
        record(k, t_new, terms)
        if abs(t_new - t_prev) <= cfg.rel_tol * max(1.0, abs(t_prev)):
            log.converged = True
            break
        t_prev = t_new

    params = ModelParams(p1=p1, p2=p2, mean1=mean1, mean2=mean2, config=cfg)
    return params, log


def project(params: ModelParams, x, modality: int) -> np.ndarray:
    """Map new samples of one modality into the learned subspace.

    Subtracts the training column means of that modality, then applies
    its projection.
    """
    if modality not in (1, 2):
        raise ValidationError(f"modality index must be 1 or 2, got {modality}")
    x = as_matrix(x, "features")
    p = params.p1 if modality == 1 else params.p2
    mean = params.mean1 if modality == 1 else params.mean2
    if x.shape[1] != p.shape[0]:
        raise ValidationError(
            f"modality {modality} expects {p.shape[0]} features, got {x.shape[1]}"
        )
    return (x - mean) @ p
