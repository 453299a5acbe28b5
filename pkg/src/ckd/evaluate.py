"""Retrieval evaluation: NC ranking, average precision, MAP, CMC.

Rankings depend only on similarity order, so every metric here is
invariant under strictly monotone rescaling of the scores. Ties are
broken by ascending database index to keep reports reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .numerics import as_matrix

DEFAULT_CMC_RANKS = (5, 10, 15, 20, 25, 30)

REPORT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class RankedList:
    """One query's retrieval order (descending similarity)."""

    query_index: int
    indices: np.ndarray  # permutation of the database rows
    scores: np.ndarray  # similarity at each rank, non-increasing


@dataclass(frozen=True)
class RetrievalReport:
    """Per-query average precisions plus the aggregate MAP and CMC curve."""

    task: str  # "I2T" or "T2I"
    r: int  # evaluation depth used for AP
    n_queries: int
    n_database: int
    ap: list[float]
    mean_ap: float
    cmc: dict[int, float]


def _center_normalize(m: np.ndarray, center: bool) -> np.ndarray:
    if center:
        m = m - m.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    out = np.divide(m, norms, out=np.zeros_like(m), where=norms != 0)
    return out


def nc_similarity(a, b, center: bool = True) -> float:
    """Normalized correlation: mean-center each vector, then cosine.

    Defined as 0 when either vector is constant (zero after centering).
    center=False gives the plain cosine used for sensitivity checks.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size != b.size:
        raise ValidationError(f"vectors differ in length: {a.size} vs {b.size}")
    if center:
        a = a - a.mean()
        b = b - b.mean()
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b / (na * nb))


def rank(queries, database, similarity: str = "nc") -> list[RankedList]:
    """Order all database rows for every query, most similar first.

    similarity is "nc" (mean-centered cosine) or "cosine". Equal scores
    are resolved toward the smaller database index.
    """
    q = as_matrix(queries, "queries")
    db = as_matrix(database, "database")
    if q.shape[1] != db.shape[1]:
        raise ValidationError(
            f"feature dimensions differ: queries {q.shape[1]}, database {db.shape[1]}"
        )
    if similarity not in ("nc", "cosine"):
        raise ValidationError(f"unknown similarity {similarity!r}")
    center = similarity == "nc"
    scores = _center_normalize(q, center) @ _center_normalize(db, center).T
    order = np.argsort(-scores, axis=1, kind="stable")
    return [
        RankedList(
            query_index=i,
            indices=order[i],
            scores=scores[i, order[i]],
        )
        for i in range(q.shape[0])
    ]


def relevance(query_labels, db_labels) -> np.ndarray:
    """1 where a database row shares at least one positive class, else 0."""
    q = np.asarray(query_labels, dtype=np.float64).ravel()
    db = as_matrix(db_labels, "database labels")
    if db.shape[1] != q.size:
        raise ValidationError(
            f"label widths differ: query {q.size}, database {db.shape[1]}"
        )
    return (db @ q > 0).astype(np.int64)


def average_precision(ranked_relevance, r: int) -> float:
    """AP at depth r: mean precision over the relevant ranks in the top r.

    The normalizer is the number of relevant items inside the top r, so
    a perfect ranking scores 1 at any depth; a query with no relevant
    item in the top r scores 0. The plain running-count loop keeps the
    arithmetic identical to the textbook definition.
    """
    rel = list(ranked_relevance)
    if not 1 <= r <= len(rel):
        raise ValidationError(f"depth r={r} must lie in [1, {len(rel)}]")
    hits = 0
    total = 0.0
    for m in range(1, r + 1):
        if rel[m - 1]:
            hits += 1
            total += hits / m
    if hits == 0:
        return 0.0
    return total / hits


def map_score(ranked_relevance_lists, r: int) -> float:
    """Arithmetic mean of per-query average precision."""
    lists = list(ranked_relevance_lists)
    if not lists:
        raise ValidationError("MAP over an empty query set is undefined")
    return float(np.mean([average_precision(rel, r) for rel in lists]))


def cmc_curve(ranked_relevance_lists, ranks=DEFAULT_CMC_RANKS) -> dict[int, float]:
    """Fraction of queries with a relevant item in the top m, per m.

    Depths beyond the list length are clamped to the list length.
    """
    lists = [np.asarray(rel) for rel in ranked_relevance_lists]
    if not lists:
        raise ValidationError("CMC over an empty query set is undefined")
    curve: dict[int, float] = {}
    for m in ranks:
        m = int(m)
        if m < 1:
            raise ValidationError(f"CMC depth must be >= 1, got {m}")
        hit = sum(1 for rel in lists if np.any(rel[: min(m, len(rel))]))
        curve[m] = hit / len(lists)
    return curve


def evaluate_retrieval(
    query_features,
    db_features,
    query_labels,
    db_labels,
    task: str,
    r: int | None = None,
    cmc_ranks=DEFAULT_CMC_RANKS,
    similarity: str = "nc",
) -> RetrievalReport:
    """Rank every query against the database and score the result."""
    q = as_matrix(query_features, "query features")
    db = as_matrix(db_features, "database features")
    qy = as_matrix(query_labels, "query labels")
    dby = as_matrix(db_labels, "database labels")
    if q.shape[0] != qy.shape[0] or db.shape[0] != dby.shape[0]:
        raise ValidationError("features and labels must be row-aligned")
    if q.shape[0] == 0:
        raise ValidationError("empty query set")
    depth = db.shape[0] if r is None else int(r)
    ranked = rank(q, db, similarity=similarity)
    rel_lists = [relevance(qy[rl.query_index], dby)[rl.indices] for rl in ranked]
    aps = [average_precision(rel, depth) for rel in rel_lists]
    return RetrievalReport(
        task=task,
        r=depth,
        n_queries=q.shape[0],
        n_database=db.shape[0],
        ap=[float(a) for a in aps],
        mean_ap=float(np.mean(aps)),
        cmc=cmc_curve(rel_lists, cmc_ranks),
    )


def report_to_dict(report: RetrievalReport) -> dict:
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "task": report.task,
        "r": report.r,
        "n_queries": report.n_queries,
        "n_database": report.n_database,
        "map": report.mean_ap,
        "ap": report.ap,
        "cmc": {str(m): rate for m, rate in sorted(report.cmc.items())},
    }


def write_report_json(report: RetrievalReport, path) -> None:
    text = json.dumps(report_to_dict(report), sort_keys=True, indent=2)
    Path(path).write_text(text + "\n", encoding="utf-8")


def write_cmc_csv(report: RetrievalReport, path) -> None:
    lines = ["m,rate"]
    lines += [f"{m},{rate:.17g}" for m, rate in sorted(report.cmc.items())]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def format_report_text(report: RetrievalReport) -> str:
    """Aligned-column human-readable summary."""
    head = f"{'task':<6}{'queries':>9}{'database':>10}{'R':>7}{'MAP':>9}"
    body = (
        f"{report.task:<6}{report.n_queries:>9}{report.n_database:>10}"
        f"{report.r:>7}{report.mean_ap:>9.4f}"
    )
    cmc = "  ".join(f"m={m}:{rate:.3f}" for m, rate in sorted(report.cmc.items()))
    return "\n".join([head, body, "CMC   " + cmc])
