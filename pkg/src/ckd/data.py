"""Dataset ingestion, train/query splitting, synthetic paired modalities.

Interchange format: a JSON manifest naming headerless CSV files for the
two feature matrices and the label matrix, plus optional split index
files (one zero-based integer per line). Loading never centers the
features; the solver centers on the training split only, so query
statistics cannot leak into the model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, UnlabeledSampleError, ValidationError
from .semgraph import validate_labels

_PROTOTYPE_SCALE = 4.0
_LATENT_JITTER = 0.05


@dataclass(frozen=True)
class Dataset:
    """Row-aligned paired features and labels with a train/query split."""

    x1: np.ndarray  # n x d1
    x2: np.ndarray  # n x d2
    y: np.ndarray  # n x c, binary
    train_idx: np.ndarray
    query_idx: np.ndarray
    name: str | None = None

    @property
    def n(self) -> int:
        return self.x1.shape[0]

    @property
    def n_classes(self) -> int:
        return self.y.shape[1]

    def features(self, modality: int) -> np.ndarray:
        if modality not in (1, 2):
            raise ValidationError(f"modality index must be 1 or 2, got {modality}")
        return self.x1 if modality == 1 else self.x2


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of the synthetic paired-modality generator."""

    n: int
    d1: int
    d2: int
    c: int
    latent_dim: int
    noise_sigma: float = 0.0
    labels_per_sample: tuple[int, int] = (1, 1)
    seed: int = 0

    def validate(self) -> None:
        if self.n < 2:
            raise ValidationError(f"need n >= 2 samples, got {self.n}")
        for name in ("d1", "d2", "c"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 1 <= self.latent_dim <= min(self.d1, self.d2):
            raise ValidationError(
                f"latent_dim={self.latent_dim} must lie in [1, min(d1, d2)="
                f"{min(self.d1, self.d2)}]"
            )
        if self.noise_sigma < 0:
            raise ValidationError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        lo, hi = self.labels_per_sample
        if not 1 <= lo <= hi <= self.c:
            raise ValidationError(
                f"labels_per_sample range {self.labels_per_sample} must satisfy "
                f"1 <= lo <= hi <= c={self.c}"
            )


def _load_csv(path: Path, what: str) -> np.ndarray:
    if not path.exists():
        raise DataError(f"{what} file not found: {path}")
    try:
        m = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise DataError(f"{path}: cannot parse {what} CSV ({exc})") from exc
    if m.size == 0:
        raise DataError(f"{path}: {what} CSV is empty")
    if not np.all(np.isfinite(m)):
        raise DataError(f"{path}: {what} contains non-finite entries")
    return m


def _load_indices(path: Path, n: int, what: str) -> np.ndarray:
    if not path.exists():
        raise DataError(f"{what} file not found: {path}")
    try:
        idx = np.loadtxt(path, dtype=np.int64, ndmin=1)
    except ValueError as exc:
        raise DataError(f"{path}: cannot parse {what} indices ({exc})") from exc
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise DataError(f"{path}: {what} index out of range [0, {n})")
    if np.unique(idx).size != idx.size:
        raise DataError(f"{path}: duplicate {what} indices")
    return idx


def load_dataset(manifest_path) -> Dataset:
    """Load a dataset described by a JSON manifest.

    Manifest fields: x1, x2, y (CSV paths, required), train_idx and
    query_idx (index-file paths, optional), name (optional). Relative
    paths resolve against the manifest's directory. Without split files
    every sample is training data and the query set is empty.
    """
    path = Path(manifest_path)
    if not path.exists():
        raise DataError(f"manifest not found: {path}")
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid manifest JSON ({exc})") from exc
    if not isinstance(manifest, dict):
        raise DataError(f"{path}: manifest must be a JSON object")
    for key in ("x1", "x2", "y"):
        if key not in manifest:
            raise DataError(f"{path}: manifest missing required field {key!r}")
    base = path.parent

    x1 = _load_csv(base / manifest["x1"], "modality-1")
    x2 = _load_csv(base / manifest["x2"], "modality-2")
    y = _load_csv(base / manifest["y"], "label")
    n = x1.shape[0]
    if x2.shape[0] != n or y.shape[0] != n:
        raise DataError(
            f"{path}: row counts differ (x1: {n}, x2: {x2.shape[0]}, y: {y.shape[0]})"
        )
    try:
        validate_labels(y)
    except UnlabeledSampleError:
        raise
    except ValidationError as exc:
        raise DataError(f"{base / manifest['y']}: {exc}") from exc

    if manifest.get("train_idx") is not None:
        train_idx = _load_indices(base / manifest["train_idx"], n, "train")
    else:
        train_idx = np.arange(n, dtype=np.int64)
    if manifest.get("query_idx") is not None:
        query_idx = _load_indices(base / manifest["query_idx"], n, "query")
    else:
        query_idx = np.empty(0, dtype=np.int64)
    if np.intersect1d(train_idx, query_idx).size:
        raise DataError(f"{path}: train and query splits overlap")

    return Dataset(
        x1=x1,
        x2=x2,
        y=y,
        train_idx=train_idx,
        query_idx=query_idx,
        name=manifest.get("name"),
    )


def save_dataset(ds: Dataset, out_dir) -> Path:
    """Write CSVs (+ split files when a query split exists) and a manifest.

    Feature values are printed with 17 significant digits so reloading
    reproduces them exactly. Returns the manifest path.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    np.savetxt(out / "x1.csv", ds.x1, fmt="%.17g", delimiter=",")
    np.savetxt(out / "x2.csv", ds.x2, fmt="%.17g", delimiter=",")
    np.savetxt(out / "y.csv", ds.y, fmt="%d", delimiter=",")
    manifest: dict = {"x1": "x1.csv", "x2": "x2.csv", "y": "y.csv"}
    if ds.name:
        manifest["name"] = ds.name
    if ds.query_idx.size:
        np.savetxt(out / "train_idx.txt", ds.train_idx, fmt="%d")
        np.savetxt(out / "query_idx.txt", ds.query_idx, fmt="%d")
        manifest["train_idx"] = "train_idx.txt"
        manifest["query_idx"] = "query_idx.txt"
    manifest_path = out / "manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return manifest_path


def _presence_safe(row_classes, members, flags, leaving: int) -> bool:
    """True if ``leaving`` can exit the side marked by ``flags`` without
    stranding any of its classes that have members on both sides."""
    for k in row_classes:
        mem = members[k]
        if len(mem) < 2:
            continue
        if not any(flags[m] for m in mem if m != leaving):
            return False
    return True


def split_dataset(ds: Dataset, query_fraction: float, seed: int) -> Dataset:
    """Seeded shuffle split, stratified where feasible.

    Every class with at least two members ends up represented in both
    splits whenever a presence-preserving swap exists; sizes follow
    round(query_fraction * n), clamped so neither split is empty.
    """
    if not 0.0 < query_fraction < 1.0:
        raise ValidationError(f"query_fraction must lie in (0, 1), got {query_fraction}")
    n = ds.n
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    nq = min(max(int(round(query_fraction * n)), 1), n - 1)
    in_query = np.zeros(n, dtype=bool)
    in_query[perm[:nq]] = True
    pos = np.empty(n, dtype=np.int64)
    pos[perm] = np.arange(n)

    members = [np.flatnonzero(ds.y[:, k] > 0) for k in range(ds.n_classes)]
    classes_of = [np.flatnonzero(ds.y[i] > 0) for i in range(n)]

    def repair(mem, to_query: bool) -> None:
        # Move one class member to the empty side, swapping out a
        # non-member so split sizes stay fixed. Both movers must leave
        # behind another same-side member for each of their classes.
        mem_set = set(mem.tolist())
        donors = sorted((m for m in mem if in_query[m] != to_query), key=lambda m: pos[m])
        others = sorted(
            (i for i in range(n) if in_query[i] == to_query and i not in mem_set),
            key=lambda i: pos[i],
        )
        for m in donors:
            if not _presence_safe(classes_of[m], members, ~in_query if to_query else in_query, m):
                continue
            for q in others:
                if _presence_safe(classes_of[q], members, in_query if to_query else ~in_query, q):
                    in_query[m] = to_query
                    in_query[q] = not to_query
                    return

    order = sorted(range(ds.n_classes), key=lambda k: (len(members[k]), k))
    for k in order:
        mem = members[k]
        if len(mem) < 2:
            continue
        marks = in_query[mem]
        if not marks.any():
            repair(mem, to_query=True)
        elif marks.all():
            repair(mem, to_query=False)

    query_idx = np.sort(np.flatnonzero(in_query))
    train_idx = np.sort(np.flatnonzero(~in_query))
    return Dataset(
        x1=ds.x1,
        x2=ds.x2,
        y=ds.y,
        train_idx=train_idx,
        query_idx=query_idx,
        name=ds.name,
    )


def synth(spec: SynthSpec) -> Dataset:
    """Generate paired modalities from class-conditional latent prototypes.

    Every sample draws 1..k classes, sits at the mean of their latent
    prototypes plus a small jitter, and is pushed through one fixed
    random linear map per modality with optional additive noise. With
    zero noise and single labels the classes are cleanly separable in
    both modalities.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)

    if spec.latent_dim >= spec.c:
        basis = np.linalg.qr(rng.standard_normal((spec.latent_dim, spec.latent_dim)))[0]
        prototypes = basis[:, : spec.c].T.copy()
    else:
        prototypes = rng.standard_normal((spec.c, spec.latent_dim))
        prototypes /= np.linalg.norm(prototypes, axis=1, keepdims=True)
    prototypes *= _PROTOTYPE_SCALE

    lo, hi = spec.labels_per_sample
    counts = rng.integers(lo, hi + 1, size=spec.n)
    y = np.zeros((spec.n, spec.c))
    for i in range(spec.n):
        y[i, rng.choice(spec.c, size=counts[i], replace=False)] = 1.0

    latent = (y @ prototypes) / counts[:, None]
    latent += _LATENT_JITTER * rng.standard_normal((spec.n, spec.latent_dim))

    a1 = rng.standard_normal((spec.latent_dim, spec.d1)) / np.sqrt(spec.latent_dim)
    a2 = rng.standard_normal((spec.latent_dim, spec.d2)) / np.sqrt(spec.latent_dim)
    x1 = latent @ a1 + spec.noise_sigma * rng.standard_normal((spec.n, spec.d1))
    x2 = latent @ a2 + spec.noise_sigma * rng.standard_normal((spec.n, spec.d2))

    return Dataset(
        x1=x1,
        x2=x2,
        y=y,
        train_idx=np.arange(spec.n, dtype=np.int64),
        query_idx=np.empty(0, dtype=np.int64),
        name=f"synthetic-n{spec.n}-c{spec.c}-seed{spec.seed}",
    )
