"""Batch command-line front end: synth, train, eval, ablate, info.

Every option can also come from a JSON config file (--config); explicit
command-line values win over file values, which win over defaults.
Unknown config fields are rejected. Exit codes: 0 success, 1 usage or
validation error, 2 data error, 3 numeric failure, 4 stopped at the
iteration cap without converging (outputs are still written).

Outputs are deterministic for fixed seeds: reports and model files
contain no timestamps or timings. Wall-clock timings go to stdout,
except the ablation table where each row keeps its wall_time_s column.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import replace
from itertools import product
from pathlib import Path

import numpy as np

from .baselines import (
    BaselineModel,
    PRESETS,
    fit_cca,
    preset_config,
    project_baseline,
)
from .data import Dataset, SynthSpec, load_dataset, save_dataset, split_dataset, synth
from .errors import DataError, NumericError, ValidationError
from .evaluate import (
    DEFAULT_CMC_RANKS,
    evaluate_retrieval,
    format_report_text,
    write_cmc_csv,
    write_report_json,
)
from .model_io import MAGIC, load_model, save_model
from .solver import ModelParams, SolverConfig, TraceRecord, fit, project

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3
EXIT_MAX_ITERS = 4

_TASKS = ("i2t", "t2i")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: D102  (argparse hook)
        raise _UsageError(f"{self.prog}: {message}")


def _floats(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}") from exc


# Per-command option schema: every key is a legal config-file field;
# None marks "no default" (required keys listed separately).
_SCHEMAS: dict[str, tuple[dict, tuple[str, ...]]] = {
    "synth": (
        {
            "out": None,
            "n": 200,
            "d1": 30,
            "d2": 20,
            "c": 5,
            "latent": None,
            "noise": 0.0,
            "labels_min": 1,
            "labels_max": None,
            "seed": 0,
            "query_fraction": None,
            "split_seed": 0,
            "name": None,
        },
        ("out",),
    ),
    "train": (
        {
            "manifest": None,
            "out": None,
            "d": None,
            "alpha1": 0.01,
            "alpha2": 0.01,
            "lambda1": 0.01,
            "lambda2": 0.01,
            "beta": 1.0,
            "max_iters": 100,
            "tol": 1e-6,
            "seed": 0,
            "init": "supervised",
            "trace": None,
            "plots": True,
        },
        ("manifest", "out", "d"),
    ),
    "eval": (
        {
            "model": None,
            "manifest": None,
            "out": None,
            "task": "both",
            "r": None,
            "cmc_ranks": list(DEFAULT_CMC_RANKS),
            "similarity": "nc",
            "plots": True,
        },
        ("model", "manifest", "out"),
    ),
    "ablate": (
        {
            "manifest": None,
            "out": None,
            "methods": "ckd,ckd-beta0,kdm,cca",
            "d": None,
            "alpha1": 0.01,
            "alpha2": 0.01,
            "lambda1": 0.01,
            "lambda2": 0.01,
            "beta": 1.0,
            "max_iters": 100,
            "tol": 1e-6,
            "seed": 0,
            "alpha1_grid": None,
            "alpha2_grid": None,
            "d_grid": None,
            "r": None,
            "query_fraction": 0.3,
            "split_seed": 0,
            "plots": True,
        },
        ("manifest", "out"),
    ),
    "info": ({"path": None}, ("path",)),
}


def _merge_options(args: argparse.Namespace, command: str) -> dict:
    defaults, required = _SCHEMAS[command]
    merged = dict(defaults)
    config_path = getattr(args, "config", None)
    if config_path is not None:
        path = Path(config_path)
        if not path.exists():
            raise DataError(f"config file not found: {path}")
        try:
            loaded = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid config JSON ({exc})") from exc
        if not isinstance(loaded, dict):
            raise ValidationError(f"{path}: config must be a JSON object")
        unknown = sorted(set(loaded) - set(defaults))
        if unknown:
            raise ValidationError(
                f"unknown config fields for {command!r}: {', '.join(unknown)}"
            )
        merged.update(loaded)
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    missing = [k for k in required if merged.get(k) is None]
    if missing:
        raise ValidationError(f"{command}: missing required options: {', '.join(missing)}")
    return merged


def build_parser() -> _Parser:
    parser = _Parser(prog="ckd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def add_common(p: _Parser) -> None:
        p.add_argument("--config", help="JSON file supplying any of this command's options")

    p = sub.add_parser("synth", help="generate a synthetic paired-modality dataset")
    add_common(p)
    p.add_argument("--out", help="output directory")
    p.add_argument("--n", type=int)
    p.add_argument("--d1", type=int)
    p.add_argument("--d2", type=int)
    p.add_argument("--c", type=int)
    p.add_argument("--latent", type=int, help="latent dimension (default: c)")
    p.add_argument("--noise", type=float, help="additive noise scale")
    p.add_argument("--labels-min", dest="labels_min", type=int)
    p.add_argument("--labels-max", dest="labels_max", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--query-fraction", dest="query_fraction", type=float)
    p.add_argument("--split-seed", dest="split_seed", type=int)
    p.add_argument("--name")

    p = sub.add_parser("train", help="fit projections and write model + trace")
    add_common(p)
    p.add_argument("--manifest", help="dataset manifest path")
    p.add_argument("--out", help="model file path")
    p.add_argument("--d", type=int, help="subspace dimension")
    p.add_argument("--alpha1", type=float)
    p.add_argument("--alpha2", type=float)
    p.add_argument("--lambda1", type=float)
    p.add_argument("--lambda2", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--tol", type=float, help="relative objective-change stop threshold")
    p.add_argument("--seed", type=int)
    p.add_argument("--init", choices=("supervised", "random"))
    p.add_argument("--trace", help="trace CSV path (default: alongside the model)")
    p.add_argument("--plots", dest="plots", action=argparse.BooleanOptionalAction)

    p = sub.add_parser("eval", help="rank query split against training split and report")
    add_common(p)
    p.add_argument("--model")
    p.add_argument("--manifest")
    p.add_argument("--out", help="report directory")
    p.add_argument("--task", choices=("i2t", "t2i", "both"))
    p.add_argument("--r", type=int, help="retrieval depth (default: database size)")
    p.add_argument("--cmc-ranks", dest="cmc_ranks", type=_ints)
    p.add_argument("--similarity", choices=("nc", "cosine"))
    p.add_argument("--plots", dest="plots", action=argparse.BooleanOptionalAction)

    p = sub.add_parser("ablate", help="run method presets / parameter grids, one CSV row each")
    add_common(p)
    p.add_argument("--manifest")
    p.add_argument("--out", help="output directory")
    p.add_argument("--methods", help=f"comma list from {', '.join(PRESETS + ('cca',))}")
    p.add_argument("--d", type=int)
    p.add_argument("--alpha1", type=float)
    p.add_argument("--alpha2", type=float)
    p.add_argument("--lambda1", type=float)
    p.add_argument("--lambda2", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--alpha1-grid", dest="alpha1_grid", type=_floats)
    p.add_argument("--alpha2-grid", dest="alpha2_grid", type=_floats)
    p.add_argument("--d-grid", dest="d_grid", type=_ints)
    p.add_argument("--r", type=int)
    p.add_argument("--query-fraction", dest="query_fraction", type=float)
    p.add_argument("--split-seed", dest="split_seed", type=int)
    p.add_argument("--plots", dest="plots", action=argparse.BooleanOptionalAction)

    p = sub.add_parser("info", help="summarize a manifest or model file")
    add_common(p)
    p.add_argument("path", nargs="?", help="manifest JSON or model file")

    return parser


def _write_trace_csv(records, path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TraceRecord.FIELDS)
        for rec in records:
            writer.writerow(
                [rec.iteration] + [format(v, ".17g") for v in rec.row()[1:]]
            )


def _projected_split(model, ds: Dataset, idx: np.ndarray, modality: int) -> np.ndarray:
    x = ds.features(modality)[idx]
    if isinstance(model, ModelParams):
        return project(model, x, modality)
    return project_baseline(model, x, modality)


def _eval_task(model, ds: Dataset, task: str, r, cmc_ranks, similarity):
    qmod, dmod = (1, 2) if task == "i2t" else (2, 1)
    return evaluate_retrieval(
        query_features=_projected_split(model, ds, ds.query_idx, qmod),
        db_features=_projected_split(model, ds, ds.train_idx, dmod),
        query_labels=ds.y[ds.query_idx],
        db_labels=ds.y[ds.train_idx],
        task=task.upper(),
        r=r,
        cmc_ranks=tuple(cmc_ranks),
        similarity=similarity,
    )


def _require_query_split(ds: Dataset) -> None:
    if ds.query_idx.size == 0:
        raise DataError(
            "dataset has no query split; provide query_idx in the manifest "
            "or split it first"
        )
    if ds.train_idx.size == 0:
        raise DataError("dataset has an empty training split")


def cmd_synth(args: argparse.Namespace) -> int:
    opt = _merge_options(args, "synth")
    labels_max = opt["labels_max"] if opt["labels_max"] is not None else opt["labels_min"]
    spec = SynthSpec(
        n=int(opt["n"]),
        d1=int(opt["d1"]),
        d2=int(opt["d2"]),
        c=int(opt["c"]),
        latent_dim=int(opt["latent"]) if opt["latent"] is not None else int(opt["c"]),
        noise_sigma=float(opt["noise"]),
        labels_per_sample=(int(opt["labels_min"]), int(labels_max)),
        seed=int(opt["seed"]),
    )
    ds = synth(spec)
    if opt["name"]:
        ds = replace(ds, name=str(opt["name"]))
    if opt["query_fraction"] is not None:
        ds = split_dataset(ds, float(opt["query_fraction"]), int(opt["split_seed"]))
    manifest = save_dataset(ds, opt["out"])
    print(f"wrote {manifest}")
    print(
        f"n={ds.n} d1={ds.x1.shape[1]} d2={ds.x2.shape[1]} classes={ds.n_classes} "
        f"train={ds.train_idx.size} query={ds.query_idx.size}"
    )
    return EXIT_OK


def _solver_config(opt: dict) -> SolverConfig:
    return SolverConfig(
        d=int(opt["d"]),
        alpha1=float(opt["alpha1"]),
        alpha2=float(opt["alpha2"]),
        lambda1=float(opt["lambda1"]),
        lambda2=float(opt["lambda2"]),
        beta=float(opt["beta"]),
        max_iters=int(opt["max_iters"]),
        rel_tol=float(opt["tol"]),
        seed=int(opt["seed"]),
    )


def cmd_train(args: argparse.Namespace) -> int:
    opt = _merge_options(args, "train")
    ds = load_dataset(opt["manifest"])
    cfg = _solver_config(opt)
    x1 = ds.x1[ds.train_idx]
    x2 = ds.x2[ds.train_idx]
    y = ds.y[ds.train_idx]

    started = time.perf_counter()
    model, trace = fit(x1, x2, y, cfg, init=str(opt["init"]))
    elapsed = time.perf_counter() - started

    out = Path(opt["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    trace_path = Path(opt["trace"]) if opt["trace"] else out.with_suffix(".trace.csv")
    _write_trace_csv(trace.records, trace_path)
    print(f"wrote {out}")
    print(f"wrote {trace_path}")
    if opt["plots"]:
        from .figures import plot_convergence

        fig_path = plot_convergence(trace, out.with_suffix(".convergence.png"))
        print(f"wrote {fig_path}")
    status = "converged" if trace.converged else "max-iters"
    print(
        f"{status} after {trace.iterations} iterations, "
        f"objective {trace.records[-1].objective:.6g}"
    )
    print(f"[time] train: {elapsed:.3f}s")
    return EXIT_OK if trace.converged else EXIT_MAX_ITERS


def cmd_eval(args: argparse.Namespace) -> int:
    opt = _merge_options(args, "eval")
    model = load_model(opt["model"])
    ds = load_dataset(opt["manifest"])
    _require_query_split(ds)
    tasks = list(_TASKS) if opt["task"] == "both" else [opt["task"]]
    out = Path(opt["out"])
    out.mkdir(parents=True, exist_ok=True)

    started = time.perf_counter()
    reports = [
        _eval_task(
            model,
            ds,
            task,
            int(opt["r"]) if opt["r"] is not None else None,
            [int(m) for m in opt["cmc_ranks"]],
            str(opt["similarity"]),
        )
        for task in tasks
    ]
    elapsed = time.perf_counter() - started

    for report in reports:
        tag = report.task.lower()
        write_report_json(report, out / f"report_{tag}.json")
        write_cmc_csv(report, out / f"cmc_{tag}.csv")
        print(f"wrote {out / f'report_{tag}.json'}")
        print(f"wrote {out / f'cmc_{tag}.csv'}")
        print(format_report_text(report))
    if opt["plots"]:
        from .figures import plot_cmc

        fig_path = plot_cmc(reports, out / "cmc.png")
        print(f"wrote {fig_path}")
    print(f"[time] eval: {elapsed:.3f}s")
    return EXIT_OK


_ABLATE_COLUMNS = (
    "method",
    "alpha1",
    "alpha2",
    "d",
    "beta",
    "map_i2t",
    "map_t2i",
    "map_avg",
    "wall_time_s",
    "status",
    "error",
)


def _ablate_cells(opt: dict, default_d: int) -> list[dict]:
    methods = [m.strip() for m in str(opt["methods"]).split(",") if m.strip()]
    known = set(PRESETS) | {"cca"}
    bad = [m for m in methods if m not in known]
    if bad:
        raise ValidationError(
            f"unknown methods: {', '.join(bad)} (choose from {', '.join(sorted(known))})"
        )
    a1s = opt["alpha1_grid"] or [float(opt["alpha1"])]
    a2s = opt["alpha2_grid"] or [float(opt["alpha2"])]
    ds_grid = opt["d_grid"] or [int(opt["d"]) if opt["d"] is not None else default_d]
    cells = []
    for method in methods:
        if method in ("cca", "kdm"):
            # alpha grids do not affect these methods; one cell per d
            for d in ds_grid:
                cells.append({"method": method, "alpha1": 0.0, "alpha2": 0.0, "d": int(d)})
        else:
            for a1, a2, d in product(a1s, a2s, ds_grid):
                cells.append(
                    {"method": method, "alpha1": float(a1), "alpha2": float(a2), "d": int(d)}
                )
    return cells


def _run_cell(cell: dict, opt: dict, ds: Dataset) -> dict:
    row = dict.fromkeys(_ABLATE_COLUMNS, "")
    row.update(
        method=cell["method"],
        alpha1=format(cell["alpha1"], ".17g"),
        alpha2=format(cell["alpha2"], ".17g"),
        d=str(cell["d"]),
        status="ok",
    )
    x1 = ds.x1[ds.train_idx]
    x2 = ds.x2[ds.train_idx]
    y = ds.y[ds.train_idx]
    started = time.perf_counter()
    try:
        if cell["method"] == "cca":
            row["beta"] = ""
            model = fit_cca(x1, x2, cell["d"])
        else:
            base = SolverConfig(
                d=cell["d"],
                alpha1=cell["alpha1"],
                alpha2=cell["alpha2"],
                lambda1=float(opt["lambda1"]),
                lambda2=float(opt["lambda2"]),
                beta=float(opt["beta"]),
                max_iters=int(opt["max_iters"]),
                rel_tol=float(opt["tol"]),
                seed=int(opt["seed"]),
            )
            cfg = preset_config(cell["method"], base)
            row["beta"] = format(cfg.beta, ".17g")
            row["alpha1"] = format(cfg.alpha1, ".17g")
            row["alpha2"] = format(cfg.alpha2, ".17g")
            model, _ = fit(x1, x2, y, cfg)
        r = int(opt["r"]) if opt["r"] is not None else None
        maps = {}
        for task in _TASKS:
            report = _eval_task(model, ds, task, r, list(DEFAULT_CMC_RANKS), "nc")
            maps[task] = report.mean_ap
        row["map_i2t"] = format(maps["i2t"], ".17g")
        row["map_t2i"] = format(maps["t2i"], ".17g")
        row["map_avg"] = format((maps["i2t"] + maps["t2i"]) / 2.0, ".17g")
    except (ValidationError, DataError, NumericError) as exc:
        row["status"] = "error"
        row["error"] = " ".join(str(exc).split())
    row["wall_time_s"] = format(time.perf_counter() - started, ".3f")
    return row


def cmd_ablate(args: argparse.Namespace) -> int:
    opt = _merge_options(args, "ablate")
    ds = load_dataset(opt["manifest"])
    if ds.query_idx.size == 0:
        ds = split_dataset(ds, float(opt["query_fraction"]), int(opt["split_seed"]))
    _require_query_split(ds)
    default_d = min(ds.n_classes, ds.x1.shape[1], ds.x2.shape[1])
    cells = _ablate_cells(opt, default_d)

    out = Path(opt["out"])
    out.mkdir(parents=True, exist_ok=True)
    rows = [_run_cell(cell, opt, ds) for cell in cells]

    table_path = out / "ablate.csv"
    with table_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=_ABLATE_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {table_path}")
    if opt["plots"]:
        from .figures import plot_ablation

        fig_path = plot_ablation(rows, out / "ablate.png")
        print(f"wrote {fig_path}")
    failures = sum(1 for r in rows if r["status"] != "ok")
    print(f"{len(rows)} configurations, {failures} failed")
    return EXIT_OK


def cmd_info(args: argparse.Namespace) -> int:
    opt = _merge_options(args, "info")
    path = Path(opt["path"])
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with path.open("rb") as fh:
        head = fh.read(len(MAGIC))
    if head == MAGIC:
        model = load_model(path)
        if isinstance(model, ModelParams):
            print("kind: model")
            print("method: ckd")
            print(f"dims: d1={model.p1.shape[0]} d2={model.p2.shape[0]} d={model.p1.shape[1]}")
            for key, value in sorted(model.config.to_dict().items()):
                print(f"config.{key}: {value}")
        else:
            print("kind: model")
            print(f"method: {model.method}")
            print(f"dims: d1={model.w1.shape[0]} d2={model.w2.shape[0]} d={model.w1.shape[1]}")
            print(f"correlations: {np.array2string(model.correlations, precision=4)}")
        return EXIT_OK
    ds = load_dataset(path)
    print("kind: dataset")
    if ds.name:
        print(f"name: {ds.name}")
    print(f"n: {ds.n}")
    print(f"d1: {ds.x1.shape[1]}")
    print(f"d2: {ds.x2.shape[1]}")
    print(f"classes: {ds.n_classes}")
    print(f"train: {ds.train_idx.size}")
    print(f"query: {ds.query_idx.size}")
    print(f"labels per sample: min={int(ds.y.sum(axis=1).min())} max={int(ds.y.sum(axis=1).max())}")
    return EXIT_OK


_COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "eval": cmd_eval,
    "ablate": cmd_ablate,
    "info": cmd_info,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
