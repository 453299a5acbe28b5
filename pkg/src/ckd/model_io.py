"""Self-describing binary container for trained models.

Layout (all integers little-endian):

    bytes 0-3   magic b"XMDL"
    bytes 4-7   uint32 format version (currently 1)
    bytes 8-11  uint32 header length in bytes
    ...         UTF-8 JSON header
    ...         raw array payloads, concatenated

The JSON header has sorted keys and no whitespace, and carries::

    {"arrays": [{"name": ..., "rows": ..., "cols": ...}, ...],
     "config": {...},        # echo of the training configuration
     "extra":  {...},        # method-specific scalars/lists
     "method": "ckd" | "cca",
     "version": 1}

Each payload is the row-major float64 little-endian bytes of its array,
in the order the header lists them. Writing the same model twice yields
byte-identical files, and a load/save round trip is bit-exact.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .baselines import BaselineModel
from .errors import DataError
from .solver import ModelParams, SolverConfig

MAGIC = b"XMDL"
FORMAT_VERSION = 1


def _encode(header: dict, arrays: list[tuple[str, np.ndarray]]) -> bytes:
    header = dict(header)
    header["version"] = FORMAT_VERSION
    header["arrays"] = [
        {"name": name, "rows": int(a.shape[0]), "cols": int(a.shape[1])}
        for name, a in arrays
    ]
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    out = bytearray()
    out += MAGIC
    out += struct.pack("<II", FORMAT_VERSION, len(blob))
    out += blob
    for _, a in arrays:
        out += np.ascontiguousarray(a, dtype="<f8").tobytes()
    return bytes(out)


def save_model(model: ModelParams | BaselineModel, path) -> None:
    """Write a trained model to ``path`` in the container format above."""
    if isinstance(model, ModelParams):
        header = {"method": "ckd", "config": model.config.to_dict(), "extra": {}}
        arrays = [
            ("p1", model.p1),
            ("p2", model.p2),
            ("mean1", model.mean1.reshape(1, -1)),
            ("mean2", model.mean2.reshape(1, -1)),
        ]
    elif isinstance(model, BaselineModel):
        header = {
            "method": model.method,
            "config": {"d": int(model.w1.shape[1])},
            "extra": {
                "regularization": list(map(float, model.regularization)),
            },
        }
        arrays = [
            ("w1", model.w1),
            ("w2", model.w2),
            ("mean1", model.mean1.reshape(1, -1)),
            ("mean2", model.mean2.reshape(1, -1)),
            ("correlations", model.correlations.reshape(1, -1)),
        ]
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    Path(path).write_bytes(_encode(header, arrays))


def load_model(path) -> ModelParams | BaselineModel:
    """Read a model container back into the matching parameter object."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"{path}: cannot read model file ({exc})") from exc
    if len(raw) < 12 or raw[:4] != MAGIC:
        raise DataError(f"{path}: not a model container (bad magic)")
    version, header_len = struct.unpack("<II", raw[4:12])
    if version != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported format version {version}")
    try:
        header = json.loads(raw[12 : 12 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: corrupt header ({exc})") from exc
    offset = 12 + header_len
    arrays: dict[str, np.ndarray] = {}
    if not isinstance(header, dict) or not isinstance(header.get("arrays"), list):
        raise DataError(f"{path}: corrupt header (no array table)")
    for spec in header["arrays"]:
        count = spec["rows"] * spec["cols"]
        end = offset + 8 * count
        if end > len(raw):
            raise DataError(f"{path}: truncated payload for array {spec['name']!r}")
        arrays[spec["name"]] = (
            np.frombuffer(raw[offset:end], dtype="<f8")
            .reshape(spec["rows"], spec["cols"])
            .copy()
        )
        offset = end
    if offset != len(raw):
        raise DataError(f"{path}: {len(raw) - offset} trailing bytes")

    method = header.get("method")
    if method == "ckd":
        cfg = SolverConfig(**header["config"])
        return ModelParams(
            p1=arrays["p1"],
            p2=arrays["p2"],
            mean1=arrays["mean1"].ravel(),
            mean2=arrays["mean2"].ravel(),
            config=cfg,
        )
    if method in BaselineModel.METHODS:
        return BaselineModel(
            method=method,
            w1=arrays["w1"],
            w2=arrays["w2"],
            mean1=arrays["mean1"].ravel(),
            mean2=arrays["mean2"].ravel(),
            correlations=arrays["correlations"].ravel(),
            regularization=tuple(header["extra"]["regularization"]),
        )
    raise DataError(f"{path}: unknown method tag {method!r}")
