"""Deterministic serialization with a provenance header on every output."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path

import numpy as np

from . import __version__

TOOL = "sparse-ilac"


def _plain(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_plain)


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()[:16]


def metadata(config: dict, seed) -> dict:
    return {"tool": TOOL, "version": __version__, "config_hash": config_hash(config), "seed": seed}


def dumps_json(payload: dict, meta: dict) -> str:
    return json.dumps({"metadata": meta, **payload}, indent=2, default=_plain, allow_nan=True) + "\n"


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple)):
        return " ".join(_cell(x) for x in v)
    return str(v)


def dumps_csv(header: list[str], rows, meta: dict) -> str:
    buf = io.StringIO()
    buf.write("# " + " ".join(f"{k}={meta[k]}" for k in meta) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_text(out_dir: str | Path | None, name: str, text: str) -> Path | None:
    if out_dir is None:
        return None
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    target = path / name
    target.write_text(text)
    return target
