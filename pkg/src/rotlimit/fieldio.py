"""Binary field snapshots: raw little-endian float64, row-major, plus a JSON sidecar."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .spectral import Grid

FORMAT = "rotlimit-fields/1"


def grid_meta(grid: Grid) -> dict:
    return {"nx": grid.nx, "ny": grid.ny, "nz": grid.nz,
            "lx": grid.lx, "ly": grid.ly, "lz": grid.lz}


def save_fields(stem, grid: Grid, fields: dict, time: float = 0.0, extra: dict | None = None):
    """Write ``<stem>.bin`` and ``<stem>.json``.

    Arrays are concatenated in the order of ``fields``; the sidecar lists each
    name with its shape and byte offset.
    """
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    entries = []
    offset = 0
    with open(stem.with_suffix(".bin"), "wb") as fh:
        for name, arr in fields.items():
            arr = np.ascontiguousarray(arr, dtype="<f8")
            fh.write(arr.tobytes(order="C"))
            entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
            offset += arr.nbytes
    meta = {"format": FORMAT, "dtype": "<f8", "order": "C", "time": float(time),
            "grid": grid_meta(grid), "fields": entries}
    if extra:
        meta["extra"] = extra
    stem.with_suffix(".json").write_text(json.dumps(meta, indent=2))
    return stem.with_suffix(".bin"), stem.with_suffix(".json")


def load_fields(stem):
    """Inverse of :func:`save_fields`; returns (grid, fields, meta)."""
    stem = Path(stem)
    meta = json.loads(stem.with_suffix(".json").read_text())
    g = meta["grid"]
    grid = Grid(g["nx"], g["ny"], g["nz"], g["lx"], g["ly"])
    raw = stem.with_suffix(".bin").read_bytes()
    fields = {}
    for e in meta["fields"]:
        count = int(np.prod(e["shape"]))
        arr = np.frombuffer(raw, dtype="<f8", count=count, offset=e["offset"])
        fields[e["name"]] = arr.reshape(e["shape"]).copy()
    return grid, fields, meta
