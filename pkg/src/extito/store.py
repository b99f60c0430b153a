"""Binary path store.

One file per batch::

    magic (8 bytes) | uint32 header length | JSON header | records

The header carries the format version, the model echo, ``dt``, ``T``,
``n_paths``, ``n_steps`` and ``dim``. Each record is
``int64 seed, int64 n_jumps, float64 values, float64 cont,
int64 jump_index, float64 jump_size`` in little-endian order.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import struct
from pathlib import Path
from typing import Sequence

import numpy as np

from .process_models import Kind, ProcessSpec, SamplePath

MAGIC = b"XITOPTHS"
FORMAT_VERSION = 1
BATCH_FILE = "paths.bin"
MANIFEST_FILE = "store.json"


class StoreVersionError(ValueError):
    pass


def spec_to_dict(spec: ProcessSpec) -> dict:
    d = dataclasses.asdict(spec)
    d["kind"] = spec.kind.value
    d["a_matrix"] = [list(map(float, r)) for r in spec.a_matrix]
    d["x0"] = list(map(float, np.ravel(spec.x0))) if np.ndim(spec.x0) else float(spec.x0)
    return d


def spec_from_dict(d: dict) -> ProcessSpec:
    d = dict(d)
    d["kind"] = Kind(d["kind"])
    d["a_matrix"] = tuple(tuple(r) for r in d["a_matrix"])
    if isinstance(d["x0"], list):
        d["x0"] = tuple(d["x0"])
    return ProcessSpec(**d)


def _header(paths: Sequence[SamplePath]) -> dict:
    p0 = paths[0]
    for p in paths[1:]:
        if p.spec != p0.spec or p.dt != p0.dt or p.n != p0.n:
            raise ValueError("a batch must share spec, dt and length")
    return {"version": FORMAT_VERSION, "spec": spec_to_dict(p0.spec), "dt": p0.dt,
            "T": p0.horizon, "n_paths": len(paths), "n_steps": p0.n, "dim": p0.dim}


def store_paths(paths: Sequence[SamplePath], directory) -> Path:
    """Write ``paths`` to ``directory``; an empty batch writes only the manifest stub."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = list(paths)
    manifest = {"version": FORMAT_VERSION, "n_paths": len(paths),
                "files": [BATCH_FILE] if paths else []}
    if paths:
        head = json.dumps(_header(paths), sort_keys=True).encode()
        with open(d / BATCH_FILE, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<I", len(head)))
            fh.write(head)
            for p in paths:
                seed = -1 if p.seed is None else int(p.seed)
                fh.write(struct.pack("<qq", seed, len(p.jump_index)))
                for arr, dt in ((p.values, "<f8"), (p.cont_increments, "<f8"),
                                (p.jump_index, "<i8"), (p.jump_size, "<f8")):
                    fh.write(np.ascontiguousarray(arr, dtype=dt).tobytes())
    (d / MANIFEST_FILE).write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n")
    return d


def _read(fh, n, dtype, shape):
    size = int(np.prod(shape)) * np.dtype(dtype).itemsize
    buf = fh.read(size)
    if len(buf) != size:
        raise ValueError("truncated path store")
    return np.frombuffer(buf, dtype=dtype).reshape(shape).copy()


def load_paths(directory) -> list[SamplePath]:
    d = Path(directory)
    manifest = json.loads((d / MANIFEST_FILE).read_text())
    if manifest.get("version") != FORMAT_VERSION:
        raise StoreVersionError(f"store version {manifest.get('version')} != {FORMAT_VERSION}")
    if not manifest["files"]:
        return []
    out = []
    with open(d / BATCH_FILE, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise ValueError("not a path store file")
        (hlen,) = struct.unpack("<I", fh.read(4))
        head = json.loads(fh.read(hlen))
        if head.get("version") != FORMAT_VERSION:
            raise StoreVersionError(f"batch version {head.get('version')} != {FORMAT_VERSION}")
        spec = spec_from_dict(head["spec"])
        n, dim = head["n_steps"], head["dim"]
        vshape = (n + 1,) if dim == 1 else (n + 1, dim)
        cshape = (n,) if dim == 1 else (n, dim)
        for _ in range(head["n_paths"]):
            seed, nj = struct.unpack("<qq", fh.read(16))
            values = _read(fh, n + 1, "<f8", vshape)
            cont = _read(fh, n, "<f8", cshape)
            jidx = _read(fh, nj, "<i8", (nj,))
            jsize = _read(fh, nj, "<f8", (nj,) if dim == 1 else (nj, dim))
            out.append(SamplePath(spec, head["dt"], values, cont, jidx, jsize,
                                  None if seed < 0 else seed))
    return out


def export_csv(paths: Sequence[SamplePath], filename) -> Path:
    """Long-format CSV (path, step, t, value..., jump...) for debugging."""
    filename = Path(filename)
    with open(filename, "w", newline="") as fh:
        w = csv.writer(fh)
        for j, p in enumerate(paths):
            vals = p.values.reshape(p.n + 1, -1)
            jumps = p.dense_jumps().reshape(p.n + 1, -1)
            if j == 0:
                d = vals.shape[1]
                w.writerow(["path", "seed", "step", "t"] + [f"x{i}" for i in range(d)]
                           + [f"jump{i}" for i in range(d)])
            for i in range(p.n + 1):
                w.writerow([j, p.seed, i, repr(i * p.dt)] + [repr(float(v)) for v in vals[i]]
                           + [repr(float(v)) for v in jumps[i]])
    return filename
