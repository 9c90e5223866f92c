"""Binary checkpoints: magic, JSON header, then little-endian float64 payload.

Layout::

    b"TDDANCK1"            8 bytes
    header length          uint64 little-endian
    header                 UTF-8 JSON {"config": ..., "tensors": [{name, shape, offset, count}]}
    payload                concatenated row-major '<f8' values
"""

from __future__ import annotations

import json
import os
import struct
import tempfile

import numpy as np

MAGIC = b"TDDANCK1"


def to_bytes(named, config=None):
    entries, chunks, offset = [], [], 0
    for name, arr in named:
        a = np.array(arr, dtype="<f8", order="C")  # keeps 0-d shapes, unlike ascontiguousarray
        entries.append({"name": name, "shape": list(a.shape), "offset": offset, "count": int(a.size)})
        chunks.append(a.tobytes(order="C"))
        offset += a.size
    header = json.dumps({"config": config or {}, "tensors": entries}, sort_keys=True).encode()
    return MAGIC + struct.pack("<Q", len(header)) + header + b"".join(chunks)


def from_bytes(blob):
    if blob[:8] != MAGIC:
        raise ValueError("not a checkpoint (bad magic)")
    (hlen,) = struct.unpack("<Q", blob[8:16])
    header = json.loads(blob[16:16 + hlen].decode())
    payload = np.frombuffer(blob, dtype="<f8", offset=16 + hlen)
    tensors = {}
    for e in header["tensors"]:
        vals = payload[e["offset"]:e["offset"] + e["count"]]
        if vals.size != e["count"]:
            raise ValueError(f"truncated checkpoint at tensor {e['name']!r}")
        tensors[e["name"]] = vals.astype(np.float64).reshape(e["shape"])
    return header["config"], tensors


def atomic_write_bytes(path, data):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_checkpoint(path, named, config=None):
    atomic_write_bytes(path, to_bytes(named, config))


def load_checkpoint(path):
    with open(path, "rb") as fh:
        return from_bytes(fh.read())
