"""Binary parameter checkpoints.

Layout (all integers little-endian):

    magic     8 bytes  b"ISODUBCK"
    version   uint32
    meta_len  uint64, followed by meta_len bytes of UTF-8 JSON (the manifest)
    n_params  uint32
    per parameter:
        name_len  uint16, name UTF-8 bytes
        dtype     uint8 (0 = float32, 1 = float64)
        ndim      uint8
        dims      ndim x uint32
        payload   raw little-endian values
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import ParseError

MAGIC = b"ISODUBCK"
VERSION = 1

_DTYPE_CODES = {np.dtype("float32"): 0, np.dtype("float64"): 1}
_CODE_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}


def save_checkpoint(path, arrays: dict[str, np.ndarray], meta: dict | None = None):
    """Write named float arrays plus a JSON manifest."""
    meta_bytes = json.dumps(meta or {}, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<Q", len(meta_bytes)))
        f.write(meta_bytes)
        f.write(struct.pack("<I", len(arrays)))
        for name, arr in arrays.items():
            if arr.dtype not in _DTYPE_CODES:
                raise ParseError(f"unsupported checkpoint dtype {arr.dtype} for {name!r}")
            name_bytes = name.encode("utf-8")
            f.write(struct.pack("<H", len(name_bytes)))
            f.write(name_bytes)
            f.write(struct.pack("<BB", _DTYPE_CODES[arr.dtype], arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            f.write(np.ascontiguousarray(arr, dtype=arr.dtype.newbyteorder("<")).tobytes())


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    """Read back (arrays, meta); validates magic and version."""
    path = Path(path)
    raw = path.read_bytes()
    if raw[:8] != MAGIC:
        raise ParseError(f"{path}: not a checkpoint file (bad magic)")
    offset = 8
    (version,) = struct.unpack_from("<I", raw, offset)
    offset += 4
    if version != VERSION:
        raise ParseError(f"{path}: unsupported checkpoint version {version}")
    (meta_len,) = struct.unpack_from("<Q", raw, offset)
    offset += 8
    meta = json.loads(raw[offset : offset + meta_len].decode("utf-8"))
    offset += meta_len
    (n_params,) = struct.unpack_from("<I", raw, offset)
    offset += 4
    arrays: dict[str, np.ndarray] = {}
    for _ in range(n_params):
        (name_len,) = struct.unpack_from("<H", raw, offset)
        offset += 2
        name = raw[offset : offset + name_len].decode("utf-8")
        offset += name_len
        code, ndim = struct.unpack_from("<BB", raw, offset)
        offset += 2
        dims = struct.unpack_from(f"<{ndim}I", raw, offset)
        offset += 4 * ndim
        dtype = _CODE_DTYPES[code]
        count = int(np.prod(dims, dtype=np.int64)) if ndim else 1
        arr = np.frombuffer(raw, dtype=dtype, count=count, offset=offset).reshape(dims)
        offset += count * dtype.itemsize
        arrays[name] = arr.astype(dtype.newbyteorder("="))
    return arrays, meta
