"""DDN1 checkpoint container: named float32 tensors in one flat file.

Layout: magic "DDN1", then per tensor: u16 LE name length, UTF-8 name,
u32 LE rank, u32 LE dims, f32 LE row-major payload. Model parameters use
bare names; BatchNorm running stats, optimizer state, and CCA models live
under the reserved prefixes "bn.", "adam.", and "cca.".
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import FormatError

CKPT_MAGIC = b"DDN1"


def save_checkpoint(path: str | Path, tensors: dict[str, np.ndarray]) -> None:
    with open(path, "wb") as f:
        f.write(CKPT_MAGIC)
        for name, arr in tensors.items():
            arr = np.ascontiguousarray(arr, dtype=np.float32)
            encoded = name.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise FormatError(f"tensor name too long: {name[:40]}...")
            f.write(struct.pack("<H", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<I", arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            f.write(arr.tobytes())


def load_checkpoint(path: str | Path) -> dict[str, np.ndarray]:
    p = Path(path)
    tensors: dict[str, np.ndarray] = {}
    with open(p, "rb") as f:
        magic = f.read(4)
        if magic != CKPT_MAGIC:
            raise FormatError(f"{p}: bad magic {magic!r}, expected {CKPT_MAGIC!r}")
        while True:
            raw = f.read(2)
            if not raw:
                break
            if len(raw) != 2:
                raise FormatError(f"{p}: truncated name length")
            (nlen,) = struct.unpack("<H", raw)
            name = f.read(nlen)
            if len(name) != nlen:
                raise FormatError(f"{p}: truncated name")
            raw = f.read(4)
            if len(raw) != 4:
                raise FormatError(f"{p}: truncated rank")
            (rank,) = struct.unpack("<I", raw)
            if rank > 8:
                raise FormatError(f"{p}: implausible rank {rank}")
            raw = f.read(4 * rank)
            if len(raw) != 4 * rank:
                raise FormatError(f"{p}: truncated dims")
            dims = struct.unpack(f"<{rank}I", raw)
            n = int(np.prod(dims)) if rank else 1
            payload = f.read(4 * n)
            if len(payload) != 4 * n:
                raise FormatError(f"{p}: truncated payload for {name!r}")
            tensors[name.decode("utf-8")] = (
                np.frombuffer(payload, dtype="<f4").reshape(dims).copy()
            )
    return tensors
