"""File formats: portable any-maps, raw f32 arrays, checkpoints, loss traces.

Raw arrays
    16-byte header ``b"DDKA"`` + three u32 extents (trailing unused
    extents are 0), followed by little-endian f32 data.  1 to 3 dims.
Checkpoints
    ``b"DDKL"`` + u32 version, u32 length + UTF-8 JSON descriptor
    (architecture and schedule), u64 parameter count, then the
    parameters as little-endian f32.  Everything is little-endian on
    write regardless of host byte order.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

ARRAY_MAGIC = b"DDKA"
CKPT_MAGIC = b"DDKL"
CKPT_VERSION = 1


class FormatError(ValueError):
    pass


# --------------------------------------------------------------------------
# PGM / PPM
# --------------------------------------------------------------------------


def quantize(v) -> np.ndarray:
    """Clamp to ``[0, 1]`` then ``round(v·255)`` with halves rounded up."""
    v = np.clip(np.asarray(v, dtype=np.float64), 0.0, 1.0)
    return np.floor(v * 255.0 + 0.5).astype(np.uint8)


def dequantize(b) -> np.ndarray:
    return np.asarray(b, dtype=np.float64) / 255.0


def write_pnm(path, img) -> None:
    """Write ``(H, W)`` as P5 or ``(H, W, 3)`` as P6; uint8 is written as-is, floats are quantized."""
    a = np.asarray(img)
    if a.dtype != np.uint8:
        a = quantize(a)
    if a.ndim == 2:
        magic = b"P5"
    elif a.ndim == 3 and a.shape[2] == 3:
        magic = b"P6"
    else:
        raise FormatError(f"expected (H, W) or (H, W, 3) image, got shape {a.shape}")
    h, w = a.shape[:2]
    with open(path, "wb") as fh:
        fh.write(magic + b"\n%d %d\n255\n" % (w, h))
        fh.write(np.ascontiguousarray(a).tobytes())


def _header_tokens(data: bytes, count: int):
    # returns `count` whitespace-separated tokens after the magic, skipping comments
    toks, i, n = [], 2, len(data)
    while len(toks) < count:
        while i < n and data[i:i + 1].isspace():
            i += 1
        if i < n and data[i:i + 1] == b"#":
            while i < n and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < n and not data[j:j + 1].isspace():
            j += 1
        if j == i:
            raise FormatError("truncated PNM header")
        toks.append(data[i:j])
        i = j
    # exactly one whitespace byte separates the header from the raster
    return toks, i + 1


def read_pnm(path) -> np.ndarray:
    """Read 8-bit P5/P6 into uint8 ``(H, W)`` or ``(H, W, 3)``."""
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise FormatError(f"unsupported PNM magic {magic!r}")
    toks, off = _header_tokens(data, 3)
    try:
        w, h, maxval = (int(t) for t in toks)
    except ValueError as e:
        raise FormatError(f"malformed PNM header: {e}") from None
    if maxval != 255:
        raise FormatError(f"only maxval 255 is supported, got {maxval}")
    if w < 1 or h < 1:
        raise FormatError(f"invalid PNM size {w}x{h}")
    ch = 1 if magic == b"P5" else 3
    need = w * h * ch
    raster = data[off:off + need]
    if len(raster) != need:
        raise FormatError(f"PNM raster truncated: expected {need} bytes, got {len(raster)}")
    a = np.frombuffer(raster, dtype=np.uint8)
    return a.reshape(h, w) if ch == 1 else a.reshape(h, w, 3)


def chw_to_pnm(x) -> np.ndarray:
    """``(C, H, W)`` float image with C in {1, 3} to a PNM-ready array."""
    x = np.asarray(x)
    if x.ndim == 2:
        return x
    if x.ndim == 3 and x.shape[0] == 1:
        return x[0]
    if x.ndim == 3 and x.shape[0] == 3:
        return np.moveaxis(x, 0, -1)
    raise FormatError(f"cannot map shape {x.shape} to PGM/PPM")


def pnm_to_chw(a) -> np.ndarray:
    a = dequantize(a)
    return a[None] if a.ndim == 2 else np.moveaxis(a, -1, 0)


# --------------------------------------------------------------------------
# raw f32 arrays
# --------------------------------------------------------------------------


def write_f32(path, arr) -> None:
    a = np.asarray(arr, dtype="<f4")
    if not 1 <= a.ndim <= 3 or a.size == 0:
        raise FormatError(f"raw arrays hold 1 to 3 non-empty dims, got shape {a.shape}")
    dims = list(a.shape) + [0] * (3 - a.ndim)
    with open(path, "wb") as fh:
        fh.write(ARRAY_MAGIC + struct.pack("<III", *dims))
        fh.write(np.ascontiguousarray(a).tobytes())


def read_f32(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:4] != ARRAY_MAGIC:
        raise FormatError("not a raw f32 array (bad magic)")
    raw = struct.unpack("<III", data[4:16])
    dims = [d for d in raw if d]
    if not dims or list(raw[:len(dims)]) != dims:
        raise FormatError(f"invalid array dims {raw}")
    body = data[16:]
    n = int(np.prod(dims))
    if len(body) != 4 * n:
        raise FormatError(f"header declares {n} values, body holds {len(body) / 4:g}")
    return np.frombuffer(body, dtype="<f4").reshape(dims).astype(np.float32)


# --------------------------------------------------------------------------
# checkpoints
# --------------------------------------------------------------------------


def save_checkpoint(path, params, architecture: dict, schedule: dict | None = None) -> None:
    p = np.asarray(params, dtype="<f4").ravel()
    desc = json.dumps({"architecture": architecture, "schedule": schedule or {}}, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(CKPT_MAGIC + struct.pack("<I", CKPT_VERSION))
        fh.write(struct.pack("<I", len(desc)) + desc)
        fh.write(struct.pack("<Q", p.size))
        fh.write(p.tobytes())


def load_checkpoint(path, expect_architecture: dict | None = None):
    """Return ``(params f32, architecture, schedule)``.

    Raises :class:`FormatError` on bad magic, unknown version, truncation,
    or an architecture that differs from ``expect_architecture``.
    """
    data = Path(path).read_bytes()
    if len(data) < 8 or data[:4] != CKPT_MAGIC:
        raise FormatError("not a DDKL checkpoint (bad magic)")
    (version,) = struct.unpack("<I", data[4:8])
    if version != CKPT_VERSION:
        raise FormatError(f"unsupported checkpoint version {version}; expected {CKPT_VERSION}")
    if len(data) < 12:
        raise FormatError("checkpoint truncated in descriptor length")
    (dlen,) = struct.unpack("<I", data[8:12])
    off = 12 + dlen
    if len(data) < off + 8:
        raise FormatError("checkpoint truncated in descriptor")
    try:
        desc = json.loads(data[12:off].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"corrupt checkpoint descriptor: {e}") from None
    (count,) = struct.unpack("<Q", data[off:off + 8])
    body = data[off + 8:]
    if len(body) != 4 * count:
        raise FormatError(f"checkpoint declares {count} parameters but holds {len(body) // 4}")
    arch = desc.get("architecture", {})
    if expect_architecture is not None and arch != expect_architecture:
        raise FormatError(f"architecture mismatch: checkpoint {arch} vs expected {expect_architecture}")
    params = np.frombuffer(body, dtype="<f4").astype(np.float32)
    return params, arch, desc.get("schedule", {})


# --------------------------------------------------------------------------
# loss trace
# --------------------------------------------------------------------------


def write_loss_csv(path, losses) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "loss"])
        for i, v in enumerate(losses):
            w.writerow([i, repr(float(v))])


def read_loss_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return np.array([float(r["loss"]) for r in rows])
