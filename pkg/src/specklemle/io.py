"""Bit-exact file formats: measurement bundles, PGM images, float-raw
fields with JSON sidecars, and NDJSON diagnostics.

Bundle layout (little endian):

    magic  "SPKL1\\0"
    u32    H, W, L
    f64    sigma_z                  (working scale, like the fields)
    u8     aperture kind            (0 full, 1 circular, 2 annular)
    f64    center h0, w0, radius, inner radius
    u64    seed
    f64[]  L fields, row major, interleaved re/im

All numeric payload is stored at the set's working scale, so a bundle
round-trips the MeasurementSet bit-exactly. Masks are rebuilt from their
geometry on read, which reproduces them exactly.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError
from .fields import make_aperture
from .simulate import MeasurementSet

BUNDLE_MAGIC = b"SPKL1\x00"
_KIND_CODES = {"full": 0, "circular": 1, "annular": 2}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}


def write_bundle(path, ms: MeasurementSet) -> None:
    ap = ms.aperture
    if ap.kind not in _KIND_CODES:
        raise FormatError(f"bundles cannot carry {ap.kind!r} masks")
    head = BUNDLE_MAGIC
    head += struct.pack("<III", ap.H, ap.W, ms.L)
    head += struct.pack("<d", ms.sigma_z)
    head += struct.pack("<Bdddd", _KIND_CODES[ap.kind], ap.center[0],
                        ap.center[1], ap.radius, ap.inner_radius)
    head += struct.pack("<Q", ms.seed % 2**64)
    body = np.ascontiguousarray(ms.measurements, dtype=np.complex128)
    with open(path, "wb") as f:
        f.write(head)
        f.write(body.view(np.float64).tobytes())


def read_bundle(path) -> MeasurementSet:
    raw = Path(path).read_bytes()
    if not raw.startswith(BUNDLE_MAGIC):
        raise FormatError(f"{path} is not a measurement bundle")
    off = len(BUNDLE_MAGIC)
    H, W, L = struct.unpack_from("<III", raw, off)
    off += 12
    (sigma_z,) = struct.unpack_from("<d", raw, off)
    off += 8
    kind_code, h0, w0, radius, inner = struct.unpack_from("<Bdddd", raw, off)
    off += 33
    (seed,) = struct.unpack_from("<Q", raw, off)
    off += 8
    if kind_code not in _KIND_NAMES:
        raise FormatError(f"unknown aperture code {kind_code}")
    kind = _KIND_NAMES[kind_code]
    expected = L * H * W * 16
    if len(raw) - off != expected:
        raise FormatError("bundle payload size mismatch")
    data = np.frombuffer(raw, dtype=np.float64, offset=off)
    fields = data.view(np.complex128).reshape(L, H, W).copy()
    aperture = make_aperture(H, W, kind, radius=radius, inner_radius=inner,
                             center=(h0, w0))
    return MeasurementSet(fields, sigma_z, aperture, int(seed))


# --- PGM (8/16-bit grayscale) ------------------------------------------------


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) or ascii (P2) PGM image as float64."""
    raw = Path(path).read_bytes()
    if raw[:2] not in (b"P5", b"P2"):
        raise FormatError(f"{path} is not a PGM image")
    binary = raw[:2] == b"P5"

    tokens = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos])
    W, H, maxval = (int(t) for t in tokens)
    if maxval <= 0 or maxval > 65535:
        raise FormatError(f"bad PGM maxval {maxval}")

    if binary:
        pos += 1  # exactly one whitespace byte after the header
        dtype = np.dtype(">u2") if maxval > 255 else np.uint8
        count = H * W
        img = np.frombuffer(raw, dtype=dtype, count=count, offset=pos)
        if img.size != count:
            raise FormatError("truncated PGM payload")
    else:
        values = raw[pos:].split()
        if len(values) < H * W:
            raise FormatError("truncated PGM payload")
        img = np.array([int(v) for v in values[:H * W]])
    return img.reshape(H, W).astype(np.float64)


def write_pgm(path, image, maxval=255) -> None:
    img = np.asarray(image)
    rounded = np.clip(np.rint(img), 0, maxval)
    dtype = np.dtype(">u2") if maxval > 255 else np.uint8
    with open(path, "wb") as f:
        f.write(f"P5\n{img.shape[1]} {img.shape[0]}\n{maxval}\n".encode())
        f.write(rounded.astype(dtype).tobytes())


# --- float32 raw + JSON sidecar ----------------------------------------------


def _sidecar_path(path) -> Path:
    return Path(str(path) + ".json")


def write_field_raw(path, array, scale=255.0, domain="image") -> None:
    """f32 row-major raw with a {H, W, dtype, scale} sidecar."""
    arr = np.ascontiguousarray(array, dtype=np.float32)
    if arr.ndim != 2:
        raise FormatError("raw interchange holds a single 2-D field")
    with open(path, "wb") as f:
        f.write(arr.tobytes())
    meta = {"H": int(arr.shape[0]), "W": int(arr.shape[1]),
            "dtype": "float32", "scale": float(scale), "domain": domain}
    with open(_sidecar_path(path), "w") as f:
        json.dump(meta, f)
        f.write("\n")


def read_field_raw(path) -> np.ndarray:
    with open(_sidecar_path(path)) as f:
        meta = json.load(f)
    if meta.get("dtype") != "float32":
        raise FormatError(f"unsupported raw dtype {meta.get('dtype')!r}")
    H, W = int(meta["H"]), int(meta["W"])
    data = np.fromfile(path, dtype=np.float32)
    if data.size != H * W:
        raise FormatError("raw payload does not match its sidecar")
    return data.reshape(H, W).astype(np.float64)


def read_image_any(path) -> np.ndarray:
    """Display-scale image from a PGM file or a raw+sidecar pair."""
    p = Path(path)
    with open(p, "rb") as f:
        head = f.read(2)
    if head in (b"P5", b"P2"):
        return read_pgm(p)
    if _sidecar_path(p).exists():
        return read_field_raw(p)
    raise FormatError(f"cannot identify image format of {path}")


# --- diagnostics -------------------------------------------------------------


def write_ndjson(path, records) -> None:
    """One JSON object per line; accepts dicts or objects with as_dict()."""
    with open(path, "w") as f:
        for rec in records:
            obj = rec.as_dict() if hasattr(rec, "as_dict") else rec
            json.dump(obj, f)
            f.write("\n")


def read_ndjson(path) -> list:
    out = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out
