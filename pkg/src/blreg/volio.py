"""Minimal self-describing volume file format.

Layout: a short ASCII header terminated by an ``end-header`` line,
followed by the raw payload as little-endian IEEE-754 single precision in
C (axis-major) order.  Vector fields store the component axis first and
declare ``components`` in the header.  Files round-trip bit-exactly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

MAGIC = b"BLVOL 1"


@dataclass(frozen=True)
class VolumeHeader:
    dims: tuple[int, ...]
    spacing: tuple[float, ...]
    components: int = 1
    dtype: str = "float32"
    byteorder: str = "little"
    layout: str = "axis-major"


class VolumeFormatError(ValueError):
    pass


def write_volume(path: str | os.PathLike, values: np.ndarray,
                 spacing: tuple[float, ...] | None = None) -> None:
    """Write a scalar ``(*dims)`` or vector ``(c, *dims)`` array."""
    values = np.asarray(values)
    if values.ndim < 1:
        raise VolumeFormatError("volume payload must be an array")
    # vectors carry the component axis first: (d, *dims) with d == grid rank
    if values.ndim >= 2 and values.shape[0] == values.ndim - 1:
        components, dims = values.shape[0], values.shape[1:]
    else:
        components, dims = 1, values.shape
    if spacing is None:
        spacing = tuple(1.0 / n for n in dims)
    if len(spacing) != len(dims):
        raise VolumeFormatError("spacing must have one entry per axis")
    payload = np.ascontiguousarray(values, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(MAGIC + b"\n")
        fh.write(f"dims: {' '.join(str(n) for n in dims)}\n".encode())
        fh.write(f"spacing: {' '.join(repr(float(s)) for s in spacing)}\n".encode())
        fh.write(f"components: {components}\n".encode())
        fh.write(b"dtype: float32\n")
        fh.write(b"byteorder: little\n")
        fh.write(b"layout: axis-major\n")
        fh.write(b"end-header\n")
        fh.write(payload.tobytes(order="C"))


def read_volume(path: str | os.PathLike) -> tuple[np.ndarray, VolumeHeader]:
    """Read a volume; returns float32 values and the parsed header."""
    with open(path, "rb") as fh:
        magic = fh.readline().rstrip(b"\n")
        if magic != MAGIC:
            raise VolumeFormatError(f"{path}: not a volume file (bad magic {magic!r})")
        fields: dict[str, str] = {}
        while True:
            line = fh.readline()
            if not line:
                raise VolumeFormatError(f"{path}: truncated header")
            line = line.rstrip(b"\n")
            if line == b"end-header":
                break
            try:
                key, value = line.decode("ascii").split(":", 1)
            except ValueError as exc:
                raise VolumeFormatError(f"{path}: malformed header line {line!r}") from exc
            fields[key.strip()] = value.strip()
        try:
            dims = tuple(int(t) for t in fields["dims"].split())
            spacing = tuple(float(t) for t in fields["spacing"].split())
            components = int(fields.get("components", "1"))
        except (KeyError, ValueError) as exc:
            raise VolumeFormatError(f"{path}: invalid header fields") from exc
        if fields.get("dtype", "float32") != "float32":
            raise VolumeFormatError(f"{path}: unsupported dtype {fields.get('dtype')!r}")
        if fields.get("byteorder", "little") != "little":
            raise VolumeFormatError(f"{path}: unsupported byte order")
        payload = fh.read()
    count = int(np.prod(dims)) * components
    if len(payload) != 4 * count:
        raise VolumeFormatError(
            f"{path}: payload holds {len(payload)} bytes, expected {4 * count}"
        )
    values = np.frombuffer(payload, dtype="<f4").copy()
    shape = dims if components == 1 else (components,) + dims
    header = VolumeHeader(dims=dims, spacing=spacing, components=components)
    return values.reshape(shape), header
