"""Bit-exact binary raster containers for SLC, guide, covariance and labels.

Layout (all multi-byte fields little-endian):

    offset  size  field
    0       6     magic "PGNLM1"
    6       1     kind: 1=SLC, 2=guide, 3=covariance, 4=labels
    7       4     height (u32)
    11      4     width (u32)
    15      2     bands (u16)
    17      ...   payload, row-major, channel-interleaved

Payload values are IEEE-754 single precision except labels, which are u16.
Complex values are stored as adjacent (real, imag) pairs; covariance
matrices as the 9 reals [c11, c22, c33, Re c12, Im c12, Re c13, Im c13,
Re c23, Im c23]. Payload length must match the header exactly; trailing
bytes are an error. Arrays are returned in double precision.
"""

from __future__ import annotations

import struct

import numpy as np

from .core import covariance_to_real9, real9_to_covariance

MAGIC = b"PGNLM1"
HEADER = struct.Struct("<6sBIIH")
HEADER_SIZE = HEADER.size  # 17 bytes

KIND_SLC = 1
KIND_GUIDE = 2
KIND_COVARIANCE = 3
KIND_LABELS = 4
KIND_NAMES = {KIND_SLC: "slc", KIND_GUIDE: "guide",
              KIND_COVARIANCE: "covariance", KIND_LABELS: "labels"}


class ContainerError(ValueError):
    """Container format violation; ``code`` is a stable error category."""

    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _payload_spec(kind, bands):
    # (values per pixel, numpy dtype) for the on-disk payload
    if kind == KIND_SLC:
        if bands != 3:
            raise ContainerError("bad_header", f"SLC containers need bands=3, got {bands}")
        return 6, np.dtype("<f4")
    if kind == KIND_GUIDE:
        if bands < 1:
            raise ContainerError("bad_header", "guide containers need bands >= 1")
        return bands, np.dtype("<f4")
    if kind == KIND_COVARIANCE:
        if bands != 9:
            raise ContainerError("bad_header", f"covariance containers need bands=9, got {bands}")
        return 9, np.dtype("<f4")
    if kind == KIND_LABELS:
        if bands != 1:
            raise ContainerError("bad_header", f"label containers need bands=1, got {bands}")
        return 1, np.dtype("<u2")
    raise ContainerError("bad_kind", f"unknown container kind {kind}")


def write_container(path, kind, arr):
    """Serialize a raster; the byte stream is a pure function of the input."""
    arr = np.asarray(arr)
    if kind == KIND_SLC:
        if arr.ndim != 3 or arr.shape[-1] != 3:
            raise ContainerError("bad_shape", f"SLC raster must be (H, W, 3), got {arr.shape}")
        height, width = arr.shape[:2]
        bands = 3
        arr = arr.astype(np.complex128, copy=False)
        if not np.isfinite(arr).all():
            raise ContainerError("nonfinite", "SLC raster contains non-finite values")
        payload = np.empty((height, width, 3, 2), dtype="<f4")
        payload[..., 0] = arr.real
        payload[..., 1] = arr.imag
    elif kind == KIND_GUIDE:
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[-1] < 1:
            raise ContainerError("bad_shape", f"guide raster must be (H, W, B), got {arr.shape}")
        height, width, bands = arr.shape
        arr = arr.astype(np.float64, copy=False)
        if not np.isfinite(arr).all():
            raise ContainerError("nonfinite", "guide raster contains non-finite values")
        payload = arr.astype("<f4")
    elif kind == KIND_COVARIANCE:
        if arr.ndim != 4 or arr.shape[-2:] != (3, 3):
            raise ContainerError("bad_shape",
                                 f"covariance raster must be (H, W, 3, 3), got {arr.shape}")
        height, width = arr.shape[:2]
        bands = 9
        if not np.isfinite(arr).all():
            raise ContainerError("nonfinite", "covariance raster contains non-finite values")
        payload = covariance_to_real9(arr).astype("<f4")
    elif kind == KIND_LABELS:
        if arr.ndim != 2:
            raise ContainerError("bad_shape", f"label raster must be (H, W), got {arr.shape}")
        height, width = arr.shape
        bands = 1
        if not np.issubdtype(arr.dtype, np.integer):
            raise ContainerError("bad_shape", "label raster must be integer-valued")
        if arr.min() < 0 or arr.max() > np.iinfo(np.uint16).max:
            raise ContainerError("bad_shape", "label values must fit in u16")
        payload = arr.astype("<u2")
    else:
        raise ContainerError("bad_kind", f"unknown container kind {kind}")

    if height < 1 or width < 1:
        raise ContainerError("bad_shape", "raster dimensions must be >= 1")

    header = HEADER.pack(MAGIC, kind, height, width, bands)
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(payload.tobytes())
    except OSError as exc:
        raise ContainerError("io", f"cannot write {path}: {exc}") from exc


def read_container(path):
    """Read and validate a container; returns (kind, array).

    SLC rasters come back as complex128 (H, W, 3), guides as float64
    (H, W, B), covariance fields as Hermitian complex128 (H, W, 3, 3) and
    labels as int32 (H, W).
    """
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise ContainerError("io", f"cannot read {path}: {exc}") from exc

    if len(blob) < HEADER_SIZE:
        raise ContainerError(
            "truncated",
            f"{path}: file holds {len(blob)} bytes, header needs {HEADER_SIZE}")
    magic, kind, height, width, bands = HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise ContainerError("bad_magic", f"{path}: bad magic {magic!r}")
    per_pixel, dtype = _payload_spec(kind, bands)
    if height < 1 or width < 1:
        raise ContainerError("bad_header", f"{path}: empty dimensions {height}x{width}")

    expected = height * width * per_pixel * dtype.itemsize
    actual = len(blob) - HEADER_SIZE
    if actual < expected:
        raise ContainerError(
            "truncated",
            f"{path}: payload expected {expected} bytes, found {actual}")
    if actual > expected:
        raise ContainerError(
            "trailing",
            f"{path}: payload expected {expected} bytes, found {actual} "
            "(trailing bytes)")

    flat = np.frombuffer(blob, dtype=dtype, offset=HEADER_SIZE)
    if kind == KIND_SLC:
        vals = flat.astype(np.float64).reshape(height, width, 3, 2)
        arr = vals[..., 0] + 1j * vals[..., 1]
    elif kind == KIND_GUIDE:
        arr = flat.astype(np.float64).reshape(height, width, bands)
    elif kind == KIND_COVARIANCE:
        arr = real9_to_covariance(
            flat.astype(np.float64).reshape(height, width, 9))
    else:
        arr = flat.astype(np.int32).reshape(height, width)

    if kind != KIND_LABELS and not np.isfinite(arr).all():
        raise ContainerError("nonfinite", f"{path}: payload contains NaN or Inf")
    return kind, arr


def read_expected(path, kind):
    """read_container plus a kind check, for callers that know the schema."""
    actual, arr = read_container(path)
    if actual != kind:
        raise ContainerError(
            "bad_kind",
            f"{path}: expected {KIND_NAMES.get(kind, kind)} container, "
            f"found {KIND_NAMES.get(actual, actual)}")
    return arr
