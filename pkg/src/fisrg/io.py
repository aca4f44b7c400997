"""Reading MRI volumes and reading/writing 2D masks and slices.

Volumes come from single-file NIfTI-1 (``.nii`` or ``.nii.gz``). Masks and
slices are exchanged as binary PGM (P5) or 8-bit grayscale PNG.
"""
import gzip
import os
import struct
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    DecodeError,
    DimensionMismatch,
    IndexOutOfRange,
    MalformedHeader,
    TruncatedPayload,
    UnsupportedDatatype,
    UnsupportedFormat,
)
from .validation import check_mask

HEADER_SIZE = 348

# NIfTI-1 datatype code -> numpy dtype string (byte order added at read time)
NIFTI_DTYPES = {
    2: "u1",
    4: "i2",
    8: "i4",
    16: "f4",
    64: "f8",
    256: "i1",
    512: "u2",
    768: "u4",
}


@dataclass(frozen=True)
class Volume:
    """A 3D scalar volume with voxel values already rescaled.

    ``data`` has shape ``dims`` and is indexed ``data[i, j, k]`` along the
    file's storage axes; ``axis_order`` records that permutation.
    """

    dims: tuple
    data: np.ndarray
    slope: float = 1.0
    intercept: float = 0.0
    axis_order: tuple = (0, 1, 2)

    def __post_init__(self):
        if self.data.size != int(np.prod(self.dims)):
            raise DimensionMismatch(
                f"data has {self.data.size} voxels, dims {self.dims} require "
                f"{int(np.prod(self.dims))}"
            )


@dataclass(frozen=True)
class NiftiHeader:
    endian: str
    dims: tuple
    datatype: int
    bitpix: int
    vox_offset: int
    scl_slope: float
    scl_inter: float
    magic: bytes


def _read_bytes(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] == b"\x1f\x8b":
        try:
            raw = gzip.decompress(raw)
        except (OSError, EOFError) as exc:
            # a truncated gzip stream means the payload is short
            raise TruncatedPayload(f"{path}: truncated gzip stream ({exc})")
    return raw


def parse_header(raw):
    """Parse the 348-byte NIfTI-1 header from ``raw`` bytes.

    Byte order is detected from ``sizeof_hdr`` and every field is unpacked
    with an explicit endianness, so results do not depend on the host.
    """
    if len(raw) < HEADER_SIZE:
        raise MalformedHeader(f"header too short: {len(raw)} bytes")
    for endian in ("<", ">"):
        (sizeof_hdr,) = struct.unpack_from(endian + "i", raw, 0)
        if sizeof_hdr == HEADER_SIZE:
            break
    else:
        (little,) = struct.unpack_from("<i", raw, 0)
        if little == 540 or struct.unpack_from(">i", raw, 0)[0] == 540:
            raise MalformedHeader("NIfTI-2 files are not supported")
        raise MalformedHeader(f"bad sizeof_hdr {little}, expected {HEADER_SIZE}")

    magic = raw[344:348]
    if magic == b"ni1\x00":
        raise MalformedHeader("header/image pairs (ni1) are not supported")
    if magic != b"n+1\x00":
        raise MalformedHeader(f"bad magic {magic!r}")

    dim = struct.unpack_from(endian + "8h", raw, 40)
    ndim = dim[0]
    if not 1 <= ndim <= 7:
        raise MalformedHeader(f"invalid dim[0] = {ndim}")
    dims = [int(d) for d in dim[1 : ndim + 1]]
    if any(d < 1 for d in dims):
        raise MalformedHeader(f"non-positive dimension in {dims}")
    dims = (dims + [1, 1])[:3] if ndim < 3 else dims
    datatype, bitpix = struct.unpack_from(endian + "2h", raw, 70)
    (vox_offset,) = struct.unpack_from(endian + "f", raw, 108)
    slope, inter = struct.unpack_from(endian + "2f", raw, 112)
    return NiftiHeader(
        endian=endian,
        dims=tuple(dims),
        datatype=int(datatype),
        bitpix=int(bitpix),
        vox_offset=int(vox_offset),
        scl_slope=float(slope),
        scl_inter=float(inter),
        magic=magic,
    )


def load_volume(path):
    """Load a NIfTI-1 volume, applying the header's slope/intercept.

    Only the first 3D volume of a higher-dimensional series is returned.
    """
    raw = _read_bytes(path)
    hdr = parse_header(raw)
    if hdr.datatype not in NIFTI_DTYPES:
        raise UnsupportedDatatype(f"datatype code {hdr.datatype}")
    dtype = np.dtype(hdr.endian + NIFTI_DTYPES[hdr.datatype])

    nx, ny, nz = hdr.dims[:3]
    count = nx * ny * nz
    offset = max(hdr.vox_offset, HEADER_SIZE)
    needed = offset + count * dtype.itemsize
    if len(raw) < needed:
        raise TruncatedPayload(
            f"{path}: payload holds {len(raw) - offset} bytes, header declares "
            f"{count * dtype.itemsize}"
        )
    values = np.frombuffer(raw, dtype=dtype, count=count, offset=offset)
    data = values.astype(np.float64).reshape((nx, ny, nz), order="F")

    slope, inter = hdr.scl_slope, hdr.scl_inter
    # slope 0 (or NaN) means "no scaling" in NIfTI-1
    if slope == 0.0 or not np.isfinite(slope):
        slope, inter = 1.0, 0.0
    if not np.isfinite(inter):
        inter = 0.0
    if (slope, inter) != (1.0, 0.0):
        data = data * slope + inter
    data.setflags(write=False)
    return Volume(dims=(nx, ny, nz), data=data, slope=slope, intercept=inter)


def volume_plane(v, axis, index):
    """Return the raw 2D plane ``index`` along ``axis`` as (rows, cols).

    Rows run along the later of the two remaining storage axes, so the
    plane for ``axis=2`` is ``data[:, :, index].T``.
    """
    if axis not in (0, 1, 2):
        raise IndexOutOfRange(f"axis must be 0, 1 or 2, got {axis}")
    if not 0 <= index < v.dims[axis]:
        raise IndexOutOfRange(
            f"slice index {index} outside [0, {v.dims[axis]}) on axis {axis}"
        )
    return np.take(v.data, index, axis=axis).T


def normalize(plane):
    """Min-max scale to [0, 1]; constant planes map to zeros."""
    plane = np.asarray(plane, dtype=np.float64)
    lo, hi = plane.min(), plane.max()
    if hi == lo:
        return np.zeros_like(plane)
    out = (plane - lo) / (hi - lo)
    return np.clip(out, 0.0, 1.0)


def extract_slice(v, axis, index):
    """Return one plane of ``v`` min-max normalized to [0, 1]."""
    return normalize(volume_plane(v, axis, index))


def extract_mask_slice(v, axis, index):
    """Return one plane of a label volume as a boolean mask (label > 0)."""
    return np.ascontiguousarray(volume_plane(v, axis, index) > 0)


# -- 2D rasters ---------------------------------------------------------------


def _next_token(buf, pos):
    n = len(buf)
    while pos < n:
        c = buf[pos : pos + 1]
        if c == b"#":
            while pos < n and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos : pos + 1].isspace() and buf[pos : pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise DecodeError("unexpected end of PGM header")
    return buf[start:pos], pos


def _read_pgm(raw):
    if raw[:2] != b"P5":
        raise UnsupportedFormat("only binary PGM (P5) is supported")
    pos = 2
    fields = []
    for _ in range(3):
        tok, pos = _next_token(raw, pos)
        try:
            fields.append(int(tok))
        except ValueError:
            raise DecodeError(f"bad PGM header field {tok!r}")
    width, height, maxval = fields
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise DecodeError(f"bad PGM header {fields}")
    pos += 1  # single whitespace byte before the raster
    dtype = np.dtype("u1") if maxval < 256 else np.dtype(">u2")
    size = width * height * dtype.itemsize
    if len(raw) < pos + size:
        raise DecodeError(
            f"PGM raster truncated: {len(raw) - pos} of {size} bytes present"
        )
    arr = np.frombuffer(raw, dtype=dtype, count=width * height, offset=pos)
    return arr.reshape(height, width), maxval


def _read_png(path):
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as im:
            mode = im.mode
            if mode in ("I;16", "I;16B", "I;16L", "I"):
                raise UnsupportedFormat(f"{path}: 16-bit PNG is not supported")
            if mode not in ("L", "1"):
                raise UnsupportedFormat(
                    f"{path}: PNG mode {mode!r} is not 8-bit grayscale"
                )
            arr = np.array(im.convert("L"), dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise DecodeError(f"{path}: {exc}")
    except (OSError, SyntaxError) as exc:
        raise DecodeError(f"{path}: {exc}")
    return arr, 255


def read_raster(path):
    """Read a PGM (P5) or PNG grayscale raster; returns ``(array, maxval)``."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] == b"P5":
        return _read_pgm(raw)
    if raw[:8] == b"\x89PNG\r\n\x1a\n":
        return _read_png(path)
    if raw[:1] == b"P" and raw[1:2] in b"1234567":
        raise UnsupportedFormat(f"{path}: only binary PGM (P5) is supported")
    raise UnsupportedFormat(f"{path}: not a PGM or PNG file")


def load_mask(path):
    """Load an 8-bit PGM/PNG mask; pixels > 0 become ``True``."""
    arr, maxval = read_raster(path)
    if maxval > 255:
        raise UnsupportedFormat(f"{path}: 16-bit PGM masks are not supported")
    return np.ascontiguousarray(arr > 0)


def load_image(path):
    """Load a grayscale PGM/PNG slice scaled to [0, 1] by its maxval."""
    arr, maxval = read_raster(path)
    return np.ascontiguousarray(arr.astype(np.float64) / maxval)


def _write_pgm(arr8, path):
    height, width = arr8.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(arr8, dtype=np.uint8).tobytes())
    os.replace(tmp, path)


def save_mask(m, path):
    """Write ``m`` as a P5 PGM with values {0, 255}."""
    m = check_mask(m)
    _write_pgm(np.where(m, 255, 0).astype(np.uint8), path)


def save_image(img, path):
    """Write a [0, 1] image as an 8-bit P5 PGM."""
    img = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    _write_pgm(np.rint(img * 255.0).astype(np.uint8), path)
