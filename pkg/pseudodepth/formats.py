"""Binary PPM/PGM (8-bit) and PFM (float32) image codecs."""

import re
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from pseudodepth.errors import DatasetError
from pseudodepth.utils import atomic_write_bytes

PathLike = Union[str, Path]

_NETPBM_HEADER = re.compile(rb"^(P[56])\s+(\d+)\s+(\d+)\s+(\d+)\s")
_PFM_HEADER = re.compile(rb"^(P[Ff])\n(\d+) (\d+)\n(-?[0-9.eE+-]+)\n")


def _read(path: PathLike) -> bytes:
    path = Path(path)
    if not path.is_file():
        raise DatasetError("missing file", path)
    return path.read_bytes()


def write_ppm(path: PathLike, image: np.ndarray) -> Path:
    """Write an (H, W, 3) image with values in [0, 1] as 8-bit binary PPM."""
    if image.ndim != 3 or image.shape[2] != 3:
        raise DatasetError(f"PPM expects (H, W, 3), got {image.shape}", path)
    height, width = image.shape[:2]
    pixels = np.clip(np.rint(image * 255.0), 0, 255).astype(np.uint8)
    return atomic_write_bytes(path, b"P6\n%d %d\n255\n" % (width, height) + pixels.tobytes())


def write_pgm(path: PathLike, image: np.ndarray) -> Path:
    """Write an (H, W) uint8-range integer map as binary PGM."""
    if image.ndim != 2:
        raise DatasetError(f"PGM expects (H, W), got {image.shape}", path)
    if image.min(initial=0) < 0 or image.max(initial=0) > 255:
        raise DatasetError("PGM values must lie in [0, 255]", path)
    height, width = image.shape
    pixels = image.astype(np.uint8)
    return atomic_write_bytes(path, b"P5\n%d %d\n255\n" % (width, height) + pixels.tobytes())


def _read_netpbm(path: PathLike, magic: bytes, channels: int) -> np.ndarray:
    data = _read(path)
    match = _NETPBM_HEADER.match(data)
    if match is None or match.group(1) != magic:
        raise DatasetError(f"bad {magic.decode()} header", path)
    width, height, maxval = (int(match.group(i)) for i in (2, 3, 4))
    if maxval != 255:
        raise DatasetError(f"unsupported maxval {maxval}", path)
    expected = width * height * channels
    body = data[match.end() :]
    if len(body) != expected:
        raise DatasetError(f"expected {expected} pixel bytes, found {len(body)}", path)
    shape: Tuple[int, ...] = (height, width, channels) if channels > 1 else (height, width)
    return np.frombuffer(body, dtype=np.uint8).reshape(shape)


def read_ppm(path: PathLike) -> np.ndarray:
    """Read an 8-bit binary PPM as float64 (H, W, 3) in [0, 1]."""
    return _read_netpbm(path, b"P6", 3).astype(np.float64) / 255.0


def read_pgm(path: PathLike) -> np.ndarray:
    """Read a binary PGM as uint8 (H, W)."""
    return _read_netpbm(path, b"P5", 1).copy()


def write_pfm(path: PathLike, image: np.ndarray) -> Path:
    """
    Write an (H, W) or (H, W, 3) float map as little-endian PFM.

    Rows are stored bottom-to-top per the format; the scale header is -1.0.
    """
    if image.ndim == 2:
        identifier = b"Pf"
    elif image.ndim == 3 and image.shape[2] == 3:
        identifier = b"PF"
    else:
        raise DatasetError(f"PFM expects (H, W) or (H, W, 3), got {image.shape}", path)
    height, width = image.shape[:2]
    body = np.ascontiguousarray(np.flipud(image).astype("<f4")).tobytes()
    return atomic_write_bytes(path, identifier + b"\n%d %d\n-1.0\n" % (width, height) + body)


def read_pfm(path: PathLike) -> np.ndarray:
    """Read a PFM file into float32 (H, W) or (H, W, 3), top row first."""
    data = _read(path)
    match = _PFM_HEADER.match(data)
    if match is None:
        raise DatasetError("bad PFM header", path)
    channels = 3 if match.group(1) == b"PF" else 1
    width, height = int(match.group(2)), int(match.group(3))
    scale = float(match.group(4))
    dtype = np.dtype("<f4") if scale < 0 else np.dtype(">f4")
    body = data[match.end() :]
    expected = width * height * channels * 4
    if len(body) != expected:
        raise DatasetError(f"expected {expected} float bytes, found {len(body)}", path)
    shape: Tuple[int, ...] = (height, width, channels) if channels > 1 else (height, width)
    array = np.frombuffer(body, dtype=dtype).reshape(shape)
    return np.flipud(array).astype(np.float32)
