"""Dataset loading, preprocessing and model serialization.

File formats:

* IDX (MNIST): big-endian, magic 0x00000803 for images, 0x00000801 for
  labels. Files ending in ``.gz`` are decompressed transparently.
* PGM: binary P5 only, maxval <= 255.
* Model: ``b"SCNN"`` + u32 version + u32 p + u32 m + f64 lam, then D (p x m)
  and C (m x p) as row-major f64, everything little-endian.
"""

import gzip
import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import ScnnModel

log = logging.getLogger(__name__)

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801
MODEL_MAGIC = b"SCNN"
MODEL_VERSION = 1


class DataFormatError(ValueError):
    """A data or model file is malformed or unsupported."""


@dataclass(frozen=True)
class LabeledDataset:
    x: np.ndarray  # N x p
    labels: np.ndarray  # N ints in [0, 9]
    shape: tuple = ()  # image (rows, cols) when known

    def __post_init__(self):
        if len(self.labels) != self.x.shape[0]:
            raise ValueError(f"{len(self.labels)} labels for {self.x.shape[0]} rows")

    def subset(self, idx):
        return LabeledDataset(self.x[idx], self.labels[idx], self.shape)


@dataclass(frozen=True)
class PatchSet:
    x: np.ndarray  # N x side^2
    side: int
    source_ids: np.ndarray

    def __post_init__(self):
        if self.x.shape[1] != self.side * self.side:
            raise ValueError(f"patch width {self.x.shape[1]} != side^2 = {self.side ** 2}")


@dataclass(frozen=True)
class CorruptionMask:
    mask: np.ndarray  # True where a pixel was zeroed
    fraction: float
    seed: int = None


def _read_bytes(path):
    path = Path(path)
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as f:
            return f.read()
    return path.read_bytes()


def _parse_idx(buf, expected_magic, what):
    if len(buf) < 8:
        raise DataFormatError(f"{what}: truncated header ({len(buf)} bytes)")
    magic, = struct.unpack_from(">I", buf, 0)
    if magic != expected_magic:
        raise DataFormatError(f"{what}: bad magic 0x{magic:08x}, expected 0x{expected_magic:08x}")
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(buf) < header:
        raise DataFormatError(f"{what}: truncated header at byte {len(buf)}, need {header}")
    dims = struct.unpack_from(f">{ndim}I", buf, 4)
    size = int(np.prod(dims))
    if len(buf) < header + size:
        raise DataFormatError(f"{what}: truncated data at byte offset {len(buf)}, "
                              f"expected {header + size} bytes")
    if len(buf) > header + size:
        raise DataFormatError(f"{what}: {len(buf) - header - size} trailing bytes")
    data = np.frombuffer(buf, dtype=np.uint8, count=size, offset=header)
    return data.reshape(dims)


def load_idx(images_path, labels_path):
    """Load an IDX image/label pair; pixels stay in 0..255 as float64."""
    images = _parse_idx(_read_bytes(images_path), IDX_IMAGE_MAGIC, str(images_path))
    labels = _parse_idx(_read_bytes(labels_path), IDX_LABEL_MAGIC, str(labels_path))
    if images.shape[0] != labels.shape[0]:
        raise DataFormatError(f"image file holds {images.shape[0]} items, "
                              f"label file {labels.shape[0]}")
    if labels.size and labels.max() > 9:
        raise DataFormatError(f"label {labels.max()} outside 0..9")
    n = images.shape[0]
    x = images.reshape(n, -1).astype(np.float64)
    return LabeledDataset(x=x, labels=labels.astype(np.int64), shape=tuple(images.shape[1:]))


def load_idx_images(path):
    images = _parse_idx(_read_bytes(path), IDX_IMAGE_MAGIC, str(path))
    return images.reshape(images.shape[0], -1).astype(np.float64)


def _write_maybe_gz(path, payload):
    path = Path(path)
    if path.suffix == ".gz":
        # mtime=0 keeps the output byte-identical across runs.
        with open(path, "wb") as raw, gzip.GzipFile(fileobj=raw, mode="wb", mtime=0) as f:
            f.write(payload)
    else:
        path.write_bytes(payload)


def write_idx(images_path, labels_path, images, labels):
    """Write uint8 images (N x rows x cols) and labels in IDX format."""
    images = np.asarray(images)
    labels = np.asarray(labels)
    if images.ndim != 3:
        raise ValueError(f"images must be N x rows x cols, got {images.shape}")
    n, rows, cols = images.shape
    head = struct.pack(">IIII", IDX_IMAGE_MAGIC, n, rows, cols)
    _write_maybe_gz(images_path, head + images.astype(np.uint8).tobytes())
    head = struct.pack(">II", IDX_LABEL_MAGIC, len(labels))
    _write_maybe_gz(labels_path, head + labels.astype(np.uint8).tobytes())


def _pgm_tokens(buf, count):
    """Read `count` whitespace-separated header tokens, skipping # comments."""
    tokens = []
    pos = 0
    while len(tokens) < count:
        while pos < len(buf) and buf[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(buf):
            raise DataFormatError("truncated PGM header")
        if buf[pos:pos + 1] == b"#":
            end = buf.find(b"\n", pos)
            pos = len(buf) if end < 0 else end + 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
            pos += 1
        tokens.append(buf[start:pos])
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def load_pgm(path):
    """Grayscale P5 image as a float matrix in [0, 1]."""
    buf = Path(path).read_bytes()
    if buf[:2] == b"P2":
        raise DataFormatError(f"{path}: ASCII PGM (P2) is not supported; convert to P5")
    if buf[:2] != b"P5":
        raise DataFormatError(f"{path}: not a binary PGM (magic {buf[:2]!r})")
    tokens, start = _pgm_tokens(buf, 4)
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise DataFormatError(f"{path}: malformed PGM header {tokens!r}") from None
    if maxval > 255 or maxval < 1:
        raise DataFormatError(f"{path}: maxval {maxval} unsupported (need 1..255)")
    size = width * height
    if len(buf) < start + size:
        raise DataFormatError(f"{path}: truncated pixel data, {len(buf) - start} of {size} bytes")
    pixels = np.frombuffer(buf, dtype=np.uint8, count=size, offset=start)
    return pixels.reshape(height, width).astype(np.float64) / maxval


def save_pgm(path, image):
    """Write a uint8 (or [0, 1] float) image as binary P5."""
    image = np.asarray(image)
    if image.dtype != np.uint8:
        image = np.clip(np.round(image * 255.0), 0, 255).astype(np.uint8)
    h, w = image.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode("ascii") + image.tobytes())


def extract_patches(image, side, count, rng, source_id=0):
    """`count` square patches at uniform random top-left corners, flattened row-major."""
    image = np.asarray(image, dtype=np.float64)
    h, w = image.shape
    if h < side or w < side:
        raise ValueError(f"image {image.shape} smaller than patch side {side}")
    rows = rng.integers(0, h - side + 1, size=count)
    cols = rng.integers(0, w - side + 1, size=count)
    win = np.lib.stride_tricks.sliding_window_view(image, (side, side))
    x = win[rows, cols].reshape(count, side * side).copy()
    return PatchSet(x=x, side=side, source_ids=np.full(count, source_id))


def patches_from_images(images, side, count, rng):
    """Draw `count` patches spread evenly (round-robin) over several images."""
    per = [count // len(images) + (i < count % len(images)) for i in range(len(images))]
    sets = [extract_patches(img, side, k, rng, source_id=i)
            for i, (img, k) in enumerate(zip(images, per)) if k]
    return PatchSet(x=np.vstack([s.x for s in sets]), side=side,
                    source_ids=np.concatenate([s.source_ids for s in sets]))


def center_rows(x):
    x = np.asarray(x, dtype=np.float64)
    return x - x.mean(axis=1, keepdims=True)


def remap_pixels(x, lo=-1.0, hi=1.0, in_lo=None, in_hi=None):
    """Affine map of pixel values onto [lo, hi].

    The input range defaults to [0, 255], or [0, 1] when every value is at
    most 1. Input that already lies inside [-1, 1] with negative entries
    looks pre-mapped and triggers a warning. A degenerate (constant) input
    range maps to the midpoint.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size and x.min() < 0 and x.min() >= -1 and x.max() <= 1:
        log.warning("remap_pixels: input already within [-1, 1]; remapping again")
    if in_lo is None or in_hi is None:
        in_lo, in_hi = 0.0, (1.0 if x.size and x.max() <= 1.0 else 255.0)
    if in_hi <= in_lo:
        log.warning("remap_pixels: degenerate input range; mapping to midpoint")
        return np.full_like(x, (lo + hi) / 2.0)
    return lo + (x - in_lo) * (hi - lo) / (in_hi - in_lo)


def downsample(x, shape, factor=2):
    """Block-average each flattened image by `factor` along both axes."""
    rows, cols = shape
    n = x.shape[0]
    if rows % factor or cols % factor:
        raise ValueError(f"image shape {shape} not divisible by {factor}")
    img = x.reshape(n, rows // factor, factor, cols // factor, factor)
    return img.mean(axis=(2, 4)).reshape(n, (rows // factor) * (cols // factor))


def corrupt_missing(x, fraction, rng):
    """Zero exactly round(fraction * p) randomly chosen pixels in every row."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must lie in [0, 1], got {fraction}")
    x = np.array(x, dtype=np.float64)
    n, p = x.shape
    k = int(round(fraction * p))
    # argsort of iid uniforms gives an independent random permutation per row
    order = np.argsort(rng.random((n, p)), axis=1, kind="stable")
    mask = np.zeros((n, p), dtype=bool)
    np.put_along_axis(mask, order[:, :k], True, axis=1)
    x[mask] = 0.0
    return x, CorruptionMask(mask=mask, fraction=fraction)


def add_gaussian_noise(x, sigma, rng):
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    x = np.asarray(x, dtype=np.float64)
    if sigma == 0:
        return x.copy()
    return x + rng.normal(0.0, sigma, size=x.shape)


def save_model(path, model):
    p, m = model.d.shape
    head = MODEL_MAGIC + struct.pack("<IIId", MODEL_VERSION, p, m, model.lam)
    body = (np.ascontiguousarray(model.d, dtype="<f8").tobytes()
            + np.ascontiguousarray(model.c, dtype="<f8").tobytes())
    Path(path).write_bytes(head + body)


def load_model(path):
    buf = Path(path).read_bytes()
    if buf[:4] != MODEL_MAGIC:
        raise DataFormatError(f"{path}: bad magic {buf[:4]!r}, expected {MODEL_MAGIC!r}")
    if len(buf) < 24:
        raise DataFormatError(f"{path}: truncated header ({len(buf)} bytes)")
    version, p, m, lam = struct.unpack_from("<IIId", buf, 4)
    if version != MODEL_VERSION:
        raise DataFormatError(f"{path}: unsupported model version {version}")
    need = 24 + 16 * p * m
    if len(buf) != need:
        raise DataFormatError(f"{path}: expected {need} bytes for p={p}, m={m}, found {len(buf)}")
    d = np.frombuffer(buf, dtype="<f8", count=p * m, offset=24).reshape(p, m)
    c = np.frombuffer(buf, dtype="<f8", count=p * m, offset=24 + 8 * p * m).reshape(m, p)
    return ScnnModel(d=d.astype(np.float64), c=c.astype(np.float64), lam=lam)


def load_matrix(path):
    """Read a data matrix from .npy, .csv (no header) or an IDX image file."""
    path = Path(path)
    name = path.name
    if name.endswith(".npy"):
        x = np.load(path, allow_pickle=False)
    elif name.endswith(".csv"):
        x = np.loadtxt(path, delimiter=",", ndmin=2, comments="#")
    elif "idx3" in name or name.endswith((".idx", ".idx.gz")):
        x = load_idx_images(path)
    else:
        raise DataFormatError(f"{path}: unknown data format (use .npy, .csv or IDX)")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.size == 0:
        raise DataFormatError(f"{path}: expected a non-empty 2-D matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DataFormatError(f"{path}: non-finite values")
    return x


def save_matrix(path, x):
    path = Path(path)
    if path.name.endswith(".npy"):
        np.save(path, np.asarray(x, dtype=np.float64), allow_pickle=False)
    else:
        np.savetxt(path, x, delimiter=",", fmt="%.17g")
