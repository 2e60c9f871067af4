"""IDX (MNIST) reader/writer and the bundled digit fixture."""

from __future__ import annotations

import gzip
import struct
from importlib import resources
from pathlib import Path

import numpy as np

from ..errors import ParseError

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
FIXTURE_IMAGES = "digits-images-idx3-ubyte.gz"
FIXTURE_LABELS = "digits-labels-idx1-ubyte.gz"


def _read_bytes(path):
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def parse_idx(raw, expected_magic, name="IDX data"):
    """Parse an unsigned-byte IDX payload into an array of the declared shape."""
    if len(raw) < 4:
        raise ParseError(f"{name}: file too short for a magic number", len(raw))
    (magic,) = struct.unpack(">I", raw[:4])
    if magic != expected_magic:
        raise ParseError(f"{name}: bad magic number 0x{magic:08x}, expected 0x{expected_magic:08x}", 0)
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise ParseError(f"{name}: truncated header", len(raw))
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    n = int(np.prod(dims, dtype=np.int64))
    if len(raw) - header != n:
        offset = min(len(raw), header + n)
        raise ParseError(f"{name}: payload has {len(raw) - header} bytes, header declares {n}", offset)
    return np.frombuffer(raw, dtype=np.uint8, offset=header).reshape(dims)


def load_mnist_idx(images_path, labels_path):
    """Images scaled to [0, 1] with shape ``(n, 784)`` and integer labels ``(n,)``."""
    images = parse_idx(_read_bytes(images_path), IMAGE_MAGIC, str(images_path))
    labels = parse_idx(_read_bytes(labels_path), LABEL_MAGIC, str(labels_path))
    if images.shape[0] != labels.shape[0]:
        raise ParseError(f"{images_path} has {images.shape[0]} images but "
                         f"{labels_path} has {labels.shape[0]} labels", 4)
    if labels.size and labels.max() > 9:
        bad = int(np.argmax(labels > 9))
        raise ParseError(f"{labels_path}: label {labels[bad]} out of range", 8 + bad)
    flat = images.reshape(images.shape[0], -1).astype(float) / 255.0
    return flat, labels.astype(int)


def encode_idx(array):
    array = np.ascontiguousarray(array, dtype=np.uint8)
    magic = 0x00000800 | array.ndim
    return struct.pack(f">I{array.ndim}I", magic, *array.shape) + array.tobytes()


def write_idx(path, array):
    data = encode_idx(array)
    path = Path(path)
    if path.suffix == ".gz":
        # mtime=0 keeps the archive byte-identical between runs
        data = gzip.compress(data, mtime=0)
    path.write_bytes(data)


def fixture_paths():
    base = resources.files("photonic_qgan.data") / "fixtures"
    return base / FIXTURE_IMAGES, base / FIXTURE_LABELS


def load_fixture(digit=None):
    images, labels = load_mnist_idx(*fixture_paths())
    if digit is None:
        return images, labels
    keep = labels == digit
    return images[keep], labels[keep]


def build_fixture(per_digit=500, seed=7):
    """28x28 digit images derived from scikit-learn's bundled 8x8 digits.

    Each 8x8 image is upsampled to 20x20, centred in a 28x28 frame as in
    MNIST, and jittered by a small random rotation and shift until every digit
    has ``per_digit`` examples.
    """
    from scipy import ndimage
    from sklearn.datasets import load_digits

    digits = load_digits()
    rng = np.random.Generator(np.random.PCG64(seed))
    out_images, out_labels = [], []
    for d in range(10):
        src = digits.images[digits.target == d] / 16.0
        for j in range(per_digit):
            base = src[j % len(src)]
            big = np.clip(ndimage.zoom(base, 20 / 8, order=1), 0, 1)
            frame = np.zeros((28, 28))
            frame[4:24, 4:24] = big
            if j >= len(src):
                frame = ndimage.rotate(frame, rng.uniform(-12, 12), reshape=False, order=1)
                frame = ndimage.shift(frame, rng.integers(-2, 3, size=2), order=0)
            out_images.append(np.clip(np.rint(frame * 255), 0, 255).astype(np.uint8))
            out_labels.append(d)
    return np.array(out_images), np.array(out_labels, dtype=np.uint8)


def write_fixture(directory, per_digit=500, seed=7):
    images, labels = build_fixture(per_digit, seed)
    directory = Path(directory)
    write_idx(directory / FIXTURE_IMAGES, images)
    write_idx(directory / FIXTURE_LABELS, labels)
    return directory / FIXTURE_IMAGES, directory / FIXTURE_LABELS
