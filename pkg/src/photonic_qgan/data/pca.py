"""PCA compression of 28x28 images and the feature <-> probability map.

Features are min-max normalised into [0, 1] with the training-set extrema,
augmented with a constant 0.5 and divided by their sum, so that three
features become a four-point probability vector and back without loss.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import FitError, InvalidArgument

IMAGE_SIDE = 28
IMAGE_SIZE = IMAGE_SIDE * IMAGE_SIDE
AUGMENT = 0.5
DEFAULT_THRESHOLD = 0.35


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray          # (784,)
    components: np.ndarray    # (k, 784), orthonormal rows
    feature_min: np.ndarray   # (k,)
    feature_max: np.ndarray   # (k,)
    explained_variance: np.ndarray

    @property
    def k(self):
        return self.components.shape[0]

    def to_dict(self):
        return {"k": self.k, "mean": self.mean.tolist(), "components": self.components.tolist(),
                "feature_min": self.feature_min.tolist(), "feature_max": self.feature_max.tolist(),
                "explained_variance": self.explained_variance.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["mean"], dtype=float), np.array(d["components"], dtype=float),
                   np.array(d["feature_min"], dtype=float), np.array(d["feature_max"], dtype=float),
                   np.array(d["explained_variance"], dtype=float))

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def pca_fit(images, k=3, rtol=1e-10):
    """Top-``k`` principal axes of ``images`` (one flattened image per row).

    Components come from the SVD of the centred data. Each axis is signed so
    that its largest-magnitude entry is positive, which makes the fit
    reproducible across LAPACK builds.
    """
    x = np.asarray(images, dtype=float)
    if x.ndim != 2:
        raise InvalidArgument("images must be a 2-D array with one image per row")
    if k < 1:
        raise InvalidArgument("k must be at least 1")
    if x.shape[0] < k + 1:
        raise FitError(f"need at least {k + 1} images to fit {k} components, got {x.shape[0]}")
    mean = x.mean(axis=0)
    centred = x - mean
    _, s, vt = np.linalg.svd(centred, full_matrices=False)
    scale = s[0] if s.size else 0.0
    if s.size < k or scale == 0 or s[k - 1] <= rtol * scale:
        rank = int(np.sum(s > rtol * scale)) if scale else 0
        raise FitError(f"data has only {rank} nonzero variance direction(s), need {k}")
    comps = vt[:k].copy()
    pivot = np.argmax(np.abs(comps), axis=1)
    comps *= np.sign(comps[np.arange(k), pivot])[:, None]
    feats = centred @ comps.T
    var = s[:k] ** 2 / (x.shape[0] - 1)
    return PcaModel(mean, comps, feats.min(axis=0), feats.max(axis=0), var)


def pca_transform(model, image):
    """Features of one image ``(784,)`` or of a batch ``(n, 784)``."""
    return (np.asarray(image, dtype=float) - model.mean) @ model.components.T


def pca_inverse(model, features):
    return model.mean + np.asarray(features, dtype=float) @ model.components


def normalize(model, x):
    span = np.where(model.feature_max > model.feature_min, model.feature_max - model.feature_min, 1.0)
    return np.clip((np.asarray(x, dtype=float) - model.feature_min) / span, 0.0, 1.0)


def denormalize(model, x_norm):
    return model.feature_min + np.asarray(x_norm, dtype=float) * (model.feature_max - model.feature_min)


def norm_to_prob(x_norm):
    """``x' = [x, 0.5]`` divided by its sum; works on a vector or a batch of rows."""
    x_norm = np.asarray(x_norm, dtype=float)
    aug = np.concatenate([x_norm, np.full(x_norm.shape[:-1] + (1,), AUGMENT)], axis=-1)
    return aug / aug.sum(axis=-1, keepdims=True)


def prob_to_norm(p):
    p = np.asarray(p, dtype=float)
    last = p[..., -1:]
    if np.any(last <= 0):
        raise InvalidArgument("cannot invert a probability vector whose last entry is 0")
    return AUGMENT * p[..., :-1] / last


def feature_to_prob(model, x):
    """Map PCA features to a four-point probability vector.

    Features outside the training range are clipped to it first, so the map is
    a bijection only on the box ``[feature_min, feature_max]``.
    """
    return norm_to_prob(normalize(model, x))


def prob_to_feature(model, p):
    return denormalize(model, prob_to_norm(p))


def binarize(image, threshold=DEFAULT_THRESHOLD):
    if not 0 < threshold < 1:
        raise InvalidArgument("threshold must lie in (0, 1)")
    return (np.asarray(image, dtype=float) >= threshold).astype(np.uint8)


def prob_to_image(model, p, threshold=DEFAULT_THRESHOLD):
    """Binarised 28x28 image reconstructed from a probability vector."""
    return binarize(np.clip(pca_inverse(model, prob_to_feature(model, p)), 0, 1), threshold).reshape(
        IMAGE_SIDE, IMAGE_SIDE)


# -- PGM ------------------------------------------------------------------

def encode_pgm(image, plain=True):
    """Encode an array of 0/1 bits (or 0..255 grey levels) as a PGM file."""
    img = np.asarray(image)
    if img.ndim != 2:
        raise InvalidArgument("PGM image must be 2-D")
    maxval = 1 if img.max(initial=0) <= 1 else 255
    img = img.astype(np.uint8)
    h, w = img.shape
    header = f"{'P2' if plain else 'P5'}\n{w} {h}\n{maxval}\n"
    if plain:
        rows = "\n".join(" ".join(str(v) for v in row) for row in img)
        return (header + rows + "\n").encode("ascii")
    return header.encode("ascii") + img.tobytes()


def write_pgm(path, image, plain=True):
    Path(path).write_bytes(encode_pgm(image, plain))


def parse_pgm(data):
    """Decode a P2 or P5 PGM file; returns ``(array, maxval)``."""
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise InvalidArgument("not a PGM file")
    # header tokens: magic, width, height, maxval (comments are not emitted by write_pgm)
    tokens, pos = [], 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise InvalidArgument("truncated PGM header")
        tokens.append(int(data[start:pos]))
    w, h, maxval = tokens
    pos += 1
    if magic == b"P5":
        body = np.frombuffer(data[pos:], dtype=np.uint8)
    else:
        body = np.array(data[pos:].split(), dtype=int)
    if body.size != w * h:
        raise InvalidArgument(f"PGM body has {body.size} values, expected {w * h}")
    if body.max(initial=0) > maxval:
        raise InvalidArgument("PGM value exceeds maxval")
    return body.reshape(h, w), maxval


def image_grid(images, columns, pad=1):
    """Tile equally sized 2-D images into one array separated by ``pad`` zero pixels."""
    images = [np.asarray(im) for im in images]
    h, w = images[0].shape
    rows = -(-len(images) // columns)
    grid = np.zeros((rows * (h + pad) - pad, columns * (w + pad) - pad), dtype=images[0].dtype)
    for n, im in enumerate(images):
        r, c = divmod(n, columns)
        grid[r * (h + pad):r * (h + pad) + h, c * (w + pad):c * (w + pad) + w] = im
    return grid
