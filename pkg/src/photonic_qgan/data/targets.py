"""Four-point target distributions built from truncated continuous samples."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .. import qcore
from ..errors import InvalidArgument

N_BINS = 4
INTERVAL = (0.0, 3.0)


@dataclass(frozen=True)
class DistributionSpec:
    """``params`` is ``(mu, sigma)``, or two such pairs (equal weights) for ``bimodal``.

    For ``lognormal`` the pair parametrises the underlying normal.
    """

    kind: str
    params: tuple
    interval: tuple = INTERVAL
    sample_count: int = 10_000

    def __post_init__(self):
        if self.kind not in ("normal", "lognormal", "bimodal"):
            raise InvalidArgument(f"unknown distribution kind {self.kind!r}")
        pairs = self.pairs()
        if any(s <= 0 for _, s in pairs):
            raise InvalidArgument("sigma must be positive")
        lo, hi = self.interval
        if not lo < hi:
            raise InvalidArgument("truncation interval is empty")
        if self.sample_count < 1:
            raise InvalidArgument("sample_count must be positive")

    def pairs(self):
        if self.kind == "bimodal":
            if len(self.params) != 2:
                raise InvalidArgument("bimodal needs two (mu, sigma) pairs")
            return [tuple(map(float, p)) for p in self.params]
        if len(self.params) != 2:
            raise InvalidArgument(f"{self.kind} needs (mu, sigma)")
        return [tuple(map(float, self.params))]

    def sample(self, rng):
        n = self.sample_count
        if self.kind == "normal":
            mu, s = self.params
            return rng.normal(mu, s, n)
        if self.kind == "lognormal":
            mu, s = self.params
            return rng.lognormal(mu, s, n)
        (m1, s1), (m2, s2) = self.pairs()
        pick = rng.integers(0, 2, n)
        return np.where(pick == 0, rng.normal(m1, s1, n), rng.normal(m2, s2, n))


PRESET_TARGETS = {
    "normal": DistributionSpec("normal", (1.5, 1.0)),
    "lognormal": DistributionSpec("lognormal", (0.5, 1.0)),
    "bimodal": DistributionSpec("bimodal", ((0.0, 0.5), (2.0, 0.3))),
}


def build_target(spec, seed=None):
    """Sample, discard points outside the interval, round to the nearest integer
    bin in {0, 1, 2, 3} and normalise the counts."""
    if isinstance(spec, str):
        spec = PRESET_TARGETS[spec]
    x = spec.sample(qcore.make_rng(seed))
    lo, hi = spec.interval
    x = x[(x >= lo) & (x <= hi)]
    if x.size == 0:
        raise InvalidArgument("every sample fell outside the truncation interval")
    bins = np.clip(np.rint(x - lo).astype(int), 0, N_BINS - 1)
    counts = np.bincount(bins, minlength=N_BINS).astype(float)
    return counts / counts.sum()


def target_csv(p):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bin", "probability"])
    for i, v in enumerate(p):
        w.writerow([i, repr(float(v))])
    return buf.getvalue()
