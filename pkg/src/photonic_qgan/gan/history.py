"""Per-epoch training records and their CSV/JSON serialisation."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

CSV_HEADER = ("epoch", "loss_g", "loss_d", "metric")


@dataclass
class EpochRecord:
    epoch: int
    loss_g: float
    loss_d: float
    metric: float
    params: dict = field(default_factory=dict)

    def is_finite(self):
        return all(math.isfinite(v) for v in (self.loss_g, self.loss_d, self.metric))


@dataclass
class TrainingHistory:
    """Epoch 0 holds the untrained state; epoch ``k`` the state after ``k`` epochs."""

    kind: str
    metric_name: str
    seed: int | None
    records: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def append(self, epoch, loss_g, loss_d, metric, **params):
        snap = {k: np.asarray(v, dtype=float).tolist() for k, v in params.items()}
        rec = EpochRecord(int(epoch), float(loss_g), float(loss_d), float(metric), snap)
        self.records.append(rec)
        return rec

    def __len__(self):
        return len(self.records)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    @property
    def metric(self):
        return self.column("metric")

    @property
    def final(self):
        return self.records[-1]

    def csv_text(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.records:
            w.writerow([r.epoch, repr(r.loss_g), repr(r.loss_d), repr(r.metric)])
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text())

    def to_dict(self):
        return {"kind": self.kind, "metric_name": self.metric_name, "seed": self.seed,
                "info": self.info, "records": [asdict(r) for r in self.records]}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1)


def read_history_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: (int(v) if k == "epoch" else float(v)) for k, v in row.items()} for row in rows]
