"""Pixel-level precision / recall / F1 / IoU with road as the positive class."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .raster import check_same_shape, read_binary_mask


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be nonnegative")

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp,
                               self.fn + other.fn, self.tn + other.tn)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class MetricReport:
    precision: float
    recall: float
    f1: float
    iou: float


def _ratio(num: float, den: float) -> float:
    # 0/0 is reported as 0
    return num / den if den > 0 else 0.0


def confusion(pred: np.ndarray, gt: np.ndarray) -> ConfusionCounts:
    pred = np.asarray(pred, dtype=bool)
    gt = np.asarray(gt, dtype=bool)
    check_same_shape(pred, gt, names=("prediction", "ground truth"))
    tp = int(np.count_nonzero(pred & gt))
    fp = int(np.count_nonzero(pred & ~gt))
    fn = int(np.count_nonzero(~pred & gt))
    return ConfusionCounts(tp, fp, fn, pred.size - tp - fp - fn)


def metrics(c: ConfusionCounts) -> MetricReport:
    return MetricReport(
        precision=_ratio(c.tp, c.tp + c.fp),
        recall=_ratio(c.tp, c.tp + c.fn),
        f1=_ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn),
        iou=_ratio(c.tp, c.tp + c.fp + c.fn),
    )


@dataclass
class DatasetEvaluation:
    rows: list[tuple[str, ConfusionCounts, MetricReport]]
    total: ConfusionCounts
    report: MetricReport
    unmatched: list[str]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            self._write(fh)

    def to_csv(self) -> str:
        buf = io.StringIO()
        self._write(buf)
        return buf.getvalue()

    def _write(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["stem", "tp", "fp", "fn", "tn", "precision", "recall", "f1", "iou"])
        for stem, c, m in self.rows + [("TOTAL", self.total, self.report)]:
            writer.writerow([stem, c.tp, c.fp, c.fn, c.tn,
                             f"{m.precision:.4f}", f"{m.recall:.4f}", f"{m.f1:.4f}", f"{m.iou:.4f}"])


def evaluate_dataset(pred_dir, gt_dir) -> DatasetEvaluation:
    """Per-tile metrics plus the micro-average over all matched stems."""
    preds = {p.stem: p for p in Path(pred_dir).glob("*.png")}
    gts = {p.stem: p for p in Path(gt_dir).glob("*.png")}
    rows = []
    total = ConfusionCounts()
    for stem in sorted(preds.keys() & gts.keys()):
        c = confusion(read_binary_mask(preds[stem]), read_binary_mask(gts[stem]))
        rows.append((stem, c, metrics(c)))
        total = total + c
    return DatasetEvaluation(rows, total, metrics(total), sorted(preds.keys() ^ gts.keys()))
