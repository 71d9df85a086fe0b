"""Pixel-wise evaluation: recall, precision, F1, IoU, and pixel accuracy.

Counts come from a full 8x8 label histogram so that merged classes (for
example door+window scored as one "openings" row) are exactly equivalent to
relabeling both masks before scoring.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyClassSet, PlanvecError
from .mask_io import PALETTE, STRUCTURAL_CLASSES, Class, class_by_name, validate_mask

_CLASS_NAMES = {info.id: info.name for info in PALETTE}


@dataclass(frozen=True)
class ClassCounts:
    tp: int
    fp: int
    fn: int
    tn: int


@dataclass(frozen=True)
class ConfusionMatrix:
    """Histogram of (truth, prediction) label pairs plus the evaluated subset."""

    classes: tuple[Class, ...]
    hist: np.ndarray  # (8, 8) int64, rows = truth, cols = prediction

    @property
    def total(self) -> int:
        return int(self.hist.sum())

    def counts(self, members: Class | tuple[Class, ...]) -> ClassCounts:
        ids = [int(members)] if isinstance(members, (int, Class)) else [int(m) for m in members]
        sel = np.zeros(8, dtype=bool)
        sel[ids] = True
        tp = int(self.hist[np.ix_(sel, sel)].sum())
        fn = int(self.hist[sel, :].sum()) - tp
        fp = int(self.hist[:, sel].sum()) - tp
        tn = self.total - tp - fn - fp
        return ClassCounts(tp, fp, fn, tn)


@dataclass(frozen=True)
class MetricRow:
    name: str
    recall: float
    precision: float
    f1: float
    iou: float
    accuracy: float


@dataclass(frozen=True)
class MetricReport:
    rows: tuple[MetricRow, ...]
    mean: MetricRow


def confusion(
    pred: np.ndarray,
    truth: np.ndarray,
    classes: tuple[Class, ...] = STRUCTURAL_CLASSES,
) -> ConfusionMatrix:
    """One histogram pass over both masks."""
    pred = validate_mask(pred)
    truth = validate_mask(truth)
    if pred.shape != truth.shape:
        raise DimensionMismatch(f"prediction shape {pred.shape} != truth shape {truth.shape}")
    classes = tuple(Class(c) for c in classes)
    if not classes:
        raise EmptyClassSet("evaluation requires at least one class")
    hist = np.bincount(
        truth.ravel().astype(np.int64) * 8 + pred.ravel().astype(np.int64), minlength=64
    ).reshape(8, 8)
    return ConfusionMatrix(classes, hist)


def _row(name: str, c: ClassCounts, total: int) -> MetricRow:
    absent_both = c.tp + c.fn == 0 and c.tp + c.fp == 0
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn else (1.0 if absent_both else 0.0)
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp else (1.0 if absent_both else 0.0)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else (
        1.0 if absent_both else 0.0
    )
    denom = c.tp + c.fp + c.fn
    iou = c.tp / denom if denom else 1.0
    accuracy = (c.tp + c.tn) / total if total else 1.0
    return MetricRow(name, recall, precision, f1, iou, accuracy)


def report(
    cm: ConfusionMatrix,
    merges: list[tuple[str, tuple[Class, ...]]] | None = None,
) -> MetricReport:
    """Per-class rows plus an unweighted mean.

    ``merges`` entries replace their member classes by a single row scored
    on the union. Background never contributes to the mean.
    """
    merges = merges or []
    merged_members: set[Class] = set()
    for _, members in merges:
        merged_members.update(Class(m) for m in members)

    rows: list[MetricRow] = []
    for cls in cm.classes:
        if cls in merged_members:
            continue
        rows.append(_row(_CLASS_NAMES[cls], cm.counts(cls), cm.total))
    for name, members in merges:
        rows.append(_row(name, cm.counts(tuple(members)), cm.total))

    scored = [r for r in rows if r.name.lower() != "background"]
    if scored:
        mean = MetricRow(
            "Mean",
            float(np.mean([r.recall for r in scored])),
            float(np.mean([r.precision for r in scored])),
            float(np.mean([r.f1 for r in scored])),
            float(np.mean([r.iou for r in scored])),
            float(np.mean([r.accuracy for r in scored])),
        )
    else:
        mean = MetricRow("Mean", 1.0, 1.0, 1.0, 1.0, 1.0)
    return MetricReport(tuple(rows), mean)


def parse_merge_spec(spec: str) -> tuple[str, tuple[Class, ...]]:
    """Parse ``door+window=openings`` into ("openings", (DOOR, WINDOW))."""
    left, sep, name = spec.partition("=")
    if not sep or not name.strip():
        raise PlanvecError(f"merge spec must look like a+b=name, got {spec!r}")
    members = tuple(class_by_name(tok) for tok in left.split("+"))
    if not members:
        raise PlanvecError(f"merge spec has no classes: {spec!r}")
    return name.strip(), members


def format_table(rep: MetricReport) -> str:
    """Fixed-width text table with one row per class and a mean row."""
    header = ["Class", "Recall", "Precision", "F1", "IoU", "Accuracy"]
    body = [
        [r.name] + [f"{v:.4f}" for v in (r.recall, r.precision, r.f1, r.iou, r.accuracy)]
        for r in list(rep.rows) + [rep.mean]
    ]
    widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]
    def fmt(row):
        return "  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
    lines = [fmt(header), fmt(["-" * w for w in widths])]
    lines.extend(fmt(row) for row in body)
    return "\n".join(lines) + "\n"


def to_keyvalues(rep: MetricReport) -> str:
    """Machine-readable ``row.metric=value`` lines."""
    lines = []
    for r in list(rep.rows) + [rep.mean]:
        key = r.name.lower().replace(" ", "_")
        for metric in ("recall", "precision", "f1", "iou", "accuracy"):
            lines.append(f"{key}.{metric}={getattr(r, metric):.6f}")
    return "\n".join(lines) + "\n"
