"""Selection quality, classification accuracy, confusion structure,
and knowledge absorption."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import CleanScores, LabeledDataset
from .model import SoftmaxModel, predict_proba


@dataclass(frozen=True)
class ClassSelection:
    selected_count: int
    clean_count: int
    true_positive: int

    @property
    def precision(self) -> float:
        return self.true_positive / self.selected_count if self.selected_count else 0.0

    @property
    def recall(self) -> float:
        return self.true_positive / self.clean_count if self.clean_count else 0.0


@dataclass(frozen=True)
class SelectionReport:
    precision: float
    recall: float
    selected_count: int
    clean_count: int
    true_positive: int
    per_class: dict[int, ClassSelection]
    flags: tuple[str, ...] = field(default=(), compare=False)

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "selected_count": self.selected_count,
            "clean_count": self.clean_count,
            "true_positive": self.true_positive,
            "per_class": {
                str(c): {
                    "selected_count": v.selected_count,
                    "clean_count": v.clean_count,
                    "precision": v.precision,
                    "recall": v.recall,
                }
                for c, v in sorted(self.per_class.items())
            },
            "flags": list(self.flags),
        }


def selection_metrics(scores: CleanScores, ds: LabeledDataset) -> SelectionReport:
    """Precision/recall of the selected set against the ground-truth clean set.

    Clean means noisy_label == true_label. An empty selection reports
    precision 0 with a flag rather than NaN. Per-class entries are keyed by
    the noisy label, since that is the unit detectors select within.
    """
    if ds.true_labels is None:
        raise ValueError("selection metrics need a dataset with true labels")
    if len(scores) != len(ds):
        raise ValueError("scores and dataset length differ")
    clean = ds.noisy_labels == ds.true_labels
    sel = scores.selected
    tp = int(np.sum(sel & clean))
    n_sel, n_clean = int(sel.sum()), int(clean.sum())
    flags: list[str] = []
    if n_sel == 0:
        flags.append("empty selection; precision reported as 0")
    per_class = {}
    for c in range(ds.num_classes):
        rows = ds.noisy_labels == c
        per_class[c] = ClassSelection(
            int(np.sum(sel & rows)),
            int(np.sum(clean & rows)),
            int(np.sum(sel & clean & rows)),
        )
    return SelectionReport(
        precision=tp / n_sel if n_sel else 0.0,
        recall=tp / n_clean if n_clean else 0.0,
        selected_count=n_sel,
        clean_count=n_clean,
        true_positive=tp,
        per_class=per_class,
        flags=tuple(flags),
    )


@dataclass(frozen=True)
class ConfusionReport:
    counts: np.ndarray    # counts[i, j] = true-i samples predicted j
    percent: np.ndarray   # rows scaled to sum to 100 (all-zero rows stay zero)
    flags: tuple[str, ...] = ()


def confusion_matrix(model: SoftmaxModel, ds_test: LabeledDataset) -> ConfusionReport:
    if ds_test.true_labels is None:
        raise ValueError("confusion matrix needs a dataset with true labels")
    preds = np.argmax(predict_proba(model, ds_test.features), axis=1)
    k = ds_test.num_classes
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (ds_test.true_labels, preds), 1)
    totals = counts.sum(axis=1, keepdims=True)
    flags = tuple(
        f"confusion: true class {i} has no samples; percentages reported as zeros"
        for i in np.flatnonzero(totals.ravel() == 0)
    )
    percent = np.divide(
        counts * 100.0, totals, out=np.zeros((k, k)), where=totals > 0
    )
    return ConfusionReport(counts, percent, flags)


def accuracy(model: SoftmaxModel, ds_test: LabeledDataset) -> float:
    """Top-1 accuracy against true labels."""
    if ds_test.true_labels is None:
        raise ValueError("accuracy needs a dataset with true labels")
    preds = np.argmax(predict_proba(model, ds_test.features), axis=1)
    return float(np.mean(preds == ds_test.true_labels))


@dataclass(frozen=True)
class AbsorptionReport:
    """Accuracy gain of a knowledge-integrated run over its base run."""

    acc_base: float
    acc_plus_k: float
    absorption: float
    metadata: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {
            "acc_base": self.acc_base,
            "acc_plus_k": self.acc_plus_k,
            "absorption": self.absorption,
            "metadata": self.metadata,
        }


def absorption(acc_base: float, acc_plus_k: float, metadata: dict | None = None) -> AbsorptionReport:
    for name, v in (("acc_base", acc_base), ("acc_plus_k", acc_plus_k)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1]")
    return AbsorptionReport(acc_base, acc_plus_k, acc_plus_k - acc_base, metadata or {})


def mean_std(values) -> tuple[float, float]:
    """Mean and sample (n-1) standard deviation, the paper-style +/- convention."""
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size == 0:
        raise ValueError("no values to aggregate")
    if arr.size == 1:
        return float(arr[0]), 0.0
    return float(arr.mean()), float(arr.std(ddof=1))


def render_confusion_percent(percent: np.ndarray) -> str:
    """Aligned-column text rendering of the percentage confusion matrix."""
    k = percent.shape[0]
    header = "true\\pred " + " ".join(f"{j:>7d}" for j in range(k))
    lines = [header]
    for i in range(k):
        row = " ".join(f"{percent[i, j]:7.2f}" for j in range(k))
        lines.append(f"{i:>9d} {row}")
    return "\n".join(lines)
