"""Classification metrics: accuracy, unweighted average recall, macro F1.

Per-class precision, recall and F1 use the 0/0 = 0 convention for classes
that were never predicted or never occur, and the unweighted averages run
over every class in the declared class set, not just the ones present in
the records.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np


@dataclass(frozen=True)
class PredictionRecord:
    """One evaluated sample: what it was and what the model said."""

    sample_id: str
    true_class: str
    predicted_class: str


@dataclass(frozen=True)
class PerClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricsReport:
    """Headline metrics plus the per-class breakdown they were averaged from.

    Aggregated reports (means across splits) carry an empty per-class map.
    """

    acc: float
    uar: float
    macro_f1: float
    per_class: Mapping[str, PerClassMetrics] = field(default_factory=dict)

    def __post_init__(self):
        for name, value in (("acc", self.acc), ("uar", self.uar), ("macro_f1", self.macro_f1)):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        object.__setattr__(self, "per_class", MappingProxyType(dict(self.per_class)))


def compute_metrics(
    records: Sequence[PredictionRecord], classes: Iterable[str]
) -> MetricsReport:
    """Accuracy plus unweighted per-class recall/F1 averages over ``classes``.

    Every record's true and predicted class must belong to the class set;
    classes without any records still enter the averages (with recall,
    precision and F1 all 0 by the 0/0 convention).
    """
    records = list(records)
    if not records:
        raise ValueError("no prediction records given")
    ordered = sorted(set(classes))
    if not ordered:
        raise ValueError("class set is empty")
    column = {species: i for i, species in enumerate(ordered)}
    true_idx = np.empty(len(records), dtype=np.intp)
    pred_idx = np.empty(len(records), dtype=np.intp)
    for row, record in enumerate(records):
        if record.true_class not in column:
            raise ValueError(
                f"record {record.sample_id!r}: true class {record.true_class!r} "
                f"is not in the class set"
            )
        if record.predicted_class not in column:
            raise ValueError(
                f"record {record.sample_id!r}: predicted class "
                f"{record.predicted_class!r} is not in the class set"
            )
        true_idx[row] = column[record.true_class]
        pred_idx[row] = column[record.predicted_class]

    n_classes = len(ordered)
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(confusion, (true_idx, pred_idx), 1)

    true_pos = np.diag(confusion).astype(np.float64)
    support = confusion.sum(axis=1)
    predicted = confusion.sum(axis=0)
    recall = np.divide(
        true_pos, support, out=np.zeros(n_classes), where=support > 0
    )
    precision = np.divide(
        true_pos, predicted, out=np.zeros(n_classes), where=predicted > 0
    )
    pr_sum = precision + recall
    f1 = np.divide(
        2.0 * precision * recall, pr_sum, out=np.zeros(n_classes), where=pr_sum > 0
    )

    per_class = {
        species: PerClassMetrics(
            precision=float(precision[i]),
            recall=float(recall[i]),
            f1=float(f1[i]),
            support=int(support[i]),
        )
        for i, species in enumerate(ordered)
    }
    return MetricsReport(
        acc=float(true_pos.sum() / len(records)),
        uar=float(recall.mean()),
        macro_f1=float(f1.mean()),
        per_class=per_class,
    )


def aggregate_splits(reports: Sequence[MetricsReport]) -> MetricsReport:
    """Arithmetic mean of acc/uar/macro-F1 across splits (per-class dropped)."""
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to aggregate")
    return MetricsReport(
        acc=float(np.mean([r.acc for r in reports])),
        uar=float(np.mean([r.uar for r in reports])),
        macro_f1=float(np.mean([r.macro_f1 for r in reports])),
        per_class={},
    )
