"""Confusion matrices, precision/recall/MCC, and per-system evaluation reports.

Precision (and recall) are reported as absent, rendered "--", when their
denominator is zero; MCC falls back to 0 when its denominator vanishes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def n_pos(self) -> int:
        return self.tp + self.fn

    @property
    def n_neg(self) -> int:
        return self.fp + self.tn

    @property
    def m_pos(self) -> int:
        return self.tp + self.fp

    @property
    def m_neg(self) -> int:
        return self.fn + self.tn

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            fn=self.fn + other.fn,
            tn=self.tn + other.tn,
        )

    @classmethod
    def from_predictions(cls, y_true, y_pred) -> "ConfusionMatrix":
        if len(y_true) != len(y_pred):
            raise ValueError("prediction/label length mismatch")
        tp = fp = fn = tn = 0
        for truth, pred in zip(y_true, y_pred):
            if pred and truth:
                tp += 1
            elif pred and not truth:
                fp += 1
            elif not pred and truth:
                fn += 1
            else:
                tn += 1
        return cls(tp=tp, fp=fp, fn=fn, tn=tn)


@dataclass(frozen=True)
class Scores:
    precision: float | None  # None mirrors the "--" cells of degenerate folds
    recall: float | None
    mcc: float


def scores(matrix: ConfusionMatrix) -> Scores:
    """precision = TP/(TP+FP), recall = TP/(TP+FN),
    mcc = (TP*n - n_pos*m_pos) / sqrt(n_pos*m_pos*n_neg*m_neg) with a 0 fallback."""
    if matrix.n == 0:
        raise ValueError("empty confusion matrix")
    precision = matrix.tp / matrix.m_pos if matrix.m_pos else None
    recall = matrix.tp / matrix.n_pos if matrix.n_pos else None
    denominator = math.sqrt(matrix.n_pos * matrix.m_pos * matrix.n_neg * matrix.m_neg)
    if denominator == 0:
        mcc = 0.0
    else:
        mcc = (matrix.tp * matrix.n - matrix.n_pos * matrix.m_pos) / denominator
    return Scores(precision=precision, recall=recall, mcc=mcc)


@dataclass(frozen=True)
class SystemResult:
    matrix: ConfusionMatrix
    scores: Scores


@dataclass
class EvalReport:
    """Per-system results plus the merged overall result (element-wise summed
    matrices, mirroring evaluation on one concatenated system)."""

    per_system: dict[str, SystemResult]

    @property
    def overall_matrix(self) -> ConfusionMatrix:
        total = ConfusionMatrix()
        for result in self.per_system.values():
            total = total + result.matrix
        return total

    @property
    def overall(self) -> SystemResult:
        matrix = self.overall_matrix
        return SystemResult(matrix=matrix, scores=scores(matrix))

    @classmethod
    def from_matrices(cls, matrices: dict[str, ConfusionMatrix]) -> "EvalReport":
        return cls(
            per_system={name: SystemResult(m, scores(m)) for name, m in matrices.items()}
        )


def format_metric(value: float | None) -> str:
    return "--" if value is None else f"{value:.4f}"


def report_table(report: EvalReport, delimiter: str = ",") -> str:
    """Delimited table: one row per system plus an overall row, columns
    precision, recall, mcc (absent values as "--")."""
    lines = [delimiter.join(("system", "precision", "recall", "mcc"))]
    for name in sorted(report.per_system):
        s = report.per_system[name].scores
        lines.append(
            delimiter.join((name, format_metric(s.precision), format_metric(s.recall), format_metric(s.mcc)))
        )
    s = report.overall.scores
    lines.append(
        delimiter.join(("overall", format_metric(s.precision), format_metric(s.recall), format_metric(s.mcc)))
    )
    return "\n".join(lines) + "\n"
