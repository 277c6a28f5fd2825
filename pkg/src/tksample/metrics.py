"""Confusion matrix and the evaluation metric suite.

Reports per-class recall and false positive rate plus a single F1 score,
macro-averaged over the failure classes (every class except the nominal
one) by default. Degenerate 0/0 ratios are defined as 0 and flagged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ValidationError


@dataclass
class EvalReport:
    classes: list[str]
    confusion: list[list[int]]
    recall: dict[str, float]
    fpr: dict[str, float]
    precision: dict[str, float]
    f1: float
    f1_scope: str
    total: int
    degenerate: list[str] = field(default_factory=list)


def confusion(true: list[str], pred: list[str], classes: list[str]) -> list[list[int]]:
    """K x K counts, rows = true class, columns = predicted class."""
    if len(true) != len(pred):
        raise ValidationError(
            f"label length mismatch: {len(true)} true vs {len(pred)} predicted"
        )
    index = {c: i for i, c in enumerate(classes)}
    counts = [[0] * len(classes) for _ in classes]
    for t, p in zip(true, pred):
        if t not in index:
            raise ValidationError(f"unknown true label {t!r}")
        if p not in index:
            raise ValidationError(f"unknown predicted label {p!r}")
        counts[index[t]][index[p]] += 1
    return counts


def report(
    conf: list[list[int]],
    classes: list[str],
    nominal_class: str | None = None,
    f1_scope: str = "failure",
) -> EvalReport:
    """Metric suite from a confusion matrix.

    recall_c = TP/(TP+FN); FPR_c = FP / (samples whose true class != c);
    per-class F1 = 2PR/(P+R). The report's F1 is the macro average over the
    failure classes, or over all classes with f1_scope="all".
    """
    k = len(classes)
    if len(conf) != k or any(len(row) != k for row in conf):
        raise ValidationError(f"confusion matrix must be {k}x{k}")
    if f1_scope not in ("failure", "all"):
        raise ValidationError(f"f1_scope must be failure or all, got {f1_scope!r}")
    if nominal_class is None:
        nominal_class = classes[0]
    if nominal_class not in classes:
        raise ValidationError(f"nominal class {nominal_class!r} not in classes")

    total = sum(sum(row) for row in conf)
    degenerate = []

    def ratio(num: int, den: int, name: str) -> float:
        if den == 0:
            degenerate.append(name)
            return 0.0
        return num / den

    recall, fpr, precision, f1_per_class = {}, {}, {}, {}
    for i, c in enumerate(classes):
        tp = conf[i][i]
        fn = sum(conf[i]) - tp
        fp = sum(conf[r][i] for r in range(k)) - tp
        true_not_c = total - sum(conf[i])
        recall[c] = ratio(tp, tp + fn, f"recall.{c}")
        fpr[c] = ratio(fp, true_not_c, f"fpr.{c}")
        precision[c] = ratio(tp, tp + fp, f"precision.{c}")
        pr = precision[c] + recall[c]
        f1_per_class[c] = 2 * precision[c] * recall[c] / pr if pr > 0 else 0.0

    scored = [c for c in classes if f1_scope == "all" or c != nominal_class]
    if not scored:
        raise ValidationError("no classes left in F1 scope")
    f1 = sum(f1_per_class[c] for c in scored) / len(scored)
    return EvalReport(
        classes=list(classes),
        confusion=[list(row) for row in conf],
        recall=recall,
        fpr=fpr,
        precision=precision,
        f1=f1,
        f1_scope=f1_scope,
        total=total,
        degenerate=degenerate,
    )


def evaluate(
    true: list[str],
    pred: list[str],
    classes: list[str],
    f1_scope: str = "failure",
) -> EvalReport:
    """Confusion + report in one step."""
    return report(confusion(true, pred, classes), classes, f1_scope=f1_scope)
