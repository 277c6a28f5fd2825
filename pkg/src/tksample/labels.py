"""Failure-state tracking and per-action label adjustment.

Cascading failures pass through stages: the object opens, deconstructs, and
remains open afterwards. Per-action labels reflect the failure state during
that action: the action containing the deconstruction is labeled
deconstruction, earlier actions where the object is merely open are labeled
open, and actions after a deconstruction fall back to open (the residual
open object is all that remains visible).
"""

from __future__ import annotations

from .errors import ValidationError
from .timeline import (
    ARMBENCH_CLASSES,
    DECONSTRUCTION,
    NOMINAL,
    OPEN,
    FailureAnnotation,
    TaskTimeline,
)


def failure_state_at(ann: FailureAnnotation | None, frame: int) -> str:
    """Visible failure state at one frame."""
    if ann is None:
        return NOMINAL
    if ann.cls == OPEN:
        return OPEN if frame >= ann.t_first_visible else NOMINAL
    if ann.t_open is not None and ann.t_open <= frame < ann.t_first_visible:
        return OPEN
    return DECONSTRUCTION if frame >= ann.t_first_visible else NOMINAL


def action_label(t: TaskTimeline, action: str) -> str:
    """Outcome label for one action of the task.

    Deconstruction if the deconstruction first becomes visible during the
    action; open if the object is open at the action's last frame or a
    deconstruction happened strictly before the action started; nominal
    otherwise.
    """
    seg = t.segment(action)
    ann = t.failure
    if ann is None:
        return NOMINAL
    if ann.cls == DECONSTRUCTION:
        if seg.start <= ann.t_first_visible < seg.end:
            return DECONSTRUCTION
        if ann.t_first_visible < seg.start:
            return OPEN
    return failure_state_at(ann, seg.end - 1)


def aggregate_outcomes(per_action: list[str], classes: tuple[str, ...] = ARMBENCH_CLASSES) -> str:
    """Task outcome from per-action outcomes: the most severe one wins.

    Severity follows class order (nominal first), so a task is open only
    when no action's outcome is deconstruction.
    """
    if not per_action:
        raise ValidationError("cannot aggregate an empty outcome list")
    for label in per_action:
        if label not in classes:
            raise ValidationError(f"unknown outcome label {label!r}")
    return max(per_action, key=classes.index)


def aggregate_logits(logit_rows: list[list[float]]) -> list[float]:
    """Element-wise mean of per-class score rows."""
    if not logit_rows:
        raise ValidationError("cannot aggregate an empty logit list")
    width = len(logit_rows[0])
    for row in logit_rows:
        if len(row) != width:
            raise ValidationError(
                f"ragged logit rows: expected {width} classes, got {len(row)}"
            )
    count = len(logit_rows)
    return [sum(row[i] for row in logit_rows) / count for i in range(width)]


def argmax_class(scores: list[float]) -> int:
    """Predicted class index; ties break toward the lowest index."""
    best = 0
    for i in range(1, len(scores)):
        if scores[i] > scores[best]:
            best = i
    return best
