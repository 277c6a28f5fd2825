"""Action-conditioned crop rectangles from object tracks.

Each action pairs the end-effector with the container it interacts with:
Pick and MoveDestination happen at the source container, Wait, Place and
MoveSource at the destination. The crop is the horizontal union of the two
boxes over the action's frames, at full frame height.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import ValidationError
from .sampling import SamplingPlan
from .timeline import ROLE_DESTINATION, ROLE_END_EFFECTOR, ROLE_SOURCE, TaskTimeline

# Which container the end-effector is paired with, per action.
CONTAINER_FOR_ACTION = {
    "Pick": ROLE_SOURCE,
    "MoveDestination": ROLE_SOURCE,
    "Wait": ROLE_DESTINATION,
    "Place": ROLE_DESTINATION,
    "MoveSource": ROLE_DESTINATION,
}


@dataclass(frozen=True)
class CropRect:
    x1: int
    y1: int
    x2: int
    y2: int

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.x1, self.y1, self.x2, self.y2)


def _check_rect(rect: CropRect, width: int | None = None, height: int | None = None):
    if rect.x1 >= rect.x2 or rect.y1 >= rect.y2:
        raise ValidationError(f"degenerate crop rect {rect.as_tuple()}")
    if rect.x1 < 0 or rect.y1 < 0:
        raise ValidationError(f"crop rect {rect.as_tuple()} has negative corner")
    if width is not None and rect.x2 > width:
        raise ValidationError(f"crop rect {rect.as_tuple()} exceeds width {width}")
    if height is not None and rect.y2 > height:
        raise ValidationError(f"crop rect {rect.as_tuple()} exceeds height {height}")


def full_frame(t: TaskTimeline) -> CropRect:
    return CropRect(0, 0, t.width, t.height)


def action_roi(t: TaskTimeline, action: str, frames: list[int]) -> CropRect:
    """Horizontal union of container + end-effector boxes, full frame height.

    The union runs over the given frames of the action; the x-range is
    clamped to the frame bounds.
    """
    if action not in CONTAINER_FOR_ACTION:
        raise ValidationError(f"no crop pairing rule for action {action!r}")
    if not frames:
        raise ValidationError(f"no frames supplied for action {action!r}")
    container = t.track(CONTAINER_FOR_ACTION[action])
    effector = t.track(ROLE_END_EFFECTOR)

    x_lo = math.inf
    x_hi = -math.inf
    for f in frames:
        for box in (container.box_at(f), effector.box_at(f)):
            x_lo = min(x_lo, box.x1)
            x_hi = max(x_hi, box.x2)
    x1 = max(0, int(math.floor(x_lo)))
    x2 = min(t.width, int(math.ceil(x_hi)))
    rect = CropRect(x1, 0, x2, t.height)
    _check_rect(rect, t.width, t.height)
    return rect


def fixed_crop(region: CropRect) -> CropRect:
    """Baseline pass-through; the region is a dataset-level constant."""
    _check_rect(region)
    return region


def attach_crops(
    plan: SamplingPlan,
    t: TaskTimeline,
    mode: str = "none",
    region: CropRect | None = None,
    roi_frames: str = "all",
) -> SamplingPlan:
    """Return a copy of the plan with a crop rectangle on every entry.

    roi: per-action union crop, computed over all frames of each action
    (roi_frames="sampled" restricts the union to the planned frames for
    speed). fixed: the given region everywhere. none: full frame.
    """
    if mode == "none":
        rect = full_frame(t)
        crops = {e.action: rect for e in plan.entries}
    elif mode == "fixed":
        if region is None:
            raise ValidationError("fixed crop mode needs a region")
        rect = fixed_crop(region)
        _check_rect(rect, t.width, t.height)
        crops = {e.action: rect for e in plan.entries}
    elif mode == "roi":
        if roi_frames not in ("all", "sampled"):
            raise ValidationError(f"roi_frames must be all or sampled, got {roi_frames!r}")
        crops = {}
        for action in {e.action for e in plan.entries}:
            if roi_frames == "all":
                seg = t.segment(action)
                frames = list(range(seg.start, seg.end))
            else:
                frames = [e.frame for e in plan.entries if e.action == action]
            crops[action] = action_roi(t, action, frames)
    else:
        raise ValidationError(f"unknown crop mode {mode!r}")

    entries = [replace(e, crop=crops[e.action].as_tuple()) for e in plan.entries]
    return replace(plan, entries=entries, crop_mode=mode)
