"""Domain model for recorded task executions.

A task execution is an ordered, contiguous partition of a frame range into
named action segments, plus sparse per-object bounding-box tracks, an
optional failure annotation, and a task-level outcome label. Frame indices
are the canonical time axis; `fps` is metadata kept for converting external
timestamp annotations.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field

from .errors import ValidationError

# Canonical ARMBench-style action sequence and the interaction-heavy subset.
ARMBENCH_ACTIONS = ("Pick", "MoveDestination", "Wait", "Place", "MoveSource")
ACTION_SUBSET = ("MoveDestination", "Wait", "Place")

# Object roles that bounding-box tracks may carry.
ROLE_END_EFFECTOR = "end_effector"
ROLE_SOURCE = "source_container"
ROLE_DESTINATION = "destination_container"

# Outcome labels (ARMBench set; other datasets use their own closed sets).
NOMINAL = "nominal"
OPEN = "open"
DECONSTRUCTION = "deconstruction"
ARMBENCH_CLASSES = (NOMINAL, OPEN, DECONSTRUCTION)

# Default frame geometry when a manifest record carries none.
DEFAULT_WIDTH = 1280
DEFAULT_HEIGHT = 560


@dataclass(frozen=True)
class Box:
    """Axis-aligned pixel rectangle, x1 < x2 and y1 < y2."""

    x1: float
    y1: float
    x2: float
    y2: float


@dataclass(frozen=True)
class ActionSegment:
    """One named action over the half-open frame range [start, end)."""

    name: str
    start: int
    end: int

    @property
    def length(self) -> int:
        return self.end - self.start

    def contains(self, frame: int) -> bool:
        return self.start <= frame < self.end


@dataclass(frozen=True)
class FailureAnnotation:
    """When a failure becomes visible.

    `t_first_visible` is the frame at which the failure class itself is
    first visible. Deconstruction samples where the object opens first
    carry `t_open` (< t_first_visible) marking the start of the open phase.
    """

    cls: str
    t_first_visible: int
    t_open: int | None = None


class BoundingBoxTrack:
    """Sparse frame -> Box map with nearest-frame lookup.

    Detector output need not cover every frame; `box_at` resolves any
    query frame to the nearest annotated one (ties go to the earlier
    frame).
    """

    def __init__(self, boxes: dict[int, Box]):
        self._boxes = dict(boxes)
        self._frames = sorted(self._boxes)

    def __eq__(self, other) -> bool:
        return isinstance(other, BoundingBoxTrack) and self._boxes == other._boxes

    def __repr__(self) -> str:
        return f"BoundingBoxTrack({len(self._frames)} boxes)"

    @property
    def frames(self) -> list[int]:
        return list(self._frames)

    def __len__(self) -> int:
        return len(self._frames)

    def items(self):
        return ((f, self._boxes[f]) for f in self._frames)

    def box_at(self, frame: int) -> Box:
        if not self._frames:
            raise ValueError("no boxes in track")
        pos = bisect_right(self._frames, frame)
        if pos == 0:
            return self._boxes[self._frames[0]]
        if pos == len(self._frames):
            return self._boxes[self._frames[-1]]
        before = self._frames[pos - 1]
        after = self._frames[pos]
        # Tie (equidistant) resolves to the earlier annotated frame.
        if frame - before <= after - frame:
            return self._boxes[before]
        return self._boxes[after]


def box_at(track: BoundingBoxTrack, frame: int) -> Box:
    """Box at `frame`, or at the nearest annotated frame (ties -> earlier)."""
    return track.box_at(frame)


@dataclass(frozen=True)
class TaskTimeline:
    """One recorded task execution.

    Segments must tile [0, frame_count) contiguously with unique names;
    `validate_timeline` checks this and every other invariant. Instances
    are immutable and safe to share across threads.
    """

    sample_id: str
    frame_count: int
    fps: float
    segments: tuple[ActionSegment, ...]
    tracks: dict[str, BoundingBoxTrack] = field(default_factory=dict)
    failure: FailureAnnotation | None = None
    label: str = NOMINAL
    width: int = DEFAULT_WIDTH
    height: int = DEFAULT_HEIGHT

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    def action_names(self) -> list[str]:
        return [seg.name for seg in self.segments]

    def segment(self, action: str) -> ActionSegment:
        for seg in self.segments:
            if seg.name == action:
                return seg
        raise ValidationError(f"action {action!r} not in timeline {self.sample_id!r}")

    def segment_at(self, frame: int) -> ActionSegment:
        for seg in self.segments:
            if seg.contains(frame):
                return seg
        raise ValidationError(
            f"frame {frame} outside [0, {self.frame_count}) of {self.sample_id!r}"
        )

    def track(self, role: str) -> BoundingBoxTrack:
        if role not in self.tracks:
            raise ValidationError(f"missing track {role!r} in timeline {self.sample_id!r}")
        return self.tracks[role]


def validate_timeline(t: TaskTimeline) -> list[str]:
    """Check every timeline invariant; violations are data, not exceptions.

    Returns an empty list iff the timeline is well-formed. Each violation
    names the offending field and rule.
    """
    bad = []
    if t.frame_count < 1:
        bad.append(f"frame_count must be >= 1, got {t.frame_count}")
    if not t.fps > 0:
        bad.append(f"fps must be positive, got {t.fps}")
    if t.width < 1 or t.height < 1:
        bad.append(f"frame geometry must be positive, got {t.width}x{t.height}")

    if not t.segments:
        bad.append("segments must be non-empty")
    else:
        for i, seg in enumerate(t.segments):
            if seg.start >= seg.end:
                bad.append(
                    f"segment {seg.name!r} needs start < end, got [{seg.start}, {seg.end})"
                )
        if t.segments[0].start != 0:
            bad.append(f"segment[0] must start at 0, got {t.segments[0].start}")
        if t.segments[-1].end != t.frame_count:
            bad.append(
                f"segment[last] must end at frame_count {t.frame_count}, "
                f"got {t.segments[-1].end}"
            )
        for i in range(len(t.segments) - 1):
            if t.segments[i].end != t.segments[i + 1].start:
                bad.append(f"segments not contiguous at index {i}/{i + 1}")
        names = [seg.name for seg in t.segments]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            bad.append(f"segment names not unique: {dupes}")

    for role, track in t.tracks.items():
        for f, box in track.items():
            if not (box.x1 < box.x2 and box.y1 < box.y2):
                bad.append(f"track {role!r} frame {f}: box corners not ordered")
            elif not (0 <= box.x1 and box.x2 <= t.width and 0 <= box.y1 and box.y2 <= t.height):
                bad.append(f"track {role!r} frame {f}: box outside frame bounds")

    ann = t.failure
    if ann is not None:
        if ann.cls not in (OPEN, DECONSTRUCTION):
            bad.append(f"failure.cls must be open or deconstruction, got {ann.cls!r}")
        if not (0 <= ann.t_first_visible < t.frame_count):
            bad.append(
                f"t_first_visible {ann.t_first_visible} outside [0, {t.frame_count})"
            )
        if ann.t_open is not None:
            if ann.cls != DECONSTRUCTION:
                bad.append("t_open only valid for deconstruction failures")
            if ann.t_open < 0:
                bad.append(f"t_open must be >= 0, got {ann.t_open}")
            if ann.t_open >= ann.t_first_visible:
                bad.append("t_open must precede t_first_visible")
    return bad
