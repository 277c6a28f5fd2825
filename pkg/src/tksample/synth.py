"""Procedural synthetic task generator and pixel-statistic classifier oracle.

Generated samples mimic the pick-and-place task shape in miniature: five
contiguous actions, a bright end-effector square moving between two
container regions, and failure events painted as colored patches (amber for
an open object, red for a deconstruction, optionally with an amber phase
first). Event colors are linearly separable in RGB, so a trivial
pixel-fraction classifier is exact on full-frame-rate clips; any detection
loss measured downstream is attributable to frame selection alone.

Everything is deterministic from the spec seed; per-sample parameters come
from a generator seeded with seed XOR sample index, so generation can be
parallelized across samples.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .io import FrameSource, write_manifest, write_packed_frames
from .labels import argmax_class
from .timeline import (
    ACTION_SUBSET,
    ARMBENCH_ACTIONS,
    ARMBENCH_CLASSES,
    ActionSegment,
    BoundingBoxTrack,
    Box,
    DECONSTRUCTION,
    FailureAnnotation,
    NOMINAL,
    OPEN,
    ROLE_DESTINATION,
    ROLE_END_EFFECTOR,
    ROLE_SOURCE,
    TaskTimeline,
    validate_timeline,
)

COLOR_BACKGROUND = (96, 96, 96)
COLOR_CONTAINER = (40, 40, 140)
COLOR_EFFECTOR = (235, 235, 235)
COLOR_AMBER = (255, 190, 0)  # open object
COLOR_RED = (210, 40, 40)  # deconstructed object

# Any event patch covering at least this fraction of a frame saturates its
# class score; patches are >= 10x10 px so interiors survive bilinear resizing.
SATURATION_FRACTION = 0.002

DEFAULT_ACTION_LENGTHS = {
    "Pick": (15, 40),
    "MoveDestination": (20, 60),
    "Wait": (20, 60),
    "Place": (20, 60),
    "MoveSource": (15, 40),
}


@dataclass(frozen=True)
class SynthSpec:
    """Knobs for the generator; defaults mirror the real dataset in miniature."""

    seed: int = 0
    width: int = 128
    height: int = 56
    fps: float = 10.0
    action_lengths: dict[str, tuple[int, int]] = field(
        default_factory=lambda: dict(DEFAULT_ACTION_LENGTHS)
    )
    failure_probs: dict[str, float] = field(
        default_factory=lambda: {OPEN: 0.25, DECONSTRUCTION: 0.25}
    )
    open_phase_prob: float = 0.5
    event_duration: tuple[int, int] = (2, 12)
    # When set, event duration stays strictly below span/divisor, where span
    # is the length of the event-bearing action subset.
    event_span_divisor: int | None = None
    event_actions: dict[str, float] = field(
        default_factory=lambda: {a: 1.0 for a in ACTION_SUBSET}
    )

    def check(self):
        prob_sum = sum(self.failure_probs.values())
        if any(p < 0 for p in self.failure_probs.values()) or prob_sum > 1:
            raise ValidationError(f"failure probabilities invalid: {self.failure_probs}")
        if self.event_duration[0] < 1 or self.event_duration[0] > self.event_duration[1]:
            raise ValidationError(f"bad event duration range {self.event_duration}")
        if self.width < 64 or self.height < 48:
            raise ValidationError("frame geometry too small to place containers and patches")
        for name, (lo, hi) in self.action_lengths.items():
            if lo < 1 or lo > hi:
                raise ValidationError(f"bad length range for {name}: ({lo}, {hi})")
        for name in self.event_actions:
            if name not in self.action_lengths:
                raise ValidationError(f"event action {name!r} has no length range")


@dataclass(frozen=True)
class EventPaint:
    """Painted failure: phase time spans and the patch they fill."""

    rect: tuple[int, int, int, int]
    amber_span: tuple[int, int] | None
    red_span: tuple[int, int] | None

    def frames(self) -> range:
        spans = [s for s in (self.amber_span, self.red_span) if s is not None]
        return range(min(s[0] for s in spans), max(s[1] for s in spans))

    def color_at(self, frame: int) -> tuple[int, int, int] | None:
        if self.red_span and self.red_span[0] <= frame < self.red_span[1]:
            return COLOR_RED
        if self.amber_span and self.amber_span[0] <= frame < self.amber_span[1]:
            return COLOR_AMBER
        return None


@dataclass(frozen=True)
class Scene:
    """Everything needed to deterministically render one sample's frames."""

    width: int
    height: int
    frame_count: int
    source_box: Box
    dest_box: Box
    effector_track: BoundingBoxTrack
    event: EventPaint | None

    def event_frames(self) -> range:
        return self.event.frames() if self.event is not None else range(0)


@dataclass(frozen=True)
class SynthSample:
    timeline: TaskTimeline
    scene: Scene


def _fill(img: np.ndarray, box: Box, color: tuple[int, int, int]):
    img[int(box.y1) : int(box.y2), int(box.x1) : int(box.x2)] = color


def _outline(img: np.ndarray, box: Box, color: tuple[int, int, int], thickness: int = 2):
    x1, y1, x2, y2 = int(box.x1), int(box.y1), int(box.x2), int(box.y2)
    img[y1 : y1 + thickness, x1:x2] = color
    img[y2 - thickness : y2, x1:x2] = color
    img[y1:y2, x1 : x1 + thickness] = color
    img[y1:y2, x2 - thickness : x2] = color


def render_frame(scene: Scene, frame: int) -> np.ndarray:
    """Render one frame; the event patch is painted last so it is never occluded."""
    img = np.full((scene.height, scene.width, 3), COLOR_BACKGROUND, dtype=np.uint8)
    _outline(img, scene.source_box, COLOR_CONTAINER)
    _outline(img, scene.dest_box, COLOR_CONTAINER)
    _fill(img, scene.effector_track.box_at(frame), COLOR_EFFECTOR)
    if scene.event is not None:
        color = scene.event.color_at(frame)
        if color is not None:
            x1, y1, x2, y2 = scene.event.rect
            img[y1:y2, x1:x2] = color
    return img


def render_all(scene: Scene) -> np.ndarray:
    return np.stack([render_frame(scene, f) for f in range(scene.frame_count)])


class SceneFrameSource(FrameSource):
    """Lazy frame source rendering scene frames on demand."""

    def __init__(self, scene: Scene):
        self.scene = scene
        self.frame_count = scene.frame_count
        self.height = scene.height
        self.width = scene.width

    def frame(self, index: int) -> np.ndarray:
        if not 0 <= index < self.frame_count:
            from .errors import FrameSourceError

            raise FrameSourceError(f"missing frame {index} in synthetic scene")
        return render_frame(self.scene, index)


def _effector_center(segments, source_box: Box, dest_box: Box, frame: int):
    """Piecewise path: parked at a container, linear during the move actions."""
    sx = (source_box.x1 + source_box.x2) / 2
    dx = (dest_box.x1 + dest_box.x2) / 2
    y = (source_box.y1 + source_box.y2) / 2
    by_name = {s.name: s for s in segments}
    move_out = by_name["MoveDestination"]
    move_back = by_name["MoveSource"]
    if frame < move_out.start:
        return sx, y
    if frame < move_out.end:
        frac = (frame - move_out.start) / move_out.length
        return sx + (dx - sx) * frac, y
    if frame < move_back.start:
        return dx, y
    if frame < move_back.end:
        frac = (frame - move_back.start) / move_back.length
        return dx + (sx - dx) * frac, y
    return sx, y


def generate_sample(spec: SynthSpec, index: int) -> SynthSample:
    """One deterministic sample; the RNG stream is seed XOR sample index."""
    rng = random.Random(spec.seed ^ index)
    w, h = spec.width, spec.height

    names = [n for n in ARMBENCH_ACTIONS if n in spec.action_lengths]
    names += [n for n in spec.action_lengths if n not in names]
    segments = []
    cursor = 0
    for name in names:
        lo, hi = spec.action_lengths[name]
        length = rng.randint(lo, hi)
        segments.append(ActionSegment(name=name, start=cursor, end=cursor + length))
        cursor += length
    frame_count = cursor

    source_box = Box(int(0.05 * w), int(0.25 * h), int(0.40 * w), int(0.90 * h))
    dest_box = Box(int(0.60 * w), int(0.25 * h), int(0.95 * w), int(0.90 * h))

    # Effector annotated every 2nd frame; renderer and consumers both resolve
    # intermediate frames with nearest-frame lookup, so annotation == render.
    eff = 8
    boxes = {}
    for f in range(0, frame_count, 2):
        cx, cy = _effector_center(segments, source_box, dest_box, f)
        x1 = int(min(max(cx - eff / 2, 0), w - eff))
        y1 = int(min(max(cy - eff / 2, 0), h - eff))
        boxes[f] = Box(x1, y1, x1 + eff, y1 + eff)
    effector_track = BoundingBoxTrack(boxes)

    draw = rng.random()
    cls = None
    acc = 0.0
    for name, prob in spec.failure_probs.items():
        acc += prob
        if draw < acc:
            cls = name
            break

    failure = None
    event = None
    if cls is not None:
        event_names = list(spec.event_actions)
        weights = [spec.event_actions[n] for n in event_names]
        chosen = rng.choices(event_names, weights)[0]
        seg = next(s for s in segments if s.name == chosen)
        span_segs = [s for s in segments if s.name in spec.event_actions]
        span_lo = min(s.start for s in span_segs)
        span_hi = max(s.end for s in span_segs)
        span = span_hi - span_lo

        lo, hi = spec.event_duration
        if spec.event_span_divisor is not None:
            hi = min(hi, (span + spec.event_span_divisor - 1) // spec.event_span_divisor - 1)
        hi = max(hi, 1)
        duration = min(rng.randint(min(lo, hi), hi), span)

        t_first = rng.randint(seg.start, seg.end - 1)
        t_first = min(t_first, span_hi - duration)
        t_first = max(t_first, span_lo)

        t_open = None
        if cls == DECONSTRUCTION and rng.random() < spec.open_phase_prob:
            candidate = max(span_lo, t_first - rng.randint(1, duration))
            if candidate < t_first:
                t_open = candidate

        side = rng.randint(10, 16)
        px = rng.randint(int(dest_box.x1) + 2, int(dest_box.x2) - 2 - side)
        py = rng.randint(int(dest_box.y1) + 2, int(dest_box.y2) - 2 - side)
        rect = (px, py, px + side, py + side)

        if cls == OPEN:
            event = EventPaint(rect, amber_span=(t_first, t_first + duration), red_span=None)
        else:
            amber = (t_open, t_first) if t_open is not None else None
            event = EventPaint(rect, amber_span=amber, red_span=(t_first, t_first + duration))
        failure = FailureAnnotation(cls=cls, t_first_visible=t_first, t_open=t_open)

    timeline = TaskTimeline(
        sample_id=f"synth-{index:05d}",
        frame_count=frame_count,
        fps=spec.fps,
        segments=tuple(segments),
        tracks={
            ROLE_END_EFFECTOR: effector_track,
            ROLE_SOURCE: BoundingBoxTrack({0: source_box}),
            ROLE_DESTINATION: BoundingBoxTrack({0: dest_box}),
        },
        failure=failure,
        label=cls or NOMINAL,
        width=w,
        height=h,
    )
    scene = Scene(
        width=w,
        height=h,
        frame_count=frame_count,
        source_box=source_box,
        dest_box=dest_box,
        effector_track=effector_track,
        event=event,
    )
    return SynthSample(timeline=timeline, scene=scene)


def generate(spec: SynthSpec, count: int) -> list[SynthSample]:
    """Generate `count` samples; every timeline validates cleanly."""
    spec.check()
    samples = [generate_sample(spec, i) for i in range(count)]
    for s in samples:
        violations = validate_timeline(s.timeline)
        if violations:
            raise ValidationError(
                f"generator produced invalid timeline {s.timeline.sample_id}: {violations}"
            )
    return samples


def write_corpus(spec: SynthSpec, count: int, out_dir: str | Path) -> list[SynthSample]:
    """Write manifest.jsonl plus one packed-frames file per sample."""
    out = Path(out_dir)
    frames_dir = out / "frames"
    frames_dir.mkdir(parents=True, exist_ok=True)
    samples = generate(spec, count)
    write_manifest(out / "manifest.jsonl", [s.timeline for s in samples])
    for s in samples:
        write_packed_frames(frames_dir / f"{s.timeline.sample_id}.tksf", render_all(s.scene))
    return samples


# ---------------------------------------------------------------------------
# Classifier oracle


def _dominant_fractions(frame: np.ndarray) -> tuple[float, float]:
    """Fractions of amber-dominant and red-dominant pixels in one frame.

    Thresholds sit halfway between the event colors and everything else
    they can blend with (background, effector), so interpolated interior
    pixels still classify correctly while non-event content never does.
    """
    r = frame[..., 0].astype(np.int16)
    g = frame[..., 1].astype(np.int16)
    b = frame[..., 2].astype(np.int16)
    warm = (r >= 150) & (b <= 80)
    amber = warm & (g >= 120)
    red = warm & (g < 120)
    px = frame.shape[0] * frame.shape[1]
    return float(amber.sum()) / px, float(red.sum()) / px


def oracle_classify(clip) -> list[float]:
    """Per-class scores [nominal, open, deconstruction] for a clip.

    Accepts a ClipTensor or a raw (n, h, w, 3) uint8 array. An event is
    detected iff at least one frame shows it; a saturated red score
    suppresses the amber score so cascading failures classify as
    deconstruction rather than falling to the argmax tie-break.
    """
    frames = clip if isinstance(clip, np.ndarray) else clip.data
    amber_max = 0.0
    red_max = 0.0
    for frame in frames:
        a, r = _dominant_fractions(frame)
        amber_max = max(amber_max, a)
        red_max = max(red_max, r)
    a = min(1.0, amber_max / SATURATION_FRACTION)
    r = min(1.0, red_max / SATURATION_FRACTION)
    return [max(0.0, 1.0 - a - r), a * (1.0 - r), r]


def oracle_predict(clip) -> str:
    return ARMBENCH_CLASSES[argmax_class(oracle_classify(clip))]
