"""Deterministic frame-index planners.

Every planner is a pure function of its arguments: given the same timeline
and resolved parameters it returns the same plan on every run and platform.
Randomness (start-offset jitter, choice of high-rate action, window center)
belongs to the caller, who draws resolved values from a seeded generator
and passes them in.

The base selection rule picks n indices from [start, end) as

    index_i = start + floor((i + offset) * L / n),   L = end - start

which is integer-exact for offset 0, keeps all indices inside the range for
any offset in [0, 1), and degenerates to duplication when L < n.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, replace

from .errors import ValidationError
from .timeline import ActionSegment, TaskTimeline

DEFAULT_FRAMES = 32
DEFAULT_MAJORITY_FRACTION = 0.75
DEFAULT_WINDOW_FRACTION = 0.25


@dataclass(frozen=True)
class PlanEntry:
    """One selected frame with its action attribution and optional crop."""

    frame: int
    action: str
    crop: tuple[int, int, int, int] | None = None


@dataclass
class SamplingPlan:
    """Ordered frame selection for one sample, ready for materialization.

    `seed` records the generator seed that resolved any random parameters
    (0 for fully deterministic plans). `action` and `label` are set for
    plans that stand for a single action with an adjusted outcome label.
    """

    sample_id: str
    strategy: str
    entries: list[PlanEntry]
    seed: int = 0
    crop_mode: str = "none"
    action: str | None = None
    label: str | None = None

    @property
    def n(self) -> int:
        return len(self.entries)

    def frame_indices(self) -> list[int]:
        return [e.frame for e in self.entries]


@dataclass(frozen=True)
class FrameAllocation:
    """Per-action frame counts summing to the clip length."""

    counts: dict[str, int]
    n: int

    def __post_init__(self):
        if sum(self.counts.values()) != self.n:
            raise ValueError(
                f"allocation sums to {sum(self.counts.values())}, expected {self.n}"
            )


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def largest_remainder(weights: list[float], total: int) -> list[int]:
    """Split `total` into integer parts proportional to `weights`.

    Floor quotas first, then hand out the leftover by descending fractional
    remainder, ties broken by list position. Zero-weight bins always
    receive 0; if every weight is zero the caller must not ask for a split.
    """
    weight_sum = float(sum(weights))
    if total < 0:
        raise ValueError(f"cannot distribute negative total {total}")
    if weight_sum <= 0:
        if total:
            raise ValueError("cannot distribute frames over zero-length regions")
        return [0] * len(weights)
    quotas = [total * w / weight_sum for w in weights]
    parts = [int(math.floor(q)) for q in quotas]
    leftover = total - sum(parts)
    order = sorted(
        range(len(weights)),
        key=lambda i: (-(quotas[i] - parts[i]), i),
    )
    for i in order:
        if leftover == 0:
            break
        if weights[i] > 0:
            parts[i] += 1
            leftover -= 1
    return parts


def equidistant(start: int, end: int, n: int, offset: float = 0.0) -> list[int]:
    """n evenly spaced frame indices in [start, end).

    `offset` in [0, 1) slides the whole grid by a fraction of one step
    (train-time start-point jitter). Indices repeat when the range holds
    fewer than n frames.
    """
    if start >= end:
        raise ValidationError(f"empty range [{start}, {end})")
    if n < 1:
        raise ValidationError(f"need n >= 1, got {n}")
    if not 0.0 <= offset < 1.0:
        raise ValidationError(f"offset must be in [0, 1), got {offset}")
    span = end - start
    return [start + int(math.floor((i + offset) * span / n)) for i in range(n)]


def _attributed_entries(t: TaskTimeline, indices: list[int]) -> list[PlanEntry]:
    starts = [seg.start for seg in t.segments]
    entries = []
    for f in indices:
        seg = t.segments[bisect_right(starts, f) - 1]
        entries.append(PlanEntry(frame=f, action=seg.name))
    return entries


def _subset_segments(t: TaskTimeline, subset: list[str]) -> list[ActionSegment]:
    """Resolve subset names to segments, enforcing presence and contiguity."""
    if not subset:
        raise ValidationError("action subset must be non-empty")
    names = t.action_names()
    for a in subset:
        if a not in names:
            raise ValidationError(f"action {a!r} not in timeline {t.sample_id!r}")
    positions = sorted(names.index(a) for a in subset)
    if positions != list(range(positions[0], positions[-1] + 1)):
        raise ValidationError(f"action subset {list(subset)} is not temporally contiguous")
    return [t.segments[i] for i in positions]


def plan_baseline(t: TaskTimeline, n: int = DEFAULT_FRAMES, offset: float = 0.0) -> SamplingPlan:
    """Equidistant selection over the full video."""
    indices = equidistant(0, t.frame_count, n, offset)
    return SamplingPlan(t.sample_id, "baseline", _attributed_entries(t, indices))


def plan_action_subset(
    t: TaskTimeline,
    subset: list[str],
    n: int = DEFAULT_FRAMES,
    offset: float = 0.0,
) -> SamplingPlan:
    """Equidistant selection over the span of a contiguous action subset."""
    segs = _subset_segments(t, subset)
    indices = equidistant(segs[0].start, segs[-1].end, n, offset)
    return SamplingPlan(t.sample_id, "action-subset", _attributed_entries(t, indices))


def plan_single_action(
    t: TaskTimeline,
    action: str,
    n: int = DEFAULT_FRAMES,
    offset: float = 0.0,
) -> SamplingPlan:
    """Equidistant selection within one action, treated as its own sample."""
    seg = t.segment(action)
    indices = equidistant(seg.start, seg.end, n, offset)
    entries = [PlanEntry(frame=f, action=action) for f in indices]
    return SamplingPlan(t.sample_id, "single-action", entries, action=action)


def allocate_variable_rate(
    t: TaskTimeline,
    subset: list[str],
    n: int,
    selected: str,
    f: float = DEFAULT_MAJORITY_FRACTION,
    equal_split: bool = False,
) -> FrameAllocation:
    """Give `selected` a majority round(f*n) of the frames, spread the rest.

    Remaining frames go to the other subset actions proportionally to their
    lengths (or equally with `equal_split`) using largest-remainder
    rounding, ties broken by temporal order. Whenever enough frames remain,
    every other action receives at least one.
    """
    segs = _subset_segments(t, subset)
    names = [s.name for s in segs]
    if selected not in names:
        raise ValidationError(f"selected action {selected!r} not in subset {names}")
    if not 0.5 < f < 1.0:
        raise ValidationError(f"majority fraction must be in (0.5, 1), got {f}")
    if n < 1:
        raise ValidationError(f"need n >= 1, got {n}")

    counts = dict.fromkeys(names, 0)
    others = [s for s in segs if s.name != selected]
    if not others:
        counts[selected] = n
        return FrameAllocation(counts, n)

    majority = min(n, _round_half_up(f * n))
    remainder = n - majority
    counts[selected] = majority

    weights = [1.0 if equal_split else float(s.length) for s in others]
    if remainder >= len(others):
        # Every non-selected action keeps at least one frame of context.
        for s in others:
            counts[s.name] += 1
        parts = largest_remainder(weights, remainder - len(others))
    else:
        parts = largest_remainder(weights, remainder)
    for s, c in zip(others, parts):
        counts[s.name] += c
    return FrameAllocation(counts, n)


def plan_variable_rate(
    t: TaskTimeline,
    subset: list[str],
    n: int,
    selected: str,
    f: float = DEFAULT_MAJORITY_FRACTION,
    offset: float = 0.0,
    equal_split: bool = False,
) -> SamplingPlan:
    """Per-action equidistant selection under a variable-rate allocation.

    The selected action is sampled at a high frame rate and the remaining
    subset actions at a low one; per-action runs are concatenated in
    temporal order, so the result is sorted.
    """
    allocation = allocate_variable_rate(t, subset, n, selected, f, equal_split)
    segs = _subset_segments(t, subset)
    entries = []
    for seg in segs:
        count = allocation.counts[seg.name]
        if count == 0:
            continue
        for frame in equidistant(seg.start, seg.end, count, offset):
            entries.append(PlanEntry(frame=frame, action=seg.name))
    return SamplingPlan(t.sample_id, "variable-rate", entries, action=selected)


def plan_random_window(
    t: TaskTimeline,
    subset: list[str],
    n: int,
    center: int,
    w: float = DEFAULT_WINDOW_FRACTION,
    f: float = DEFAULT_MAJORITY_FRACTION,
    offset: float = 0.0,
) -> SamplingPlan:
    """High-rate window around `center`, low-rate flanks (non-action-aligned).

    The window spans w of the subset span, clamped to at least one frame
    and clipped to the span. round(f*n) indices land in the window; the
    remainder splits across the flanking regions proportionally to their
    lengths. A window covering the whole span reduces to plan_action_subset.
    """
    segs = _subset_segments(t, subset)
    lo, hi = segs[0].start, segs[-1].end
    if not lo <= center < hi:
        raise ValidationError(f"center {center} outside subset span [{lo}, {hi})")
    if not 0.0 < w < 1.0:
        raise ValidationError(f"window fraction must be in (0, 1), got {w}")
    if not 0.5 < f < 1.0:
        raise ValidationError(f"majority fraction must be in (0.5, 1), got {f}")

    span = hi - lo
    half = w * span / 2.0
    win_lo = max(lo, _round_half_up(center - half))
    win_hi = min(hi, _round_half_up(center + half))
    if win_hi <= win_lo:
        # Degenerate window of length < 1 frame clamps to the center frame.
        win_lo, win_hi = center, center + 1

    majority = min(n, _round_half_up(f * n))
    flanks = [win_lo - lo, hi - win_hi]
    if sum(flanks) == 0:
        window_count, flank_counts = n, [0, 0]
    else:
        window_count = majority
        flank_counts = largest_remainder([float(x) for x in flanks], n - majority)

    indices = []
    if flank_counts[0]:
        indices += equidistant(lo, win_lo, flank_counts[0], offset)
    indices += equidistant(win_lo, win_hi, window_count, offset)
    if flank_counts[1]:
        indices += equidistant(win_hi, hi, flank_counts[1], offset)
    indices.sort()
    return SamplingPlan(t.sample_id, "random-window", _attributed_entries(t, indices))


def tta_plan_set(
    t: TaskTimeline,
    subset: list[str],
    n: int = DEFAULT_FRAMES,
    f: float = DEFAULT_MAJORITY_FRACTION,
) -> list[SamplingPlan]:
    """Test-time plan set: uniform subset plan plus one high-rate plan per action.

    Deterministic by construction (offset 0, no random draws); logits from
    the materialized clips are meant to be mean-aggregated.
    """
    segs = _subset_segments(t, subset)
    plans = [plan_action_subset(t, subset, n, offset=0.0)]
    for seg in segs:
        plans.append(plan_variable_rate(t, subset, n, selected=seg.name, f=f, offset=0.0))
    return plans


@dataclass(frozen=True)
class FramePair:
    """Pre/post frame pair for one action (both indices inclusive)."""

    first: int
    last: int
    action: str


def image_pair(
    t: TaskTimeline,
    mode: str = "per-action",
    subset: list[str] | None = None,
) -> list[FramePair]:
    """First/last frame pairs capturing pre- and post-states.

    per-action: one (start, end-1) pair per subset action. act-bracket: a
    single pair from Approach's first to Retract's last frame, attributed
    to the Act action between them.
    """
    if mode == "per-action":
        from .timeline import ACTION_SUBSET

        return [
            FramePair(first=seg.start, last=seg.end - 1, action=seg.name)
            for seg in _subset_segments(t, list(subset or ACTION_SUBSET))
        ]
    if mode == "act-bracket":
        for required in ("Approach", "Act", "Retract"):
            if required not in t.action_names():
                raise ValidationError(
                    f"action {required!r} not in timeline {t.sample_id!r}"
                )
        return [
            FramePair(
                first=t.segment("Approach").start,
                last=t.segment("Retract").end - 1,
                action="Act",
            )
        ]
    raise ValidationError(f"unknown image-pair mode {mode!r}")


def stamp_seed(plan: SamplingPlan, seed: int) -> SamplingPlan:
    """Record the seed whose draws resolved this plan's random parameters."""
    return replace(plan, seed=seed)
