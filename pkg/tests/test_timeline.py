import dataclasses
import random

import pytest

from tksample.timeline import (
    ActionSegment,
    BoundingBoxTrack,
    Box,
    FailureAnnotation,
    box_at,
    validate_timeline,
)

from conftest import make_timeline, make_tracks


class TestValidate:
    def test_well_formed(self):
        t = make_timeline(lengths=(20, 20, 20, 20, 20))
        assert t.frame_count == 100
        assert validate_timeline(t) == []

    def test_gap_between_segments(self):
        t = make_timeline()
        segs = list(t.segments)
        # open a 1-frame gap between Wait and Place
        segs[3] = ActionSegment("Place", segs[3].start + 1, segs[3].end)
        t = dataclasses.replace(t, segments=tuple(segs))
        violations = validate_timeline(t)
        assert any("not contiguous at index 2/3" in v for v in violations)

    def test_t_open_after_t_first(self):
        ann = FailureAnnotation(cls="deconstruction", t_first_visible=40, t_open=50)
        t = make_timeline(failure=ann)
        violations = validate_timeline(t)
        assert any("t_open must precede t_first_visible" in v for v in violations)

    def test_segment_lengths_sum_to_frame_count(self):
        rng = random.Random(11)
        for _ in range(50):
            lengths = [rng.randint(1, 60) for _ in range(5)]
            t = make_timeline(lengths=lengths)
            assert validate_timeline(t) == []
            assert sum(s.length for s in t.segments) == t.frame_count

    def test_first_segment_offset_rejected(self):
        t = make_timeline()
        segs = list(t.segments)
        segs[0] = ActionSegment("Pick", 1, segs[0].end)
        t = dataclasses.replace(t, segments=tuple(segs))
        assert any("start at 0" in v for v in validate_timeline(t))

    def test_duplicate_names_rejected(self):
        t = make_timeline(names=("Pick", "Wait", "Wait", "Place", "MoveSource"))
        assert any("not unique" in v for v in validate_timeline(t))

    def test_track_outside_bounds(self):
        tracks = {"end_effector": BoundingBoxTrack({0: Box(0, 0, 2000, 100)})}
        t = make_timeline(tracks=tracks)
        assert any("outside frame bounds" in v for v in validate_timeline(t))

    def test_open_failure_with_t_open_rejected(self):
        ann = FailureAnnotation(cls="open", t_first_visible=50, t_open=10)
        t = make_timeline(failure=ann)
        assert any("only valid for deconstruction" in v for v in validate_timeline(t))


def _mutations(t):
    """One-field mutations that each must trip at least one violation."""
    segs = list(t.segments)
    yield dataclasses.replace(t, frame_count=0)
    yield dataclasses.replace(t, fps=0.0)
    yield dataclasses.replace(t, segments=())
    yield dataclasses.replace(
        t, segments=tuple([dataclasses.replace(segs[0], end=segs[0].start)] + segs[1:])
    )
    yield dataclasses.replace(
        t, segments=tuple(segs[:-1] + [dataclasses.replace(segs[-1], end=t.frame_count + 3)])
    )
    yield dataclasses.replace(t, failure=FailureAnnotation("deconstruction", t.frame_count))
    yield dataclasses.replace(t, failure=FailureAnnotation("torn", 5))
    yield dataclasses.replace(
        t, tracks={"end_effector": BoundingBoxTrack({0: Box(50, 50, 40, 60)})}
    )


def test_every_mutation_violates():
    rng = random.Random(3)
    for _ in range(20):
        lengths = [rng.randint(2, 50) for _ in range(5)]
        t = make_timeline(lengths=lengths)
        assert validate_timeline(t) == []
        for mutant in _mutations(t):
            assert validate_timeline(mutant), f"mutation slipped through: {mutant}"


class TestBoxAt:
    def setup_method(self):
        self.b1 = Box(10, 10, 20, 20)
        self.b2 = Box(30, 30, 40, 40)
        self.track = BoundingBoxTrack({10: self.b1, 20: self.b2})

    def test_exact_hit(self):
        assert box_at(self.track, 10) == self.b1

    def test_nearest(self):
        assert box_at(self.track, 14) == self.b1
        assert box_at(self.track, 17) == self.b2

    def test_tie_goes_to_earlier(self):
        assert box_at(self.track, 15) == self.b1

    def test_outside_annotated_range(self):
        assert box_at(self.track, 0) == self.b1
        assert box_at(self.track, 99) == self.b2

    def test_empty_track(self):
        with pytest.raises(ValueError, match="no boxes in track"):
            box_at(BoundingBoxTrack({}), 0)

    def test_total_over_frame_range(self):
        t = make_timeline(tracks=make_tracks())
        track = t.tracks["end_effector"]
        for f in range(t.frame_count):
            assert box_at(track, f) is not None
