import pytest

from tksample.timeline import (
    ARMBENCH_ACTIONS,
    ActionSegment,
    BoundingBoxTrack,
    Box,
    FailureAnnotation,
    NOMINAL,
    ROLE_DESTINATION,
    ROLE_END_EFFECTOR,
    ROLE_SOURCE,
    TaskTimeline,
)


def make_timeline(
    lengths=(40, 40, 40, 40, 40),
    names=ARMBENCH_ACTIONS,
    tracks=None,
    failure=None,
    label=NOMINAL,
    sample_id="t0",
    fps=10.0,
    width=1280,
    height=560,
):
    segments = []
    cursor = 0
    for name, length in zip(names, lengths):
        segments.append(ActionSegment(name=name, start=cursor, end=cursor + length))
        cursor += length
    return TaskTimeline(
        sample_id=sample_id,
        frame_count=cursor,
        fps=fps,
        segments=tuple(segments),
        tracks=tracks or {},
        failure=failure,
        label=label,
        width=width,
        height=height,
    )


def make_tracks(frame_count=200, width=1280, height=560):
    """Static containers plus an effector annotated every 10th frame."""
    effector = {}
    for f in range(0, frame_count, 10):
        x1 = 150 + (f % 40)
        effector[f] = Box(x1, 100, x1 + 200, 300)
    return {
        ROLE_SOURCE: BoundingBoxTrack({0: Box(100, 50, 300, 500)}),
        ROLE_DESTINATION: BoundingBoxTrack({0: Box(700, 50, 900, 500)}),
        ROLE_END_EFFECTOR: BoundingBoxTrack(effector),
    }


@pytest.fixture
def armbench_timeline():
    return make_timeline(tracks=make_tracks())


@pytest.fixture
def failure_timeline():
    ann = FailureAnnotation(cls="deconstruction", t_first_visible=100, t_open=70)
    return make_timeline(failure=ann, label="deconstruction")
