"""Task-knowledge frame sampling for video-based robot failure detection.

Turns action boundaries and object tracks into deterministic frame-selection
plans, cropped/resized clip tensors, adjusted labels, and evaluation metrics.
"""

from .errors import ClipFormatError, FrameSourceError, ManifestError, ValidationError
from .labels import (
    action_label,
    aggregate_logits,
    aggregate_outcomes,
    argmax_class,
    failure_state_at,
)
from .metrics import EvalReport, confusion, evaluate, report
from .roi import CropRect, action_roi, attach_crops, fixed_crop
from .sampling import (
    FrameAllocation,
    FramePair,
    PlanEntry,
    SamplingPlan,
    allocate_variable_rate,
    equidistant,
    image_pair,
    plan_action_subset,
    plan_baseline,
    plan_random_window,
    plan_single_action,
    plan_variable_rate,
    tta_plan_set,
)
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
    TaskTimeline,
    box_at,
    validate_timeline,
)

__version__ = "0.1.0"
