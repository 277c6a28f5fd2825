"""Manifest ingestion, plan/report serialization, frame sources, clip packing.

Interchange formats:
  - manifest: JSON-lines, one task timeline per line (schema in
    `timeline_to_record`); canonical form is key-sorted compact JSON.
  - packed frames: "TKSF" + u32 n,h,w (16-byte header), raw RGB payload.
  - packed clip: "TKSM" + u32 version,n,h,w,c header, raw RGB payload,
    length-prefixed UTF-8 provenance document.

Video decoding is out of scope: sources are frame directories or packed
raw frames, so every byte in the pipeline is reproducible.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

from .errors import ClipFormatError, FrameSourceError, ManifestError, ValidationError
from .sampling import PlanEntry, SamplingPlan
from .timeline import (
    ActionSegment,
    BoundingBoxTrack,
    Box,
    DEFAULT_HEIGHT,
    DEFAULT_WIDTH,
    FailureAnnotation,
    TaskTimeline,
    validate_timeline,
)

if TYPE_CHECKING:
    import numpy as np

FRAMES_MAGIC = b"TKSF"
CLIP_MAGIC = b"TKSM"
CLIP_VERSION = 1


# ---------------------------------------------------------------------------
# Manifest


def timeline_to_record(t: TaskTimeline) -> dict:
    record = {
        "sample_id": t.sample_id,
        "frame_count": t.frame_count,
        "fps": t.fps,
        "width": t.width,
        "height": t.height,
        "label": t.label,
        "segments": [
            {"name": s.name, "start": s.start, "end": s.end} for s in t.segments
        ],
        "tracks": {
            role: {str(f): [b.x1, b.y1, b.x2, b.y2] for f, b in track.items()}
            for role, track in t.tracks.items()
        },
    }
    if t.failure is not None:
        failure = {"cls": t.failure.cls, "t_first_visible": t.failure.t_first_visible}
        if t.failure.t_open is not None:
            failure["t_open"] = t.failure.t_open
        record["failure"] = failure
    return record


def timeline_from_record(record: dict) -> TaskTimeline:
    try:
        segments = tuple(
            ActionSegment(name=s["name"], start=int(s["start"]), end=int(s["end"]))
            for s in record["segments"]
        )
        tracks = {
            role: BoundingBoxTrack(
                {int(f): Box(*coords) for f, coords in boxes.items()}
            )
            for role, boxes in record.get("tracks", {}).items()
        }
        failure = None
        if record.get("failure") is not None:
            raw = record["failure"]
            failure = FailureAnnotation(
                cls=raw["cls"],
                t_first_visible=int(raw["t_first_visible"]),
                t_open=int(raw["t_open"]) if raw.get("t_open") is not None else None,
            )
        return TaskTimeline(
            sample_id=str(record["sample_id"]),
            frame_count=int(record["frame_count"]),
            fps=float(record["fps"]),
            segments=segments,
            tracks=tracks,
            failure=failure,
            label=str(record["label"]),
            width=int(record.get("width", DEFAULT_WIDTH)),
            height=int(record.get("height", DEFAULT_HEIGHT)),
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise ValidationError(f"malformed record: {exc!r}") from exc


def serialize_manifest(timelines: list[TaskTimeline]) -> str:
    """Canonical manifest text: key-sorted compact JSON, one record per line."""
    lines = [
        json.dumps(timeline_to_record(t), sort_keys=True, separators=(",", ":"))
        for t in timelines
    ]
    return "".join(line + "\n" for line in lines)


def parse_manifest_lines(lines) -> list[TaskTimeline]:
    """Strict parse: collect every failure, raise with all of them at the end."""
    timelines = []
    failures = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            failures.append(f"line {lineno}: invalid JSON: {exc.msg}")
            continue
        try:
            t = timeline_from_record(record)
        except ValidationError as exc:
            failures.append(f"line {lineno}: {exc}")
            continue
        violations = validate_timeline(t)
        if violations:
            failures.extend(f"line {lineno}: {v}" for v in violations)
            continue
        timelines.append(t)
    if failures:
        raise ManifestError(failures)
    return timelines


def parse_manifest(path: str | Path) -> list[TaskTimeline]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_manifest_lines(fh)


def write_manifest(path: str | Path, timelines: list[TaskTimeline]):
    Path(path).write_text(serialize_manifest(timelines), encoding="utf-8")


# ---------------------------------------------------------------------------
# Plans and reports


def plan_to_record(plan: SamplingPlan) -> dict:
    record = {
        "sample_id": plan.sample_id,
        "strategy": plan.strategy,
        "seed": plan.seed,
        "crop_mode": plan.crop_mode,
        "n": plan.n,
        "entries": [],
    }
    if plan.action is not None:
        record["action"] = plan.action
    if plan.label is not None:
        record["label"] = plan.label
    for e in plan.entries:
        entry = {"frame": e.frame, "action": e.action}
        if e.crop is not None:
            entry["crop"] = list(e.crop)
        record["entries"].append(entry)
    return record


def plan_from_record(record: dict) -> SamplingPlan:
    try:
        entries = [
            PlanEntry(
                frame=int(e["frame"]),
                action=str(e["action"]),
                crop=tuple(e["crop"]) if e.get("crop") is not None else None,
            )
            for e in record["entries"]
        ]
        plan = SamplingPlan(
            sample_id=str(record["sample_id"]),
            strategy=str(record["strategy"]),
            entries=entries,
            seed=int(record.get("seed", 0)),
            crop_mode=str(record.get("crop_mode", "none")),
            action=record.get("action"),
            label=record.get("label"),
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed plan record: {exc!r}") from exc
    if plan.n != int(record["n"]):
        raise ValidationError(
            f"plan record declares n={record['n']} but has {plan.n} entries"
        )
    return plan


def write_plans(path: str | Path, plans: list[SamplingPlan]):
    with open(path, "w", encoding="utf-8") as fh:
        for plan in plans:
            fh.write(json.dumps(plan_to_record(plan), sort_keys=True, separators=(",", ":")))
            fh.write("\n")


def read_plans(path: str | Path) -> list[SamplingPlan]:
    plans = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                plans.append(plan_from_record(json.loads(line)))
            except (json.JSONDecodeError, ValidationError) as exc:
                raise ValidationError(f"plans line {lineno}: {exc}") from exc
    return plans


def report_to_record(rep) -> dict:
    return {
        "classes": rep.classes,
        "confusion": rep.confusion,
        "recall": rep.recall,
        "fpr": rep.fpr,
        "precision": rep.precision,
        "f1": rep.f1,
        "f1_scope": rep.f1_scope,
        "total": rep.total,
        "degenerate": rep.degenerate,
    }


def report_to_text(rep) -> str:
    """Flat key-value block, one metric per line."""
    lines = [f"total {rep.total}", f"f1 {rep.f1:.6f}", f"f1_scope {rep.f1_scope}"]
    for c in rep.classes:
        lines.append(f"recall.{c} {rep.recall[c]:.6f}")
    for c in rep.classes:
        lines.append(f"fpr.{c} {rep.fpr[c]:.6f}")
    for c in rep.classes:
        lines.append(f"precision.{c} {rep.precision[c]:.6f}")
    for i, true_c in enumerate(rep.classes):
        for j, pred_c in enumerate(rep.classes):
            lines.append(f"confusion.{true_c}.{pred_c} {rep.confusion[i][j]}")
    if rep.degenerate:
        lines.append("degenerate " + ",".join(rep.degenerate))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Frame sources


class FrameSource:
    """Random access to RGB frames; concurrent readers are safe."""

    frame_count: int
    height: int
    width: int

    def frame(self, index: int) -> np.ndarray:
        raise NotImplementedError


class DirectoryFrameSource(FrameSource):
    """Zero-padded numbered image files (000000.png ...) in one directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        if not self.root.is_dir():
            raise FrameSourceError(f"not a directory: {self.root}")
        self._files = {}
        for p in self.root.iterdir():
            if p.suffix.lower() in (".png", ".jpg", ".jpeg") and p.stem.isdigit():
                self._files[int(p.stem)] = p
        if not self._files:
            raise FrameSourceError(f"no numbered frames in {self.root}")
        self.frame_count = max(self._files) + 1
        first = self.frame(min(self._files))
        self.height, self.width = first.shape[:2]

    def frame(self, index: int) -> np.ndarray:
        import numpy as np

        if index not in self._files:
            raise FrameSourceError(f"missing frame {index} in {self.root}")
        from PIL import Image

        with Image.open(self._files[index]) as img:
            return np.asarray(img.convert("RGB"), dtype=np.uint8)


class PackedFrameSource(FrameSource):
    """Raw RGB frames behind a 16-byte TKSF header."""

    def __init__(self, path: str | Path):
        import numpy as np

        self.path = Path(path)
        data = self.path.read_bytes()
        if len(data) < 16 or data[:4] != FRAMES_MAGIC:
            raise ClipFormatError(f"not a packed-frames file: {self.path}")
        n, h, w = struct.unpack("<III", data[4:16])
        expected = 16 + n * h * w * 3
        if len(data) != expected:
            raise ClipFormatError(
                f"{self.path}: header declares {expected} bytes, file has {len(data)}"
            )
        self.frame_count, self.height, self.width = n, h, w
        self._frames = np.frombuffer(data, dtype=np.uint8, offset=16).reshape(n, h, w, 3)

    def frame(self, index: int) -> np.ndarray:
        if not 0 <= index < self.frame_count:
            raise FrameSourceError(f"missing frame {index} in {self.path}")
        return self._frames[index]


class ArrayFrameSource(FrameSource):
    """In-memory (n, h, w, 3) uint8 stack."""

    def __init__(self, frames: np.ndarray):
        import numpy as np

        if frames.ndim != 4 or frames.shape[3] != 3 or frames.dtype != np.uint8:
            raise FrameSourceError(f"need (n,h,w,3) uint8 frames, got {frames.shape}")
        self._frames = frames
        self.frame_count, self.height, self.width = frames.shape[:3]

    def frame(self, index: int) -> np.ndarray:
        if not 0 <= index < self.frame_count:
            raise FrameSourceError(f"missing frame {index}")
        return self._frames[index]


def pack_frames(frames: np.ndarray) -> bytes:
    import numpy as np

    n, h, w, c = frames.shape
    if c != 3 or frames.dtype != np.uint8:
        raise ClipFormatError(f"need (n,h,w,3) uint8 frames, got {frames.shape}")
    return FRAMES_MAGIC + struct.pack("<III", n, h, w) + frames.tobytes()


def write_packed_frames(path: str | Path, frames: np.ndarray):
    Path(path).write_bytes(pack_frames(frames))


def open_frame_source(spec: str | Path) -> FrameSource:
    path = Path(spec)
    if path.is_dir():
        return DirectoryFrameSource(path)
    if path.is_file():
        return PackedFrameSource(path)
    raise FrameSourceError(f"frame source not found: {path}")


def resolve_frame_source(root: str | Path, sample_id: str) -> FrameSource:
    """Locate one sample's frames under a source root.

    Tries <root>/<sample_id>.tksf, then <root>/<sample_id>/; a root that is
    itself a file or frame directory serves every sample.
    """
    root = Path(root)
    packed = root / f"{sample_id}.tksf"
    if packed.is_file():
        return PackedFrameSource(packed)
    subdir = root / sample_id
    if subdir.is_dir():
        return DirectoryFrameSource(subdir)
    return open_frame_source(root)


# ---------------------------------------------------------------------------
# Materialization


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Channel-wise bilinear resize with half-pixel centers.

    Sample coordinates are clamped at the borders and the final 8-bit cast
    rounds half to even. Identity when the shape is unchanged.
    """
    import numpy as np

    h, w = img.shape[:2]
    if out_h < 1 or out_w < 1:
        raise ValidationError(f"bad target size {out_h}x{out_w}")
    ys = np.clip((np.arange(out_h) + 0.5) * (h / out_h) - 0.5, 0, h - 1)
    xs = np.clip((np.arange(out_w) + 0.5) * (w / out_w) - 0.5, 0, w - 1)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, None, None]
    fx = (xs - x0)[None, :, None]

    src = img.astype(np.float64)
    top = src[y0][:, x0] * (1.0 - fx) + src[y0][:, x1] * fx
    bottom = src[y1][:, x0] * (1.0 - fx) + src[y1][:, x1] * fx
    out = top * (1.0 - fy) + bottom * fy
    return np.rint(out).astype(np.uint8)


@dataclass
class ClipTensor:
    """Materialized (n, h, w, 3) uint8 frame stack plus provenance."""

    data: np.ndarray
    provenance: dict

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


def materialize(
    plan: SamplingPlan,
    source: FrameSource,
    out_h: int = 224,
    out_w: int = 224,
) -> ClipTensor:
    """Fetch, crop, resize, and stack the planned frames in plan order."""
    import numpy as np

    frames = []
    for e in plan.entries:
        frame = source.frame(e.frame)
        if e.crop is not None:
            x1, y1, x2, y2 = e.crop
            if not (0 <= x1 < x2 <= source.width and 0 <= y1 < y2 <= source.height):
                raise ValidationError(
                    f"crop {e.crop} outside source frame "
                    f"{source.width}x{source.height} (frame {e.frame})"
                )
            frame = frame[y1:y2, x1:x2]
        frames.append(resize_bilinear(frame, out_h, out_w))
    data = np.stack(frames) if frames else np.zeros((0, out_h, out_w, 3), np.uint8)
    provenance = {
        "sample_id": plan.sample_id,
        "crop_mode": plan.crop_mode,
        "plan": plan_to_record(plan),
    }
    return ClipTensor(data=data, provenance=provenance)


# ---------------------------------------------------------------------------
# Clip container


def pack_clip(clip: ClipTensor) -> bytes:
    """Bit-exact clip container: TKSM header, raw payload, provenance doc."""
    import numpy as np

    if clip.data.dtype != np.uint8 or clip.data.ndim != 4:
        raise ClipFormatError(f"need (n,h,w,c) uint8 clip, got {clip.data.shape}")
    n, h, w, c = clip.data.shape
    header = CLIP_MAGIC + struct.pack("<IIIII", CLIP_VERSION, n, h, w, c)
    prov = json.dumps(clip.provenance, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return header + clip.data.tobytes() + struct.pack("<I", len(prov)) + prov


def unpack_clip(data: bytes) -> ClipTensor:
    import numpy as np

    if len(data) < 24:
        raise ClipFormatError("clip truncated before header")
    if data[:4] != CLIP_MAGIC:
        raise ClipFormatError(f"bad magic {data[:4]!r}")
    version, n, h, w, c = struct.unpack("<IIIII", data[4:24])
    if version != CLIP_VERSION:
        raise ClipFormatError(f"unsupported clip version {version}")
    payload_len = n * h * w * c
    if len(data) < 24 + payload_len + 4:
        raise ClipFormatError(
            f"clip declares {payload_len} payload bytes but only "
            f"{len(data) - 24} follow the header"
        )
    payload = np.frombuffer(data, dtype=np.uint8, offset=24, count=payload_len)
    prov_off = 24 + payload_len
    (prov_len,) = struct.unpack("<I", data[prov_off : prov_off + 4])
    prov_end = prov_off + 4 + prov_len
    if len(data) < prov_end:
        raise ClipFormatError("clip truncated inside provenance document")
    if len(data) > prov_end:
        raise ClipFormatError(f"{len(data) - prov_end} trailing bytes after clip")
    try:
        provenance = json.loads(data[prov_off + 4 : prov_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ClipFormatError(f"bad provenance document: {exc}") from exc
    return ClipTensor(data=payload.reshape(n, h, w, c).copy(), provenance=provenance)


def write_clip(path: str | Path, clip: ClipTensor):
    Path(path).write_bytes(pack_clip(clip))


def read_clip(path: str | Path) -> ClipTensor:
    return unpack_clip(Path(path).read_bytes())
