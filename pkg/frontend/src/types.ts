/** Record shapes exchanged with the core pipeline over its file formats. */

export interface SegmentRecord {
    name: string;
    start: number;
    end: number;
}

export interface FailureRecord {
    cls: string;
    t_first_visible: number;
    t_open?: number;
}

/** One JSON-lines manifest record (one task execution). */
export interface ManifestRecord {
    sample_id: string;
    frame_count: number;
    fps: number;
    label: string;
    segments: SegmentRecord[];
    tracks?: Record<string, Record<string, number[]>>;
    failure?: FailureRecord | null;
    width?: number;
    height?: number;
}

export interface PlanEntry {
    frame: number;
    action: string;
    crop?: [number, number, number, number];
}

/** Mirror of a core sampling plan, field-for-field. */
export interface BoundPlan {
    sample_id: string;
    strategy: string;
    seed: number;
    crop_mode: string;
    n: number;
    action?: string;
    label?: string;
    entries: PlanEntry[];
}

export interface PlanConfig {
    strategy?: "baseline" | "action-subset" | "single-action";
    subset?: string[];
    frames?: number;
    offset?: number;
    jitter?: boolean;
    augment?: "none" | "action" | "random";
    majorityFraction?: number;
    windowFraction?: number;
    equalSplit?: boolean;
    tta?: boolean;
    crop?: "roi" | "fixed" | "none";
    fixedRegion?: [number, number, number, number];
    roiFrames?: "all" | "sampled";
    seed?: number;
}

export interface PredictionRow {
    sample_id: string;
    action?: string;
    logits?: number[];
    label?: string;
}

export interface EvalConfig {
    tta?: boolean;
    classes?: string[];
    f1Scope?: "failure" | "all";
}

export interface EvalReportRecord {
    classes: string[];
    confusion: number[][];
    recall: Record<string, number>;
    fpr: Record<string, number>;
    precision: Record<string, number>;
    f1: number;
    f1_scope: string;
    total: number;
    degenerate: string[];
}

/** Decoded clip container: n*h*w*c bytes of 8-bit RGB plus provenance. */
export interface ClipBuffer {
    n: number;
    height: number;
    width: number;
    channels: number;
    data: Uint8Array;
    provenance: Record<string, unknown>;
}
