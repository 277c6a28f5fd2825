/** Bindings into the frame-sampling core.
 *
 * Every entry point delegates to the core CLI and its file formats; no
 * planning, labeling, or metric logic lives on this side of the boundary.
 */

import { mkdtemp, readFile, readdir, rm, writeFile } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { CoreError, parseJsonLines, runCore } from "./core";
import { unpackClip } from "./tksm";
import {
    BoundPlan,
    ClipBuffer,
    EvalConfig,
    EvalReportRecord,
    ManifestRecord,
    PlanConfig,
    PredictionRow,
} from "./types";

export { CoreError, runCore } from "./core";
export { unpackClip } from "./tksm";
export * from "./types";

async function withTempDir<T>(fn: (dir: string) => Promise<T>): Promise<T> {
    const dir = await mkdtemp(join(tmpdir(), "tksample-bind-"));
    try {
        return await fn(dir);
    } finally {
        await rm(dir, { recursive: true, force: true });
    }
}

function jsonLines(records: unknown[]): string {
    return records.map((r) => JSON.stringify(r)).join("\n") + "\n";
}

export function planArgs(config: PlanConfig, manifest: string, out: string): string[] {
    const args = ["plan", "--manifest", manifest, "--out", out];
    if (config.strategy !== undefined) args.push("--strategy", config.strategy);
    if (config.subset !== undefined) args.push("--subset", config.subset.join(","));
    if (config.frames !== undefined) args.push("--frames", String(config.frames));
    if (config.offset !== undefined) args.push("--offset", String(config.offset));
    if (config.jitter) args.push("--jitter");
    if (config.augment !== undefined) args.push("--augment", config.augment);
    if (config.majorityFraction !== undefined) {
        args.push("--majority-fraction", String(config.majorityFraction));
    }
    if (config.windowFraction !== undefined) {
        args.push("--window-fraction", String(config.windowFraction));
    }
    if (config.equalSplit) args.push("--equal-split");
    if (config.tta) args.push("--tta");
    if (config.crop !== undefined) args.push("--crop", config.crop);
    if (config.fixedRegion !== undefined) {
        args.push("--fixed-region", config.fixedRegion.join(","));
    }
    if (config.roiFrames !== undefined) args.push("--roi-frames", config.roiFrames);
    if (config.seed !== undefined) args.push("--seed", String(config.seed));
    return args;
}

/** Frame-selection plans for one manifest record (several for TTA or
 *  single-action configs). */
export async function bindPlan(
    record: ManifestRecord,
    config: PlanConfig = {},
): Promise<BoundPlan[]> {
    return withTempDir(async (dir) => {
        const manifest = join(dir, "manifest.jsonl");
        const out = join(dir, "plans.jsonl");
        await writeFile(manifest, jsonLines([record]), "utf-8");
        await runCore(planArgs(config, manifest, out));
        return parseJsonLines<BoundPlan>(await readFile(out, "utf-8"));
    });
}

export interface MaterializeOptions {
    size?: number;
}

/** Materialize one plan into a host-native clip buffer.
 *
 * `source` is the core's frame-source root (a <sample_id>.tksf packed file,
 * a frame directory, or a directory holding either per sample).
 */
export async function bindMaterialize(
    plan: BoundPlan,
    source: string,
    options: MaterializeOptions = {},
): Promise<ClipBuffer> {
    return withTempDir(async (dir) => {
        const plans = join(dir, "plans.jsonl");
        const outDir = join(dir, "clips");
        await writeFile(plans, jsonLines([plan]), "utf-8");
        const args = ["materialize", "--plans", plans, "--source", source, "--out-dir", outDir];
        if (options.size !== undefined) args.push("--size", String(options.size));
        await runCore(args);
        const files = (await readdir(outDir)).sort();
        if (files.length !== 1) {
            throw new CoreError(`expected one clip, found ${files.length}`, 1);
        }
        return unpackClip(await readFile(join(outDir, files[0])));
    });
}

/** Join ground-truth records with prediction rows and return the metric report. */
export async function bindEval(
    truths: ManifestRecord[],
    preds: PredictionRow[],
    config: EvalConfig = {},
): Promise<EvalReportRecord> {
    return withTempDir(async (dir) => {
        const manifest = join(dir, "manifest.jsonl");
        const predictions = join(dir, "predictions.jsonl");
        const report = join(dir, "report.json");
        await writeFile(manifest, jsonLines(truths), "utf-8");
        await writeFile(predictions, jsonLines(preds), "utf-8");
        const args = [
            "eval", "--manifest", manifest, "--predictions", predictions, "--json", report,
        ];
        if (config.tta) args.push("--tta");
        if (config.classes !== undefined) args.push("--classes", config.classes.join(","));
        if (config.f1Scope !== undefined) args.push("--f1-scope", config.f1Scope);
        await runCore(args);
        return JSON.parse(await readFile(report, "utf-8")) as EvalReportRecord;
    });
}
