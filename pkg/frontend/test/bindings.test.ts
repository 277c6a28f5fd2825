import { execFile } from "node:child_process";
import { mkdtemp, readFile, rm } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { promisify } from "node:util";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import {
    bindEval,
    bindMaterialize,
    bindPlan,
    BoundPlan,
    CoreError,
    ManifestRecord,
} from "../src";

const execFileP = promisify(execFile);
const CORE = process.env.TKSAMPLE_BIN ?? "tksample";

let corpusDir: string;
let records: ManifestRecord[];

beforeAll(async () => {
    corpusDir = await mkdtemp(join(tmpdir(), "tksample-corpus-"));
    await execFileP(CORE, ["synth", "--count", "6", "--seed", "123", "--out-dir", corpusDir]);
    const manifest = await readFile(join(corpusDir, "manifest.jsonl"), "utf-8");
    records = manifest
        .split("\n")
        .filter((l) => l.trim())
        .map((l) => JSON.parse(l) as ManifestRecord);
});

afterAll(async () => {
    await rm(corpusDir, { recursive: true, force: true });
});

describe("bindPlan", () => {
    it("returns one sorted plan for the default config", async () => {
        const plans = await bindPlan(records[0], { frames: 16 });
        expect(plans).toHaveLength(1);
        const plan = plans[0];
        expect(plan.sample_id).toBe(records[0].sample_id);
        expect(plan.n).toBe(16);
        expect(plan.entries).toHaveLength(16);
        const frames = plan.entries.map((e) => e.frame);
        expect(frames).toEqual([...frames].sort((a, b) => a - b));
    });

    it("emits the full TTA plan set", async () => {
        const plans = await bindPlan(records[1], { tta: true });
        expect(plans).toHaveLength(4);
        expect(plans[0].strategy).toBe("action-subset");
        expect(plans.slice(1).map((p) => p.action)).toEqual([
            "MoveDestination",
            "Wait",
            "Place",
        ]);
    });

    it("surfaces core validation messages", async () => {
        await expect(
            bindPlan(records[0], { subset: ["Grasp", "Wait"] }),
        ).rejects.toThrowError(/Grasp/);
        try {
            await bindPlan(records[0], { subset: ["Grasp", "Wait"] });
        } catch (err) {
            expect(err).toBeInstanceOf(CoreError);
            expect((err as CoreError).exitCode).toBe(2);
        }
    });
});

describe("bindMaterialize", () => {
    it("returns an (n,h,w,3) uint8 buffer matching the packed clip bytes", async () => {
        const plans = await bindPlan(records[2], { frames: 8 });
        const clip = await bindMaterialize(plans[0], join(corpusDir, "frames"), {
            size: 32,
        });
        expect([clip.n, clip.height, clip.width, clip.channels]).toEqual([8, 32, 32, 3]);
        expect(clip.data).toBeInstanceOf(Uint8Array);
        expect(clip.data.length).toBe(8 * 32 * 32 * 3);
        expect(clip.provenance["sample_id"]).toBe(records[2].sample_id);

        // independent reference: run the CLI directly and slice the raw payload
        const dir = await mkdtemp(join(tmpdir(), "tksample-ref-"));
        try {
            const plansPath = join(dir, "plans.jsonl");
            const outDir = join(dir, "clips");
            const { writeFile, readdir } = await import("node:fs/promises");
            await writeFile(plansPath, JSON.stringify(plans[0]) + "\n", "utf-8");
            await execFileP(CORE, [
                "materialize", "--plans", plansPath,
                "--source", join(corpusDir, "frames"),
                "--out-dir", outDir, "--size", "32",
            ]);
            const [file] = (await readdir(outDir)).sort();
            const raw = await readFile(join(outDir, file));
            const payload = raw.subarray(24, 24 + 8 * 32 * 32 * 3);
            expect(Buffer.from(clip.data).equals(payload)).toBe(true);
        } finally {
            await rm(dir, { recursive: true, force: true });
        }
    });

    it("propagates missing-source failures", async () => {
        const plans = await bindPlan(records[0], { frames: 8 });
        await expect(
            bindMaterialize(plans[0], join(corpusDir, "missing")),
        ).rejects.toThrowError(/not found|missing/);
    });
});

describe("bindEval", () => {
    it("joins per-action predictions and reports metrics", async () => {
        const truths = records.slice(0, 3);
        const preds = truths.map((t) => ({ sample_id: t.sample_id, label: t.label }));
        const report = await bindEval(truths, preds);
        expect(report.total).toBe(3);
        expect(report.classes).toEqual(["nominal", "open", "deconstruction"]);
        for (const c of report.classes) {
            expect(report.fpr[c]).toBe(0);
        }
    });

    it("averages logit rows under tta", async () => {
        const truths = [records[0]];
        const label = records[0].label;
        const classes = ["nominal", "open", "deconstruction"];
        const hot = classes.indexOf(label);
        const rows = [0, 1].map(() => {
            const logits = [0.1, 0.1, 0.1];
            logits[hot] = 0.8;
            return { sample_id: records[0].sample_id, logits };
        });
        const report = await bindEval(truths, rows, { tta: true });
        expect(report.confusion[hot][hot]).toBe(1);
    });

    it("rejects with the core message when predictions are missing", async () => {
        await expect(bindEval(records.slice(0, 2), [])).rejects.toThrowError(
            /missing predictions/,
        );
    });
});
