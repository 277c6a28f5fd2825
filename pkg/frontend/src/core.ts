/** Process plumbing for the core CLI. Bindings marshal, never re-implement. */

import { execFile } from "node:child_process";

/** Core failure surfaced with the CLI's own message text. */
export class CoreError extends Error {
    constructor(message: string, readonly exitCode: number) {
        super(message);
        this.name = "CoreError";
    }
}

export function coreBinary(): string {
    return process.env.TKSAMPLE_BIN ?? "tksample";
}

export function runCore(args: string[]): Promise<string> {
    return new Promise((resolve, reject) => {
        execFile(
            coreBinary(),
            args,
            { maxBuffer: 256 * 1024 * 1024 },
            (error, stdout, stderr) => {
                if (error === null) {
                    resolve(stdout);
                    return;
                }
                const code =
                    typeof (error as { code?: unknown }).code === "number"
                        ? ((error as { code?: number }).code as number)
                        : 1;
                const message = stderr.trim() || error.message;
                reject(new CoreError(message, code));
            },
        );
    });
}

export function parseJsonLines<T>(text: string): T[] {
    return text
        .split("\n")
        .filter((line) => line.trim().length > 0)
        .map((line) => JSON.parse(line) as T);
}
