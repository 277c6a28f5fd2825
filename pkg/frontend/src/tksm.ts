/** Decoder for the packed clip container ("TKSM").
 *
 * Layout: magic "TKSM", u32 LE version, u32 LE n/h/w/c, raw pixel payload,
 * u32 LE provenance length, UTF-8 provenance JSON. Strict: truncation and
 * trailing bytes are errors.
 */

import { ClipBuffer } from "./types";

const MAGIC = "TKSM";
const VERSION = 1;

export function unpackClip(bytes: Uint8Array): ClipBuffer {
    if (bytes.length < 24) {
        throw new Error("clip truncated before header");
    }
    const magic = Buffer.from(bytes.subarray(0, 4)).toString("latin1");
    if (magic !== MAGIC) {
        throw new Error(`bad magic ${JSON.stringify(magic)}`);
    }
    const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
    const version = view.getUint32(4, true);
    if (version !== VERSION) {
        throw new Error(`unsupported clip version ${version}`);
    }
    const n = view.getUint32(8, true);
    const height = view.getUint32(12, true);
    const width = view.getUint32(16, true);
    const channels = view.getUint32(20, true);
    const payloadLength = n * height * width * channels;
    if (bytes.length < 24 + payloadLength + 4) {
        throw new Error(
            `clip declares ${payloadLength} payload bytes but only ` +
                `${bytes.length - 24} follow the header`,
        );
    }
    const data = bytes.subarray(24, 24 + payloadLength);
    const provLength = view.getUint32(24 + payloadLength, true);
    const provEnd = 24 + payloadLength + 4 + provLength;
    if (bytes.length < provEnd) {
        throw new Error("clip truncated inside provenance document");
    }
    if (bytes.length > provEnd) {
        throw new Error(`${bytes.length - provEnd} trailing bytes after clip`);
    }
    const provenance = JSON.parse(
        Buffer.from(bytes.subarray(24 + payloadLength + 4, provEnd)).toString("utf-8"),
    ) as Record<string, unknown>;
    return { n, height, width, channels, data, provenance };
}
