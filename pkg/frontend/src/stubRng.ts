import { createHash } from "node:crypto";

// 64-bit LCG shared with the Python client's stub; see docs/formats.md.
const MUL = 6364136223846793005n;
const INC = 1442695040888963407n;
const MASK = (1n << 64n) - 1n;

export class StubRng {
  private state: bigint;

  constructor(seed: bigint) {
    this.state = seed & MASK;
  }

  next(): bigint {
    this.state = (this.state * MUL + INC) & MASK;
    return this.state >> 33n;
  }

  nextBelow(bound: number): number {
    return Number(this.next() % BigInt(bound));
  }
}

/** Canonical JSON: sorted keys, no whitespace (matches Python's json.dumps sort_keys). */
export function canonicalJson(value: unknown): string {
  if (value === null || typeof value !== "object") {
    return JSON.stringify(value);
  }
  if (Array.isArray(value)) {
    return "[" + value.map(canonicalJson).join(",") + "]";
  }
  const entries = Object.entries(value as Record<string, unknown>).sort(([a], [b]) =>
    a < b ? -1 : a > b ? 1 : 0,
  );
  return "{" + entries.map(([k, v]) => JSON.stringify(k) + ":" + canonicalJson(v)).join(",") + "}";
}

/** seed = first 8 bytes (big-endian) of sha256(tool \0 imageBytes \0 canonicalJson(params)). */
export function stubSeed(tool: string, imageBytes: Buffer, params: Record<string, unknown>): bigint {
  const hash = createHash("sha256");
  hash.update(tool);
  hash.update(Buffer.from([0]));
  hash.update(imageBytes);
  hash.update(Buffer.from([0]));
  hash.update(canonicalJson(params));
  return hash.digest().readBigUInt64BE(0);
}
