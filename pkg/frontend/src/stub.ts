import { clonePixels, decodePng, drawBoxOutline, encodePng, grayImage, RgbImage } from "./png.js";
import { StubRng, stubSeed } from "./stubRng.js";

export interface Detection {
  box: [number, number, number, number];
  label: string;
  score: number;
}

export interface Region {
  mark: string;
  box: [number, number, number, number];
}

/** Cell `cell` (0..8) of a 3x3 grid over a width x height image. */
export function gridBox(width: number, height: number, cell: number): [number, number, number, number] {
  const col = cell % 3;
  const row = Math.floor(cell / 3);
  const xs = [0, Math.floor(width / 3), Math.floor((2 * width) / 3), width];
  const ys = [0, Math.floor(height / 3), Math.floor((2 * height) / 3), height];
  return [xs[col], ys[row], xs[col + 1], ys[row + 1]];
}

export function detectObjects(imageBytes: Buffer, query: string, threshold: number): Detection[] {
  const params: Record<string, unknown> = { query, threshold };
  const rng = new StubRng(stubSeed("detect_objects", imageBytes, params));
  const { width, height } = decodePng(imageBytes);
  const detections: Detection[] = [];
  for (let i = 0; i < 3; i++) {
    const cell = rng.nextBelow(9);
    const score = rng.nextBelow(1000) / 999;
    if (score < threshold) continue;
    detections.push({ box: gridBox(width, height, cell), label: query, score });
  }
  return detections;
}

export function slidingWindowDetection(imageBytes: Buffer, query: string): Detection[] {
  const rng = new StubRng(stubSeed("sliding_window_detection", imageBytes, { query }));
  const { width, height } = decodePng(imageBytes);
  const detections: Detection[] = [];
  for (let cell = 0; cell < 9; cell++) {
    detections.push({ box: gridBox(width, height, cell), label: query, score: rng.nextBelow(1000) / 999 });
  }
  return detections;
}

export function segmentAndMark(
  imageBytes: Buffer,
  granularity: number,
  markType: "number" | "letter",
): { image: Buffer; regions: Region[] } {
  const params = { granularity, mark_type: markType };
  const rng = new StubRng(stubSeed("segment_and_mark", imageBytes, params));
  const source = decodePng(imageBytes);
  const color: [number, number, number] = [rng.nextBelow(256), rng.nextBelow(256), rng.nextBelow(256)];
  const annotated: RgbImage = clonePixels(source);
  const regions: Region[] = [];
  const cells = Math.min(9, 3 * granularity);
  for (let index = 0; index < cells; index++) {
    const box = gridBox(source.width, source.height, index % 9);
    drawBoxOutline(annotated, box, color);
    const mark = markType === "number" ? String(index + 1) : String.fromCharCode(65 + index);
    regions.push({ mark, box });
  }
  return { image: encodePng(annotated), regions };
}

export function estimateDepth(imageBytes: Buffer): Buffer {
  const rng = new StubRng(stubSeed("estimate_depth", imageBytes, {}));
  const { width, height } = decodePng(imageBytes);
  const horizontal = rng.nextBelow(2) === 0;
  // Evenly spaced 0..255 ramp, truncated to integers (matches the client stub).
  const ramp = (i: number, n: number) => (n <= 1 ? 0 : Math.floor((255 * i) / (n - 1)));
  const image = horizontal
    ? grayImage(width, height, (x) => ramp(x, width))
    : grayImage(width, height, (_x, y) => ramp(y, height));
  return encodePng(image);
}
