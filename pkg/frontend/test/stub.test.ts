import { describe, expect, it } from "vitest";
import { PNG } from "pngjs";
import { readFileSync } from "node:fs";
import { join } from "node:path";
import { decodePng } from "../src/png.js";
import { detectObjects, estimateDepth, gridBox, segmentAndMark, slidingWindowDetection } from "../src/stub.js";
import { canonicalJson, stubSeed } from "../src/stubRng.js";

const fixture = JSON.parse(readFileSync(join(__dirname, "parity_fixture.json"), "utf-8"));
const fixtureImage = Buffer.from(fixture.image_base64, "base64");

function syntheticPng(seed: number, width = 10, height = 8): Buffer {
  const png = new PNG({ width, height });
  for (let i = 0; i < width * height; i++) {
    png.data[i * 4] = (seed * 37 + i * 11) % 256;
    png.data[i * 4 + 1] = (seed * 91 + i * 7) % 256;
    png.data[i * 4 + 2] = (seed * 53 + i * 3) % 256;
    png.data[i * 4 + 3] = 255;
  }
  return PNG.sync.write(png);
}

describe("stub determinism", () => {
  it("same image bytes give identical responses across 50 fixtures", () => {
    for (let seed = 0; seed < 50; seed++) {
      const image = syntheticPng(seed);
      const first = detectObjects(image, "thing", 0);
      const second = detectObjects(Buffer.from(image), "thing", 0);
      expect(second).toEqual(first);
    }
  });

  it("different params give different outputs", () => {
    const image = syntheticPng(3);
    expect(detectObjects(image, "cat", 0)).not.toEqual(detectObjects(image, "dog", 0));
  });

  it("scores stay within [0, 1] across a fixture sweep", () => {
    for (let seed = 0; seed < 50; seed++) {
      const image = syntheticPng(seed, 15, 11);
      for (const det of [...detectObjects(image, "q", 0), ...slidingWindowDetection(image, "q")]) {
        expect(det.score).toBeGreaterThanOrEqual(0);
        expect(det.score).toBeLessThanOrEqual(1);
        const [left, top, right, bottom] = det.box;
        expect(left).toBeGreaterThanOrEqual(0);
        expect(top).toBeGreaterThanOrEqual(0);
        expect(right).toBeLessThanOrEqual(15);
        expect(bottom).toBeLessThanOrEqual(11);
        expect(left).toBeLessThan(right);
        expect(top).toBeLessThan(bottom);
      }
    }
  });
});

describe("cross-implementation parity (shared fixture)", () => {
  it("reproduces the pinned seeds", () => {
    expect(
      stubSeed("detect_objects", fixtureImage, fixture.detect_objects.params).toString(),
    ).toBe(fixture.seeds.detect_objects);
    expect(stubSeed("estimate_depth", fixtureImage, {}).toString()).toBe(fixture.seeds.estimate_depth);
  });

  it("detect_objects matches the client stub exactly", () => {
    const result = detectObjects(
      fixtureImage,
      fixture.detect_objects.params.query,
      fixture.detect_objects.params.threshold,
    );
    expect(result).toEqual(fixture.detect_objects.expected);
  });

  it("sliding_window_detection matches the client stub exactly", () => {
    const result = slidingWindowDetection(fixtureImage, fixture.sliding_window_detection.params.query);
    expect(result).toEqual(fixture.sliding_window_detection.expected);
  });

  it("segment_and_mark regions match the client stub exactly", () => {
    const { regions } = segmentAndMark(
      fixtureImage,
      fixture.segment_and_mark.params.granularity,
      fixture.segment_and_mark.params.mark_type,
    );
    expect(regions).toEqual(fixture.segment_and_mark.expected_regions);
  });

  it("estimate_depth ramp matches the client stub exactly", () => {
    const depth = decodePng(estimateDepth(fixtureImage));
    const row0 = [...Array(depth.width).keys()].map((x) => depth.data[x * 4]);
    const col0 = [...Array(depth.height).keys()].map((y) => depth.data[y * depth.width * 4]);
    expect(row0).toEqual(fixture.estimate_depth.expected_row0);
    expect(col0).toEqual(fixture.estimate_depth.expected_col0);
  });
});

describe("shapes", () => {
  it.each([
    [8, 8],
    [30, 17],
    [5, 40],
  ])("depth map of a %dx%d image keeps the dimensions", (width, height) => {
    const depth = decodePng(estimateDepth(syntheticPng(1, width, height)));
    expect([depth.width, depth.height]).toEqual([width, height]);
    // single-channel content: R == G == B everywhere
    for (let i = 0; i < depth.width * depth.height; i++) {
      expect(depth.data[i * 4]).toBe(depth.data[i * 4 + 1]);
      expect(depth.data[i * 4]).toBe(depth.data[i * 4 + 2]);
    }
  });

  it("sliding window returns one detection per grid cell", () => {
    const image = syntheticPng(5, 12, 9);
    const result = slidingWindowDetection(image, "q");
    expect(result.map((d) => d.box)).toEqual([...Array(9).keys()].map((c) => gridBox(12, 9, c)));
  });

  it("segment_and_mark letter marks", () => {
    const { regions } = segmentAndMark(syntheticPng(6), 1, "letter");
    expect(regions.map((r) => r.mark)).toEqual(["A", "B", "C"]);
  });
});

describe("canonical json", () => {
  it("sorts keys and drops whitespace", () => {
    expect(canonicalJson({ b: 1, a: { d: 2, c: [3, 4] } })).toBe('{"a":{"c":[3,4],"d":2},"b":1}');
  });

  it("integral numbers serialize without a decimal point", () => {
    expect(canonicalJson({ threshold: 0.0 })).toBe('{"threshold":0}');
    expect(canonicalJson({ threshold: 0.3 })).toBe('{"threshold":0.3}');
  });
});
