// The scoring kernels must agree bit-for-bit with the chain engine's
// pinned golden vectors: both implementations pin the same algorithm, so
// a single differing bit anywhere is a real defect.

import { readFileSync } from "fs";
import { join } from "path";
import { describe, expect, test } from "vitest";
import { doubleToHex, hexToDouble } from "../src/bits";
import { detExp, detLn, detLogit, detSoftmax, detArgmax, NumericFault } from "../src/detmath";

const goldens = JSON.parse(
  readFileSync(join(__dirname, "..", "..", "fixtures", "oracle", "math_goldens.json"), "utf-8")
);

describe("golden vector agreement", () => {
  test("exp", () => {
    expect(goldens.exp.length).toBeGreaterThanOrEqual(50);
    for (const c of goldens.exp) {
      expect(doubleToHex(detExp(hexToDouble(c.x)))).toBe(c.pinned);
    }
  });

  test("ln", () => {
    expect(goldens.ln.length).toBeGreaterThanOrEqual(50);
    for (const c of goldens.ln) {
      expect(doubleToHex(detLn(hexToDouble(c.x)))).toBe(c.pinned);
    }
  });

  test("logit", () => {
    for (const c of goldens.logit) {
      expect(doubleToHex(detLogit(hexToDouble(c.x)))).toBe(c.pinned);
    }
  });

  test("softmax", () => {
    for (const c of goldens.softmax) {
      const got = detSoftmax(c.x.map(hexToDouble));
      expect(got.map(doubleToHex)).toEqual(c.pinned);
    }
  });
});

describe("kernel edge behavior", () => {
  test("exp edges", () => {
    expect(detExp(0)).toBe(1);
    expect(detExp(-800)).toBe(0);
    expect(() => detExp(711)).toThrow(NumericFault);
    expect(() => detExp(NaN)).toThrow(NumericFault);
  });

  test("ln edges", () => {
    expect(detLn(1)).toBe(0);
    expect(() => detLn(0)).toThrow(NumericFault);
    expect(() => detLn(-1)).toThrow(NumericFault);
    expect(detLn(5e-324)).toBeLessThan(-744); // subnormal domain works
  });

  test("logit edges", () => {
    expect(detLogit(0)).toBe(0.5);
    expect(detLogit(1000)).toBe(hexToDouble("3fefffffffffffff")); // open interval clamp
    expect(() => detLogit(-800)).toThrow(NumericFault);
  });

  test("argmax ties to lowest index", () => {
    expect(detArgmax([0.5, 0.5])).toBe(0);
    expect(detArgmax([0.1, 0.7, 0.2])).toBe(1);
  });

  test("softmax of equal inputs", () => {
    expect(detSoftmax([0, 0])).toEqual([0.5, 0.5]);
  });
});
