// Trainer reproducibility and export determinism.

import { describe, expect, test } from "vitest";
import { makeBlobs } from "../src/dataset";
import { exportDocument, serializeDocument } from "../src/exportPfa";
import { parseDocument, scoreDocument } from "../src/score";
import {
  classifierAccuracy,
  regressionR2,
  train,
  trainLinear,
  LinearModel,
} from "../src/train";

describe("seed-7 training", () => {
  test("logistic reaches 0.9 accuracy and reproduces byte-identically", () => {
    const first = serializeDocument(exportDocument(train("logistic", 7)));
    const second = serializeDocument(exportDocument(train("logistic", 7)));
    expect(second).toBe(first);
    const acc = classifierAccuracy(train("logistic", 7), makeBlobs(2, 7));
    expect(acc).toBeGreaterThanOrEqual(0.9);
  });

  test("mlp reaches 0.9 accuracy and reproduces byte-identically", () => {
    const first = serializeDocument(exportDocument(train("mlp", 7)));
    const second = serializeDocument(exportDocument(train("mlp", 7)));
    expect(second).toBe(first);
    const acc = classifierAccuracy(train("mlp", 7), makeBlobs(3, 7));
    expect(acc).toBeGreaterThanOrEqual(0.9);
  });

  test("linear recovers the ground-truth fit", () => {
    const model = trainLinear(7) as LinearModel;
    expect(regressionR2(model, 7)).toBeGreaterThanOrEqual(0.9);
    const again = trainLinear(7);
    expect(serializeDocument(exportDocument(again))).toBe(
      serializeDocument(exportDocument(model))
    );
  });

  test("different seeds give different parameters", () => {
    const a = serializeDocument(exportDocument(train("logistic", 7)));
    const b = serializeDocument(exportDocument(train("logistic", 8)));
    expect(b).not.toBe(a);
  });
});

describe("datasets", () => {
  test("blobs are balanced and reproducible", () => {
    const d1 = makeBlobs(3, 7);
    const d2 = makeBlobs(3, 7);
    expect(d1.features).toEqual(d2.features);
    expect(d1.features.length).toBeGreaterThanOrEqual(120);
    const counts = [0, 0, 0];
    for (const label of d1.labels) counts[label]++;
    const per = d1.features.length / 3;
    for (const c of counts) {
      expect(Math.abs(c - per) / per).toBeLessThanOrEqual(0.1);
    }
  });
});

describe("exported documents", () => {
  test("zero-weight logistic scores 0.5 everywhere", () => {
    const doc = exportDocument({ kind: "logistic", weights: [0, 0, 0, 0], bias: 0 });
    const parsed = parseDocument(serializeDocument(doc));
    const out = scoreDocument(parsed, [1.5, -2.0, 0.3, 9.9]) as Record<string, unknown>;
    expect(out["probabilities"]).toEqual([0.5, 0.5]);
    expect(out["prediction"]).toBe(0); // tie resolves to the lowest class
  });

  test("hand-built linear document scores exactly", () => {
    const doc = exportDocument({ kind: "linear", weights: [1, 2, 3, 0], bias: 0.5 });
    const parsed = parseDocument(serializeDocument(doc));
    expect(scoreDocument(parsed, [1, 1, 1, 0])).toBe(6.5);
  });

  test("document names carry the kind and a parameter hash", () => {
    const mlp = exportDocument(train("mlp", 7)) as { name: string };
    expect(mlp.name).toMatch(/^mlpc_[0-9a-f]{12}$/);
    const logistic = exportDocument(train("logistic", 7)) as { name: string };
    expect(logistic.name).toMatch(/^logc_[0-9a-f]{12}$/);
  });
});
