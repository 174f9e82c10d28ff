// Hand-rolled full-batch gradient descent: fixed 500 epochs, fixed
// learning rate 0.1, seed-derived initialization. No framework, so the
// resulting parameters are bit-reproducible and safe to pin as goldens.

import { Dataset, makeBlobs, makeRegression } from "./dataset";
import { detLogit, detSoftmax, detArgmax, requireFinite } from "./detmath";
import { SplitMix64 } from "./rng";

export const EPOCHS = 500;
export const LEARNING_RATE = 0.1;

export type ModelKind = "logistic" | "mlp" | "linear";

export interface LogisticModel {
  kind: "logistic";
  weights: number[]; // 4
  bias: number;
}

export interface MlpModel {
  kind: "mlp";
  w1: number[][]; // 5 x 4
  b1: number[]; // 5
  w2: number[][]; // 3 x 5
  b2: number[]; // 3
}

export interface LinearModel {
  kind: "linear";
  weights: number[]; // 4
  bias: number;
}

export type TrainedModel = LogisticModel | MlpModel | LinearModel;

export class NonFiniteLoss extends Error {}

function initVec(n: number, rng: SplitMix64): number[] {
  const out: number[] = [];
  for (let i = 0; i < n; i++) out.push(rng.uniform(-0.5, 0.5));
  return out;
}

function initMat(rows: number, cols: number, rng: SplitMix64): number[][] {
  const out: number[][] = [];
  for (let r = 0; r < rows; r++) out.push(initVec(cols, rng));
  return out;
}

function dot(w: number[], x: number[]): number {
  let acc = 0.0;
  for (let i = 0; i < w.length; i++) acc = acc + w[i] * x[i];
  return acc;
}

export function trainLogistic(data: Dataset, seed: number): LogisticModel {
  if (data.classes !== 2) throw new Error("logistic expects 2 classes");
  const rng = new SplitMix64(BigInt(seed) * 31n + 1n);
  const w = initVec(4, rng);
  let b = rng.uniform(-0.5, 0.5);
  const n = data.features.length;
  for (let epoch = 0; epoch < EPOCHS; epoch++) {
    const gw = [0.0, 0.0, 0.0, 0.0];
    let gb = 0.0;
    for (let i = 0; i < n; i++) {
      const x = data.features[i];
      const p = detLogit(dot(w, x) + b);
      const err = p - data.labels[i];
      for (let d = 0; d < 4; d++) gw[d] = gw[d] + err * x[d];
      gb = gb + err;
    }
    for (let d = 0; d < 4; d++) {
      w[d] = requireFinite(w[d] - (LEARNING_RATE * gw[d]) / n, "non-finite weight");
    }
    b = requireFinite(b - (LEARNING_RATE * gb) / n, "non-finite bias");
  }
  return { kind: "logistic", weights: w, bias: b };
}

export function trainMlp(data: Dataset, seed: number): MlpModel {
  if (data.classes !== 3) throw new Error("mlp expects 3 classes");
  const rng = new SplitMix64(BigInt(seed) * 31n + 2n);
  const HID = 5;
  const OUT = 3;
  const w1 = initMat(HID, 4, rng);
  const b1 = initVec(HID, rng);
  const w2 = initMat(OUT, HID, rng);
  const b2 = initVec(OUT, rng);
  const n = data.features.length;

  for (let epoch = 0; epoch < EPOCHS; epoch++) {
    const gw1 = w1.map((row) => row.map(() => 0.0));
    const gb1 = b1.map(() => 0.0);
    const gw2 = w2.map((row) => row.map(() => 0.0));
    const gb2 = b2.map(() => 0.0);
    for (let i = 0; i < n; i++) {
      const x = data.features[i];
      const a1: number[] = [];
      for (let h = 0; h < HID; h++) a1.push(detLogit(dot(w1[h], x) + b1[h]));
      const z2: number[] = [];
      for (let o = 0; o < OUT; o++) z2.push(dot(w2[o], a1) + b2[o]);
      const p = detSoftmax(z2);
      const dz2: number[] = [];
      for (let o = 0; o < OUT; o++) dz2.push(p[o] - (data.labels[i] === o ? 1.0 : 0.0));
      for (let o = 0; o < OUT; o++) {
        for (let h = 0; h < HID; h++) gw2[o][h] = gw2[o][h] + dz2[o] * a1[h];
        gb2[o] = gb2[o] + dz2[o];
      }
      for (let h = 0; h < HID; h++) {
        let da1 = 0.0;
        for (let o = 0; o < OUT; o++) da1 = da1 + w2[o][h] * dz2[o];
        const dz1 = da1 * a1[h] * (1.0 - a1[h]);
        for (let d = 0; d < 4; d++) gw1[h][d] = gw1[h][d] + dz1 * x[d];
        gb1[h] = gb1[h] + dz1;
      }
    }
    for (let h = 0; h < HID; h++) {
      for (let d = 0; d < 4; d++) {
        w1[h][d] = requireFinite(w1[h][d] - (LEARNING_RATE * gw1[h][d]) / n, "non-finite weight");
      }
      b1[h] = requireFinite(b1[h] - (LEARNING_RATE * gb1[h]) / n, "non-finite bias");
    }
    for (let o = 0; o < OUT; o++) {
      for (let h = 0; h < HID; h++) {
        w2[o][h] = requireFinite(w2[o][h] - (LEARNING_RATE * gw2[o][h]) / n, "non-finite weight");
      }
      b2[o] = requireFinite(b2[o] - (LEARNING_RATE * gb2[o]) / n, "non-finite bias");
    }
  }
  return { kind: "mlp", w1, b1, w2, b2 };
}

export function trainLinear(seed: number): LinearModel {
  const { features, targets } = makeRegression(seed);
  const rng = new SplitMix64(BigInt(seed) * 31n + 3n);
  const w = initVec(4, rng);
  let b = rng.uniform(-0.5, 0.5);
  const n = features.length;
  for (let epoch = 0; epoch < EPOCHS; epoch++) {
    const gw = [0.0, 0.0, 0.0, 0.0];
    let gb = 0.0;
    for (let i = 0; i < n; i++) {
      const err = dot(w, features[i]) + b - targets[i];
      for (let d = 0; d < 4; d++) gw[d] = gw[d] + err * features[i][d];
      gb = gb + err;
    }
    for (let d = 0; d < 4; d++) {
      w[d] = requireFinite(w[d] - (LEARNING_RATE * gw[d]) / n, "non-finite weight");
    }
    b = requireFinite(b - (LEARNING_RATE * gb) / n, "non-finite bias");
  }
  return { kind: "linear", weights: w, bias: b };
}

export function train(kind: ModelKind, seed: number): TrainedModel {
  if (kind === "logistic") return trainLogistic(makeBlobs(2, seed), seed);
  if (kind === "mlp") return trainMlp(makeBlobs(3, seed), seed);
  return trainLinear(seed);
}

export function classifierAccuracy(model: TrainedModel, data: Dataset): number {
  let hits = 0;
  for (let i = 0; i < data.features.length; i++) {
    const x = data.features[i];
    let pred: number;
    if (model.kind === "logistic") {
      const p = detLogit(dot(model.weights, x) + model.bias);
      pred = detArgmax([1.0 - p, p]);
    } else if (model.kind === "mlp") {
      const a1 = model.w1.map((row, h) => detLogit(dot(row, x) + model.b1[h]));
      const z2 = model.w2.map((row, o) => dot(row, a1) + model.b2[o]);
      pred = detArgmax(detSoftmax(z2));
    } else {
      throw new Error("accuracy is for classifiers");
    }
    if (pred === data.labels[i]) hits++;
  }
  return hits / data.features.length;
}

export function regressionR2(model: LinearModel, seed: number): number {
  const { features, targets } = makeRegression(seed);
  const mean = targets.reduce((a, b) => a + b, 0) / targets.length;
  let ssRes = 0.0;
  let ssTot = 0.0;
  for (let i = 0; i < features.length; i++) {
    const err = dot(model.weights, features[i]) + model.bias - targets[i];
    ssRes += err * err;
    const dm = targets[i] - mean;
    ssTot += dm * dm;
  }
  return 1.0 - ssRes / ssTot;
}
