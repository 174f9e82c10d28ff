// Seeded toy datasets: Gaussian blobs in four dimensions, two or three
// classes, balanced. Everything derives from the seed.

import { SplitMix64 } from "./rng";

export interface Dataset {
  features: number[][]; // n x 4
  labels: number[]; // class indices
  classes: number;
}

const CENTERS_2 = [
  [-1.0, -0.8, 0.9, 0.6],
  [1.1, 0.9, -0.7, -0.9],
];

const CENTERS_3 = [
  [-1.2, -0.5, 1.0, 0.4],
  [1.3, 0.8, -0.6, -0.8],
  [0.1, 1.4, 1.2, -1.3],
];

const SIGMA = 0.5;
const PER_CLASS = 50;

export function makeBlobs(classes: 2 | 3, seed: number): Dataset {
  const centers = classes === 2 ? CENTERS_2 : CENTERS_3;
  // 2 classes get 75 each, 3 classes get 50 each: n is always 150
  const perClass = classes === 2 ? 75 : PER_CLASS;
  const rng = new SplitMix64(BigInt(seed) * 1000003n + BigInt(classes));
  const features: number[][] = [];
  const labels: number[] = [];
  for (let c = 0; c < classes; c++) {
    for (let i = 0; i < perClass; i++) {
      const row: number[] = [];
      for (let d = 0; d < 4; d++) {
        row.push(centers[c][d] + SIGMA * rng.gauss());
      }
      features.push(row);
      labels.push(c);
    }
  }
  return { features, labels, classes };
}

// Regression data for the linear kind: a fixed ground-truth line plus
// small noise.
export const LINEAR_TRUE_W = [0.8, -1.1, 0.45, 0.3];
export const LINEAR_TRUE_B = 0.25;

export function makeRegression(seed: number): { features: number[][]; targets: number[] } {
  const rng = new SplitMix64(BigInt(seed) * 7777781n + 99n);
  const features: number[][] = [];
  const targets: number[] = [];
  for (let i = 0; i < 150; i++) {
    const row: number[] = [];
    for (let d = 0; d < 4; d++) row.push(rng.uniform(-2.0, 2.0));
    let y = LINEAR_TRUE_B;
    for (let d = 0; d < 4; d++) y = y + LINEAR_TRUE_W[d] * row[d];
    y = y + 0.05 * rng.gauss();
    features.push(row);
    targets.push(y);
  }
  return { features, targets };
}
