// Trainer command line:
//   train --kind logistic|mlp|linear --seed N --out doc.json
//   score --model doc.json --input "a,b,c,d" [--hex]
//   gen-fixtures --out <fixtures dir> [--seed N]
//
// gen-fixtures writes the committed cross-component goldens: exported
// documents, 1000-point score grids (hex bit patterns), and the demo
// vector record.

import { readFileSync, writeFileSync, mkdirSync } from "fs";
import { join } from "path";
import { doubleToHex } from "./bits";
import { exportDocument, serializeDocument } from "./exportPfa";
import { parseDocument, scoreDocument, ScoreValue } from "./score";
import { train, ModelKind } from "./train";
import { SplitMix64 } from "./rng";

export const DEMO_INPUT = [-0.166667, 0.416667, -0.0169491, -0.0833333];
const GRID_POINTS = 1000;
const KINDS: ModelKind[] = ["linear", "logistic", "mlp"];

function parseArgs(argv: string[]): { cmd: string; opts: Map<string, string> } {
  const [cmd, ...rest] = argv;
  const opts = new Map<string, string>();
  for (let i = 0; i < rest.length; i++) {
    const a = rest[i];
    if (!a.startsWith("--")) throw new Error(`unexpected argument ${a}`);
    const name = a.slice(2);
    if (i + 1 < rest.length && !rest[i + 1].startsWith("--")) {
      opts.set(name, rest[++i]);
    } else {
      opts.set(name, "true");
    }
  }
  return { cmd, opts };
}

function need(opts: Map<string, string>, name: string): string {
  const v = opts.get(name);
  if (v === undefined) throw new Error(`missing --${name}`);
  return v;
}

export function outputHex(value: ScoreValue): ScoreValue {
  if (typeof value === "number") return doubleToHex(value);
  if (Array.isArray(value)) return value.map(outputHex);
  if (typeof value === "object" && value !== null) {
    const out: Record<string, ScoreValue> = {};
    for (const k of Object.keys(value).sort()) {
      out[k] = outputHex((value as Record<string, ScoreValue>)[k]);
    }
    return out;
  }
  return value;
}

export function gridInputs(kind: ModelKind, seed: number): number[][] {
  const rng = new SplitMix64(BigInt(seed) * 424243n + BigInt(KINDS.indexOf(kind)));
  const rows: number[][] = [];
  for (let i = 0; i < GRID_POINTS; i++) {
    const row: number[] = [];
    for (let d = 0; d < 4; d++) row.push(rng.uniform(-3.0, 3.0));
    rows.push(row);
  }
  return rows;
}

function cmdTrain(opts: Map<string, string>): void {
  const kind = need(opts, "kind") as ModelKind;
  if (!KINDS.includes(kind)) throw new Error(`unknown kind ${kind}`);
  const seed = parseInt(need(opts, "seed"), 10);
  const model = train(kind, seed);
  const text = serializeDocument(exportDocument(model));
  const out = need(opts, "out");
  writeFileSync(out, text);
  console.log(`wrote ${out}`);
}

function cmdScore(opts: Map<string, string>): void {
  const doc = parseDocument(readFileSync(need(opts, "model"), "utf-8"));
  const fields = need(opts, "input")
    .split(",")
    .map((s) => {
      const v = parseFloat(s);
      if (Number.isNaN(v)) throw new Error(`bad input field ${s}`);
      return v;
    });
  const input: ScoreValue = doc.input === "double" ? fields[0] : fields;
  const result = scoreDocument(doc, input);
  if (opts.get("hex") === "true") {
    console.log(JSON.stringify(outputHex(result)));
  } else {
    console.log(JSON.stringify(result));
  }
}

function cmdGenFixtures(opts: Map<string, string>): void {
  const outDir = need(opts, "out");
  const seed = parseInt(opts.get("seed") ?? "7", 10);
  mkdirSync(join(outDir, "models"), { recursive: true });
  mkdirSync(join(outDir, "oracle"), { recursive: true });

  const fileNames: Record<ModelKind, string> = {
    linear: `linear_seed${seed}.json`,
    logistic: `logistic_seed${seed}.json`,
    mlp: `mlp_4_5_3_seed${seed}.json`,
  };

  for (const kind of KINDS) {
    const model = train(kind, seed);
    const docText = serializeDocument(exportDocument(model));
    const docPath = join(outDir, "models", fileNames[kind]);
    writeFileSync(docPath, docText);

    const doc = parseDocument(docText);
    const inputs = gridInputs(kind, seed);
    const outputs = inputs.map((row) => outputHex(scoreDocument(doc, row)));
    const grid = {
      model: fileNames[kind],
      seed,
      points: inputs.length,
      inputs,
      outputsHex: outputs,
    };
    writeFileSync(
      join(outDir, "oracle", `grid_${kind}_seed${seed}.json`),
      JSON.stringify(grid, null, 1) + "\n"
    );
    console.log(`wrote ${fileNames[kind]} and its ${inputs.length}-point grid`);
  }

  // the demo vector scored by the shipped perceptron
  const mlpText = readFileSync(join(outDir, "models", fileNames.mlp), "utf-8");
  const demoResult = scoreDocument(parseDocument(mlpText), DEMO_INPUT) as Record<
    string,
    ScoreValue
  >;
  const demo = {
    model: fileNames.mlp,
    input: DEMO_INPUT,
    prediction: demoResult["prediction"],
    predictionHex: doubleToHex(demoResult["prediction"] as number),
    probabilitiesHex: (demoResult["probabilities"] as number[]).map(doubleToHex),
  };
  writeFileSync(join(outDir, "oracle", "demo_vector.json"), JSON.stringify(demo, null, 1) + "\n");
  console.log(`demo prediction: ${demo.prediction} (${demo.predictionHex})`);
}

function main(): void {
  const { cmd, opts } = parseArgs(process.argv.slice(2));
  if (cmd === "train") cmdTrain(opts);
  else if (cmd === "score") cmdScore(opts);
  else if (cmd === "gen-fixtures") cmdGenFixtures(opts);
  else {
    console.error("usage: cli.js train|score|gen-fixtures ...");
    process.exit(2);
  }
}

if (require.main === module) {
  try {
    main();
  } catch (e) {
    console.error(`error: ${(e as Error).message}`);
    process.exit(1);
  }
}
