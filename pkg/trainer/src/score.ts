// Independent reference scorer: a from-scratch evaluator for the model
// document dialect. Written against docs/model-format.md only; it shares
// no code with the chain engine, so bit-for-bit agreement between the
// two is meaningful evidence rather than an echo.

import {
  detArgmax,
  detExp,
  detLn,
  detLogit,
  detRelu,
  detSoftmax,
  requireFinite,
} from "./detmath";

export type ScoreValue = number | string | boolean | ScoreValue[] | { [k: string]: ScoreValue };

interface Doc {
  input: unknown;
  output: unknown;
  cells: Record<string, { type: unknown; init: ScoreValue }>;
  action: unknown;
}

export function parseDocument(text: string): Doc {
  const root = JSON.parse(text);
  if (typeof root !== "object" || root === null) throw new Error("document must be an object");
  return {
    input: root.input,
    output: root.output,
    cells: root.cells ?? {},
    action: root.action,
  };
}

function isCall(node: Record<string, unknown>, name: string): boolean {
  return Object.keys(node).length === 1 && name in node;
}

export function scoreDocument(doc: Doc, input: ScoreValue): ScoreValue {
  checkAgainstSchema(input, doc.input, "input");
  const cells = new Map<string, ScoreValue>();
  for (const [name, cell] of Object.entries(doc.cells)) {
    cells.set(name, cell.init);
  }
  return evalExpr(doc.action, new Map([["input", input]]), cells);
}

function checkAgainstSchema(value: ScoreValue, schema: unknown, path: string): void {
  if (schema === "double" || schema === "int") {
    if (typeof value !== "number") throw new Error(`${path}: expected number`);
    return;
  }
  if (schema === "string") {
    if (typeof value !== "string") throw new Error(`${path}: expected string`);
    return;
  }
  if (schema === "boolean") {
    if (typeof value !== "boolean") throw new Error(`${path}: expected boolean`);
    return;
  }
  const s = schema as { type?: string; items?: unknown; fields?: { name: string; type: unknown }[] };
  if (s.type === "array") {
    if (!Array.isArray(value)) throw new Error(`${path}: expected array`);
    value.forEach((v, i) => checkAgainstSchema(v, s.items, `${path}[${i}]`));
    return;
  }
  if (s.type === "record") {
    if (typeof value !== "object" || value === null || Array.isArray(value)) {
      throw new Error(`${path}: expected record`);
    }
    for (const f of s.fields ?? []) {
      checkAgainstSchema((value as Record<string, ScoreValue>)[f.name], f.type, `${path}.${f.name}`);
    }
    return;
  }
  throw new Error(`${path}: unsupported schema ${JSON.stringify(schema)}`);
}

function evalExpr(
  node: unknown,
  env: Map<string, ScoreValue>,
  cells: Map<string, ScoreValue>
): ScoreValue {
  if (typeof node === "number" || typeof node === "boolean") return node;
  if (typeof node === "string") {
    const bound = env.get(node);
    if (bound === undefined) throw new Error(`unbound symbol ${node}`);
    return bound;
  }
  if (node === null || typeof node !== "object" || Array.isArray(node)) {
    throw new Error(`bad expression ${JSON.stringify(node)}`);
  }
  const obj = node as Record<string, unknown>;
  if (isCall(obj, "string")) return obj["string"] as string;
  if (isCall(obj, "cell")) {
    const name = obj["cell"] as string;
    const cell = cells.get(name);
    if (cell === undefined) throw new Error(`unknown cell ${name}`);
    return cell;
  }
  if ("let" in obj) {
    const inner = new Map(env);
    for (const [name, bexpr] of Object.entries(obj["let"] as Record<string, unknown>)) {
      inner.set(name, evalExpr(bexpr, inner, cells));
    }
    return evalExpr(obj["in"], inner, cells);
  }
  if ("if" in obj) {
    const cond = evalExpr(obj["if"], env, cells);
    return evalExpr(cond ? obj["then"] : obj["else"], env, cells);
  }
  if ("attr" in obj) {
    let v = evalExpr(obj["attr"], env, cells);
    for (const seg of obj["path"] as (string | number)[]) {
      if (typeof seg === "string") {
        v = (v as Record<string, ScoreValue>)[seg];
      } else {
        v = (v as ScoreValue[])[seg];
      }
      if (v === undefined) throw new Error(`bad attr segment ${seg}`);
    }
    return v;
  }
  if ("new" in obj) {
    const body = obj["new"];
    if (Array.isArray(body)) {
      return body.map((e) => evalExpr(e, env, cells));
    }
    const out: Record<string, ScoreValue> = {};
    const schema = obj["type"] as { fields?: { name: string }[] };
    const order = schema.fields?.map((f) => f.name) ?? Object.keys(body as object);
    for (const name of order) {
      out[name] = evalExpr((body as Record<string, unknown>)[name], env, cells);
    }
    return out;
  }
  const keys = Object.keys(obj);
  if (keys.length !== 1) throw new Error(`bad expression ${JSON.stringify(node)}`);
  const fn = keys[0];
  const args = (obj[fn] as unknown[]).map((a) => evalExpr(a, env, cells));
  return applyBuiltin(fn, args);
}

function nums(v: ScoreValue): number[] {
  return v as number[];
}

function applyBuiltin(fn: string, args: ScoreValue[]): ScoreValue {
  switch (fn) {
    case "+":
      return requireFinite((args[0] as number) + (args[1] as number), "non-finite +");
    case "-":
      return requireFinite((args[0] as number) - (args[1] as number), "non-finite -");
    case "*":
      return requireFinite((args[0] as number) * (args[1] as number), "non-finite *");
    case "/":
      return requireFinite((args[0] as number) / (args[1] as number), "non-finite /");
    case "<":
      return (args[0] as number) < (args[1] as number);
    case "<=":
      return (args[0] as number) <= (args[1] as number);
    case ">":
      return (args[0] as number) > (args[1] as number);
    case ">=":
      return (args[0] as number) >= (args[1] as number);
    case "==":
      return (args[0] as number) === (args[1] as number);
    case "m.exp":
      return detExp(args[0] as number);
    case "m.ln":
      return detLn(args[0] as number);
    case "link.logit":
      return detLogit(args[0] as number);
    case "link.softmax":
      return detSoftmax(nums(args[0]));
    case "a.argmax":
      return detArgmax(nums(args[0]));
    case "cast.double":
      return args[0] as number;
    case "la.dot":
      return laDot(args[0], args[1]);
    case "neural.simpleLayers":
      return simpleLayers(nums(args[0]), args[1] as ScoreValue[]);
    default:
      throw new Error(`unknown builtin ${fn}`);
  }
}

function laDot(a: ScoreValue, b: ScoreValue): ScoreValue {
  const vec = nums(b);
  const rows = a as ScoreValue[];
  if (rows.length > 0 && Array.isArray(rows[0])) {
    return rows.map((row) => dotOne(nums(row), vec));
  }
  return dotOne(nums(a), vec);
}

function dotOne(row: number[], vec: number[]): number {
  if (row.length !== vec.length) throw new Error(`dimension mismatch ${row.length} vs ${vec.length}`);
  let acc = 0.0;
  for (let i = 0; i < row.length; i++) {
    acc = acc + row[i] * vec[i]; // ascending order, no fusing
  }
  return requireFinite(acc, "non-finite dot product");
}

function simpleLayers(input: number[], layers: ScoreValue[]): number[] {
  let current = input;
  for (const layerValue of layers) {
    const layer = layerValue as {
      weights: number[][];
      bias: number[];
      activation: string;
    };
    const pre: number[] = [];
    for (let r = 0; r < layer.weights.length; r++) {
      const acc = dotOne(layer.weights[r], current);
      pre.push(requireFinite(acc + layer.bias[r], "non-finite layer output"));
    }
    if (layer.activation === "logit") {
      current = pre.map(detLogit);
    } else if (layer.activation === "relu") {
      current = pre.map(detRelu);
    } else if (layer.activation === "softmax") {
      current = detSoftmax(pre);
    } else if (layer.activation === "linear") {
      current = pre;
    } else {
      throw new Error(`unknown activation ${layer.activation}`);
    }
  }
  return current;
}
