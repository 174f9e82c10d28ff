// Export trained models as model documents in the restricted PFA
// dialect the chain engine accepts. Serialization is deterministic:
// recursively sorted object keys and the engine's native shortest
// round-trip number formatting. Document names carry the model kind and
// a parameter-hash prefix.

import { createHash } from "crypto";
import { TrainedModel } from "./train";

const SCORE_RESULT_TYPE = {
  type: "record",
  name: "ScoreResult",
  fields: [
    { name: "prediction", type: "double" },
    { name: "probabilities", type: { type: "array", items: "double" } },
  ],
};

const VEC = { type: "array", items: "double" };
const MAT = { type: "array", items: VEC };

const LAYER_TYPE = {
  type: "record",
  name: "Layer",
  fields: [
    { name: "weights", type: MAT },
    { name: "bias", type: VEC },
    { name: "activation", type: "string" },
  ],
};

function sortKeysDeep(node: unknown): unknown {
  if (Array.isArray(node)) return node.map(sortKeysDeep);
  if (node !== null && typeof node === "object") {
    const out: Record<string, unknown> = {};
    for (const key of Object.keys(node as object).sort()) {
      out[key] = sortKeysDeep((node as Record<string, unknown>)[key]);
    }
    return out;
  }
  return node;
}

export function serializeDocument(doc: object): string {
  return JSON.stringify(sortKeysDeep(doc), null, 1) + "\n";
}

function paramHash(params: unknown): string {
  const h = createHash("sha256");
  h.update(JSON.stringify(sortKeysDeep(params)));
  return h.digest("hex").slice(0, 12);
}

function classifierAction(logitOrLayers: object): object {
  // shared tail: probabilities plus lowest-index argmax as prediction
  return {
    let: { probs: logitOrLayers },
    in: {
      new: {
        prediction: { "cast.double": [{ "a.argmax": ["probs"] }] },
        probabilities: "probs",
      },
      type: SCORE_RESULT_TYPE,
    },
  };
}

export function exportDocument(model: TrainedModel): object {
  if (model.kind === "linear") {
    return {
      name: `linr_${paramHash([model.weights, model.bias])}`,
      version: 1,
      doc: "four-feature linear regressor, full-batch gradient descent",
      input: VEC,
      output: "double",
      cells: {
        weights: { type: VEC, init: model.weights },
        bias: { type: "double", init: model.bias },
      },
      action: { "+": [{ "la.dot": [{ cell: "weights" }, "input"] }, { cell: "bias" }] },
    };
  }
  if (model.kind === "logistic") {
    return {
      name: `logc_${paramHash([model.weights, model.bias])}`,
      version: 1,
      doc: "binary logistic classifier over four features",
      input: VEC,
      output: SCORE_RESULT_TYPE,
      cells: {
        weights: { type: VEC, init: model.weights },
        bias: { type: "double", init: model.bias },
      },
      action: {
        let: {
          p: {
            "link.logit": [
              { "+": [{ "la.dot": [{ cell: "weights" }, "input"] }, { cell: "bias" }] },
            ],
          },
        },
        in: classifierAction({
          new: [{ "-": [1, "p"] }, "p"],
          type: VEC,
        }) as object,
      },
    };
  }
  // mlp 4-5-3: logit hidden layer, softmax output layer
  const layers = [
    { weights: model.w1, bias: model.b1, activation: "logit" },
    { weights: model.w2, bias: model.b2, activation: "softmax" },
  ];
  return {
    name: `mlpc_${paramHash(layers)}`,
    version: 1,
    doc: "4-5-3 multilayer perceptron classifier",
    input: VEC,
    output: SCORE_RESULT_TYPE,
    cells: {
      layers: { type: { type: "array", items: LAYER_TYPE }, init: layers },
    },
    action: classifierAction({ "neural.simpleLayers": ["input", { cell: "layers" }] }),
  };
}
