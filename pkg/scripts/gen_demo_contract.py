#!/usr/bin/env python3
"""Assemble the demo scoring contract: the shipped perceptron document
embedded verbatim in contract source, scored on the fixed demo feature
vector on every received transaction.
"""

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

TEMPLATE = """\
// Embedded-model scoring demo: the model document travels with the
// contract source, and inference runs for every received transaction.
const modelJson = '''{model_json}''';

on receive(sender, action, coins, asset, data) {{
    let input = [{input_vector}];
    let model = createModel("PFA", modelJson);
    log(str(input));
    let sc = score(model, input);
    log(str(sc.prediction));
}}
"""


def main():
    model_path = ROOT / "fixtures" / "models" / "mlp_4_5_3_seed7.json"
    demo = json.loads((ROOT / "fixtures" / "oracle" / "demo_vector.json").read_text())
    model_json = model_path.read_text().strip()
    assert "'''" not in model_json
    input_vector = ", ".join(f"{x!r}d" for x in demo["input"])
    source = TEMPLATE.format(model_json=model_json, input_vector=input_vector)

    from ledgerml.qscript import parse_contract

    parse_contract(source)  # deployability gate
    out = ROOT / "fixtures" / "contracts" / "score_demo.qs"
    out.write_text(source)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
