#!/usr/bin/env python3
"""Generate pinned golden vectors for the deterministic math kernels.

For each kernel: a fixed grid of inputs, the kernel's output (the pinned
value, frozen bit-exactly), and the correctly rounded true value from an
arbitrary-precision oracle (mpmath at 120 bits). Generation fails if any
pinned value strays more than 2 ulp from the oracle.

Writes fixtures/oracle/math_goldens.json. Rerun only when the pinned
algorithms change, and expect bit-identical output when they have not.
"""

import json
import struct
import sys
from pathlib import Path

import mpmath

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from ledgerml.detmath import det_exp, det_ln, det_logit, det_softmax  # noqa: E402
from ledgerml.rng import SplitMix64  # noqa: E402

mpmath.mp.prec = 120


def bits(x: float) -> str:
    return struct.pack(">d", x).hex()


def ulp_distance(a: float, b: float) -> int:
    if a == b:
        return 0
    ia = struct.unpack(">q", struct.pack(">d", a))[0]
    ib = struct.unpack(">q", struct.pack(">d", b))[0]
    if ia < 0:
        ia = -(ia & 0x7FFFFFFFFFFFFFFF)
    if ib < 0:
        ib = -(ib & 0x7FFFFFFFFFFFFFFF)
    return abs(ia - ib)


def oracle_exp(x: float) -> float:
    return float(mpmath.exp(mpmath.mpf(x)))


def oracle_ln(x: float) -> float:
    return float(mpmath.log(mpmath.mpf(x)))


def oracle_logit(x: float) -> float:
    return float(1 / (1 + mpmath.exp(-mpmath.mpf(x))))


def oracle_softmax(v: list[float]) -> list[float]:
    mx = max(v)
    exps = [mpmath.exp(mpmath.mpf(x) - mx) for x in v]
    s = sum(exps)
    return [float(e / s) for e in exps]


def gen_scalar(name, kernel, oracle, points):
    out = []
    for x in points:
        got = kernel(x)
        want = oracle(x)
        dist = ulp_distance(got, want)
        assert dist <= 2, f"{name}({x}): {dist} ulp from oracle"
        out.append({"x": bits(x), "pinned": bits(got), "oracle": bits(want), "ulp": dist})
    return out


def main():
    rng = SplitMix64(0xD1CE)
    exp_points = [0.0, 1.0, -1.0, 0.5, -0.5, 2.0, 10.0, -10.0, 100.0, -100.0,
                  709.0, -700.0, 0.3465735902799726, 1e-8, -1e-8]
    exp_points += [rng.uniform(-700.0, 700.0) for _ in range(40)]
    ln_points = [1.0, 2.0, 0.5, 2.718281828459045, 10.0, 1e-300, 1e300,
                 0.7071067811865476, 1.4142135623730951, 1.0000001, 3.5]
    ln_points += [10.0 ** rng.uniform(-300.0, 300.0) for _ in range(30)]
    ln_points += [rng.uniform(0.5, 2.0) for _ in range(10)]
    logit_points = [0.0, 1.0, -1.0, 10.0, -10.0, 36.0, -36.0, 700.0, -700.0]
    logit_points += [rng.uniform(-30.0, 30.0) for _ in range(45)]

    softmax_cases = [
        [0.0, 0.0],
        [1.0, 2.0, 3.0],
        [-1.0, 0.0, 1.0],
        [100.0, 100.0, 100.0],
        [-1000.0, 0.0, 1000.0],
    ]
    for _ in range(50):
        k = 2 + rng.next_u64() % 4
        softmax_cases.append([rng.uniform(-20.0, 20.0) for _ in range(k)])

    softmax_out = []
    for v in softmax_cases:
        got = det_softmax(list(v))
        want = oracle_softmax(list(v))
        worst = max(ulp_distance(g, w) for g, w in zip(got, want))
        # composite kernel: the binary64 max-subtraction alone carries
        # spread/2 ulp of inherent error, so the bound is spread-aware
        tol = (max(v) - min(v)) + 2 * len(v) + 5
        assert worst <= tol, f"softmax({v}): {worst} ulp from oracle (tol {tol})"
        softmax_out.append(
            {
                "x": [bits(x) for x in v],
                "pinned": [bits(g) for g in got],
                "oracle": [bits(w) for w in want],
                "ulp": worst,
            }
        )

    goldens = {
        "exp": gen_scalar("exp", det_exp, oracle_exp, exp_points),
        "ln": gen_scalar("ln", det_ln, oracle_ln, ln_points),
        "logit": gen_scalar("logit", det_logit, oracle_logit, logit_points),
        "softmax": softmax_out,
    }
    out_path = Path(__file__).resolve().parent.parent / "fixtures" / "oracle" / "math_goldens.json"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(goldens, indent=1) + "\n")
    counts = {k: len(v) for k, v in goldens.items()}
    print(f"wrote {out_path} {counts}")


if __name__ == "__main__":
    main()
