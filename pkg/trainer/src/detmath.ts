// Deterministic binary64 math kernels with a fully pinned evaluation
// order. These intentionally avoid Math.exp/Math.log: engine libm is not
// bit-stable across platforms, and these values feed bit-exact
// comparisons. Algorithms:
//   exp: k = floor(x/ln2 + 1/2); r = x - k*ln2 via a hi/lo split (exact
//        reduction); degree-13 Taylor by Horner; scale by 2^k with
//        single-rounding ldexp semantics.
//   ln:  split into mantissa in [sqrt(1/2), sqrt(2)) and exponent; 13
//        atanh-series terms by Horner; recombine with the same split.
// JS arithmetic (+ - * /) is IEEE-754 binary64 with no FMA contraction,
// so every step here is reproducible bit for bit.

import { bitsToDouble } from "./bits";

export class NumericFault extends Error {}

// Constants pinned by bit pattern, not by decimal literal.
const LN2_HI = bitsToDouble(0x3fe62e42fee00000n);
const LN2_LO = bitsToDouble(0x3dea39ef35793c76n);
const INV_LN2 = bitsToDouble(0x3ff71547652b82fen);
const SQRT_HALF = bitsToDouble(0x3fe6a09e667f3bcdn);
const ONE_MINUS_ULP = bitsToDouble(0x3fefffffffffffffn);

const EXP_COEFFS: number[] = (() => {
  const out: number[] = [];
  let fact = 1;
  for (let n = 0; n < 14; n++) {
    if (n > 0) fact = fact * n; // exact integers below 2^53
    out.push(1 / fact);
  }
  return out;
})();

// 2/(2j+1) for j = 1..12: atanh-series corrections (the leading term is
// carried exactly inside detLn)
const LN_COEFFS: number[] = (() => {
  const out: number[] = [];
  for (let j = 1; j < 13; j++) out.push(2 / (2 * j + 1));
  return out;
})();

const pow2cache = new Map<number, number>();

function pow2(k: number): number {
  // exact for -1074 <= k <= 1023: every step halves or doubles a power
  // of two, which is always representable in that range
  const hit = pow2cache.get(k);
  if (hit !== undefined) return hit;
  let p = 1.0;
  if (k >= 0) {
    for (let i = 0; i < k; i++) p = p * 2.0;
  } else {
    for (let i = 0; i < -k; i++) p = p * 0.5;
  }
  pow2cache.set(k, p);
  return p;
}

function ldexp(m: number, k: number): number {
  // single-rounding scale: the first step is always exact, only the
  // second can round (into subnormals or overflow)
  if (k >= -1021 && k <= 1023) return m * pow2(k);
  if (k > 1023) {
    const r = (m * pow2(1023)) * pow2(k - 1023);
    if (!Number.isFinite(r)) throw new NumericFault("exp overflow");
    return r;
  }
  return (m * pow2(-1021)) * pow2(Math.max(k + 1021, -1074));
}

export function detExp(x: number): number {
  if (Number.isNaN(x) || !Number.isFinite(x)) throw new NumericFault("exp of non-finite");
  if (x > 710.0) throw new NumericFault("exp overflow");
  if (x < -746.0) return 0.0;
  const k = Math.floor(x * INV_LN2 + 0.5);
  const hi = x - k * LN2_HI;
  const r = hi - k * LN2_LO;
  let p = EXP_COEFFS[13];
  for (let n = 12; n >= 0; n--) {
    p = p * r + EXP_COEFFS[n];
  }
  return ldexp(p, k);
}

function frexp(x: number): [number, number] {
  // mantissa in [0.5, 1) and exponent, matching C/Python frexp
  let e = 0;
  if (x !== 0 && Math.abs(x) < 2.2250738585072014e-308) {
    x = x * pow2(63); // exact: lifts subnormals into normal range
    e = -63;
  }
  const bits = doubleRawBits(x);
  const rawExp = Number((bits >> 52n) & 0x7ffn);
  e += rawExp - 1022;
  const mantBits = (bits & 0x800fffffffffffffn) | 0x3fe0000000000000n;
  return [bitsToDouble(mantBits), e];
}

const rawBuf = new DataView(new ArrayBuffer(8));

function doubleRawBits(x: number): bigint {
  rawBuf.setFloat64(0, x, false);
  return rawBuf.getBigUint64(0, false);
}

export function detLn(x: number): number {
  if (Number.isNaN(x) || x <= 0 || !Number.isFinite(x)) throw new NumericFault("ln domain");
  let [m, e] = frexp(x);
  if (m < SQRT_HALF) {
    m = m * 2.0;
    e = e - 1;
  }
  // ln(m) = 2*atanh(s), s = f/(2+f): the lead term rides on the exact
  // f = m-1 (2s = f - s*f); only the small correction r rounds
  const f = m - 1.0;
  const s = f / (2.0 + f);
  const z = s * s;
  let r = LN_COEFFS[11];
  for (let j = 10; j >= 0; j--) {
    r = r * z + LN_COEFFS[j];
  }
  r = r * z;
  const lnm = f - s * (f - r);
  return e * LN2_HI + (lnm + e * LN2_LO);
}

export function detLogit(x: number): number {
  const e = detExp(-x);
  const p = 1.0 / (1.0 + e);
  if (p >= 1.0) return ONE_MINUS_ULP;
  if (p <= 0.0) return 5e-324;
  return p;
}

export function detSoftmax(v: number[]): number[] {
  if (v.length === 0) throw new NumericFault("softmax of empty vector");
  let mx = v[0];
  for (let i = 1; i < v.length; i++) {
    if (!Number.isFinite(v[i])) throw new NumericFault("softmax of non-finite");
    if (v[i] > mx) mx = v[i]; // ties keep the first occurrence
  }
  if (!Number.isFinite(mx)) throw new NumericFault("softmax of non-finite");
  const exps = v.map((x) => detExp(x - mx));
  let s = 0.0;
  for (const e of exps) s = s + e; // left-to-right
  return exps.map((e) => e / s);
}

export function detArgmax(v: number[]): number {
  if (v.length === 0) throw new NumericFault("argmax of empty vector");
  let best = 0;
  for (let i = 0; i < v.length; i++) {
    if (Number.isNaN(v[i])) throw new NumericFault("argmax over NaN");
    if (v[i] > v[best]) best = i; // ties resolve to the lowest index
  }
  return best;
}

export function detRelu(x: number): number {
  return x > 0.0 ? x : 0.0;
}

export function requireFinite(x: number, what: string): number {
  if (!Number.isFinite(x)) throw new NumericFault(what);
  return x;
}
