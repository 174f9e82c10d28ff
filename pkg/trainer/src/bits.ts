// Float64 bit-pattern helpers. Scores are compared as hex bit patterns,
// never as formatted decimals, so formatting differences can never mask
// a mismatch.

const buf = new DataView(new ArrayBuffer(8));

export function doubleToHex(x: number): string {
  buf.setFloat64(0, x, false);
  let out = "";
  for (let i = 0; i < 8; i++) {
    out += buf.getUint8(i).toString(16).padStart(2, "0");
  }
  return out;
}

export function hexToDouble(hex: string): number {
  if (hex.length !== 16) throw new Error(`bad float hex ${hex}`);
  for (let i = 0; i < 8; i++) {
    buf.setUint8(i, parseInt(hex.slice(2 * i, 2 * i + 2), 16));
  }
  return buf.getFloat64(0, false);
}

export function doubleBits(x: number): bigint {
  buf.setFloat64(0, x, false);
  return buf.getBigUint64(0, false);
}

export function bitsToDouble(bits: bigint): number {
  buf.setBigUint64(0, bits, false);
  return buf.getFloat64(0, false);
}
