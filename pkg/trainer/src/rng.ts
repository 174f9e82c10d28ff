// splitmix64, the pinned PRNG shared by every seeded artifact in this
// repo. BigInt keeps the 64-bit wrap-around exact.

const MASK = (1n << 64n) - 1n;

export class SplitMix64 {
  private state: bigint;

  constructor(seed: number | bigint) {
    this.state = BigInt(seed) & MASK;
  }

  nextU64(): bigint {
    this.state = (this.state + 0x9e3779b97f4a7c15n) & MASK;
    let z = this.state;
    z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK;
    z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK;
    return z ^ (z >> 31n);
  }

  // uniform double in [lo, hi) from the top 53 bits
  uniform(lo: number, hi: number): number {
    const u = Number(this.nextU64() >> 11n);
    return lo + (hi - lo) * (u * 2 ** -53);
  }

  // Irwin-Hall approximation of a standard normal: the sum of twelve
  // uniforms minus six. Needs no transcendentals, so it is exactly
  // reproducible on every engine.
  gauss(): number {
    let s = 0.0;
    for (let i = 0; i < 12; i++) {
      s = s + this.uniform(0.0, 1.0);
    }
    return s - 6.0;
  }
}
