/**
 * Deterministic counter-based generator (splitmix64 over BigInt).
 *
 * output(i) = mix64(seed + i * GOLDEN) mod 2^64; stream splitting folds keys
 * with s' = mix64(s ^ mix64(key + GOLDEN)).  Every exported artifact derives
 * its randomness from this, so re-exports are byte-identical.
 */

const MASK = (1n << 64n) - 1n;
const GOLDEN = 0x9e3779b97f4a7c15n;

export function mix64(z: bigint): bigint {
  z &= MASK;
  z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK;
  z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK;
  return (z ^ (z >> 31n)) & MASK;
}

function foldKey(state: bigint, key: bigint | string): bigint {
  if (typeof key === "string") {
    let h = 0xcbf29ce484222325n;
    for (const byte of Buffer.from(key, "utf-8")) {
      h = ((h ^ BigInt(byte)) * 0x100000001b3n) & MASK;
    }
    key = h;
  }
  return mix64(state ^ mix64((key + GOLDEN) & MASK));
}

export class SeededRng {
  private counter = 0n;

  constructor(public readonly seed: bigint) {
    this.seed = seed & MASK;
  }

  derive(...keys: Array<bigint | number | string>): SeededRng {
    let s = this.seed;
    for (const k of keys) {
      s = foldKey(s, typeof k === "number" ? BigInt(k) : k);
    }
    return new SeededRng(s);
  }

  nextU64(): bigint {
    this.counter += 1n;
    return mix64((this.seed + this.counter * GOLDEN) & MASK);
  }

  /** Uniform double in [0, 1) with 53 random bits. */
  unit(): number {
    return Number(this.nextU64() >> 11n) * 2 ** -53;
  }

  uniform(lo: number, hi: number): number {
    return lo + (hi - lo) * this.unit();
  }

  /** Fan-in-scaled uniform weights as float32. */
  uniformArray(n: number, lo: number, hi: number): Float32Array {
    const out = new Float32Array(n);
    for (let i = 0; i < n; i++) {
      out[i] = Math.fround(this.uniform(lo, hi));
    }
    return out;
  }
}
