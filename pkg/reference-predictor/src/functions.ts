/**
 * Built-in response surfaces, evaluated in unit-box coordinates.
 *
 * Each function owns a native domain box; unit coordinates are mapped
 * affinely onto it before evaluation. Formulas and operation order mirror
 * the host library so values agree to within a few ulps.
 */

export interface BuiltinFunction {
  name: string;
  dim: number;
  lower: number[];
  upper: number[];
  evaluateNative(x: number[]): number;
}

function franke(x: number[]): number {
  const [x1, x2] = x;
  const t1 = 0.75 * Math.exp(-((9 * x1 - 2) ** 2) / 4.0 - ((9 * x2 - 2) ** 2) / 4.0);
  const t2 = 0.75 * Math.exp(-((9 * x1 + 1) ** 2) / 49.0 - (9 * x2 + 1) / 10.0);
  const t3 = 0.5 * Math.exp(-((9 * x1 - 7) ** 2) / 4.0 - ((9 * x2 - 3) ** 2) / 4.0);
  const t4 = -0.2 * Math.exp(-((9 * x1 - 4) ** 2) - ((9 * x2 - 7) ** 2));
  return t1 + t2 + t3 + t4;
}

function branin(x: number[]): number {
  const [x1, x2] = x;
  const b = 5.1 / (4.0 * Math.PI ** 2);
  const c = 5.0 / Math.PI;
  const t = 1.0 / (8.0 * Math.PI);
  const term = x2 - b * x1 ** 2 + c * x1 - 6.0;
  return term * term + 10.0 * (1.0 - t) * Math.cos(x1) + 10.0;
}

function simple1(x: number[]): number {
  return x[0] * x[0] + x[1];
}

function simple2(x: number[]): number {
  return x[0] * x[1] - x[1] * x[2] + x[3] * x[0];
}

function levy(x: number[]): number {
  const w = x.map((v) => 1.0 + (v - 1.0) / 4.0);
  let total = Math.sin(Math.PI * w[0]) ** 2;
  let mid = 0.0;
  for (let i = 0; i < w.length - 1; i++) {
    mid += (w[i] - 1.0) ** 2 * (1.0 + 10.0 * Math.sin(Math.PI * w[i] + 1.0) ** 2);
  }
  const last = w[w.length - 1];
  return total + mid + (last - 1.0) ** 2 * (1.0 + Math.sin(2.0 * Math.PI * last) ** 2);
}

function ackley(x: number[]): number {
  const d = x.length;
  let sumSq = 0.0;
  let sumCos = 0.0;
  for (const v of x) {
    sumSq += v * v;
    sumCos += Math.cos(2.0 * Math.PI * v);
  }
  return -20.0 * Math.exp(-0.2 * Math.sqrt(sumSq / d)) - Math.exp(sumCos / d) + 20.0 + Math.E;
}

function detpep108d(x: number[]): number {
  let total = 0.0;
  let prefix = 0.0;
  for (let i = 1; i <= 8; i++) {
    prefix += x[i - 1];
    const inner = prefix - 0.5 * i;
    total += inner * inner;
  }
  return total;
}

const box = (dim: number, lo: number, hi: number) => ({
  lower: Array(dim).fill(lo),
  upper: Array(dim).fill(hi),
});

export const BUILTINS: Record<string, BuiltinFunction> = {
  franke: { name: "franke", dim: 2, ...box(2, 0, 1), evaluateNative: franke },
  branin: {
    name: "branin",
    dim: 2,
    lower: [-5, 0],
    upper: [10, 15],
    evaluateNative: branin,
  },
  "simple-1": { name: "simple-1", dim: 2, ...box(2, 0, 1), evaluateNative: simple1 },
  "simple-2": { name: "simple-2", dim: 4, ...box(4, 0, 1), evaluateNative: simple2 },
  levy: { name: "levy", dim: 6, ...box(6, -10, 10), evaluateNative: levy },
  ackley: { name: "ackley", dim: 6, ...box(6, -32.768, 32.768), evaluateNative: ackley },
  detpep108d: { name: "detpep108d", dim: 8, ...box(8, 0, 1), evaluateNative: detpep108d },
};

export function evaluateUnit(fn: BuiltinFunction, u: number[]): number {
  const native = new Array(fn.dim);
  for (let i = 0; i < fn.dim; i++) {
    native[i] = fn.lower[i] + u[i] * (fn.upper[i] - fn.lower[i]);
  }
  return fn.evaluateNative(native);
}
