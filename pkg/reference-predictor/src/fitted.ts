/**
 * A smooth data-fitted model: Gaussian-kernel ridge regression.
 *
 * Smoothness matters here: hosts probe this process with hypercube designs
 * of edge length ~0.01, and a piecewise-constant learner would hand back
 * zero local slopes. The RBF kernel keeps gradients alive at that scale.
 */

import * as fs from "fs";

export interface FittedModel {
  dim: number;
  predict(point: number[]): number;
}

export function parseCsv(text: string): { inputs: number[][]; responses: number[] } {
  const lines = text.split(/\r?\n/).filter((line) => line.trim().length > 0);
  if (lines.length < 3) {
    throw new Error("need a header row and at least 2 data rows");
  }
  const header = lines[0].split(",");
  if (header.length < 2) {
    throw new Error("need at least one input column and a response column");
  }
  const inputs: number[][] = [];
  const responses: number[] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== header.length) {
      throw new Error(`row ${i + 1}: expected ${header.length} cells`);
    }
    const row = cells.map((cell) => {
      const value = Number(cell);
      if (!Number.isFinite(value)) {
        throw new Error(`row ${i + 1}: non-numeric cell ${JSON.stringify(cell)}`);
      }
      return value;
    });
    inputs.push(row.slice(0, -1));
    responses.push(row[row.length - 1]);
  }
  return { inputs, responses };
}

/** Solve the symmetric positive-definite system via Cholesky. */
function choleskySolve(a: number[][], b: number[]): number[] {
  const n = b.length;
  const l: number[][] = Array.from({ length: n }, () => new Array(n).fill(0));
  for (let i = 0; i < n; i++) {
    for (let j = 0; j <= i; j++) {
      let sum = a[i][j];
      for (let k = 0; k < j; k++) sum -= l[i][k] * l[j][k];
      if (i === j) {
        if (sum <= 0) throw new Error("kernel matrix not positive definite");
        l[i][i] = Math.sqrt(sum);
      } else {
        l[i][j] = sum / l[j][j];
      }
    }
  }
  const y = new Array(n).fill(0);
  for (let i = 0; i < n; i++) {
    let sum = b[i];
    for (let k = 0; k < i; k++) sum -= l[i][k] * y[k];
    y[i] = sum / l[i][i];
  }
  const x = new Array(n).fill(0);
  for (let i = n - 1; i >= 0; i--) {
    let sum = y[i];
    for (let k = i + 1; k < n; k++) sum -= l[k][i] * x[k];
    x[i] = sum / l[i][i];
  }
  return x;
}

export function fitKernelRidge(
  inputs: number[][],
  responses: number[],
  lengthScale = 0.3,
  ridge = 1e-6,
): FittedModel {
  const n = inputs.length;
  const dim = inputs[0].length;
  const mins = new Array(dim).fill(Infinity);
  const maxs = new Array(dim).fill(-Infinity);
  for (const row of inputs) {
    for (let j = 0; j < dim; j++) {
      mins[j] = Math.min(mins[j], row[j]);
      maxs[j] = Math.max(maxs[j], row[j]);
    }
  }
  const spans = maxs.map((hi, j) => (hi > mins[j] ? hi - mins[j] : 1.0));
  const scale = (row: number[]) => row.map((v, j) => (v - mins[j]) / spans[j]);
  const scaled = inputs.map(scale);

  const gamma = 1.0 / (2.0 * lengthScale * lengthScale * dim);
  const kernel = (a: number[], b: number[]) => {
    let dist = 0.0;
    for (let j = 0; j < a.length; j++) {
      const diff = a[j] - b[j];
      dist += diff * diff;
    }
    return Math.exp(-gamma * dist);
  };

  const gram: number[][] = Array.from({ length: n }, (_, i) =>
    Array.from({ length: n }, (_, j) => kernel(scaled[i], scaled[j])),
  );
  for (let i = 0; i < n; i++) gram[i][i] += ridge * n;
  const weights = choleskySolve(gram, responses);

  return {
    dim,
    predict(point: number[]): number {
      const p = scale(point);
      let value = 0.0;
      for (let i = 0; i < n; i++) value += weights[i] * kernel(p, scaled[i]);
      return value;
    },
  };
}

export function fitFromCsvFile(path: string): FittedModel {
  const { inputs, responses } = parseCsv(fs.readFileSync(path, "utf8"));
  return fitKernelRidge(inputs, responses);
}
