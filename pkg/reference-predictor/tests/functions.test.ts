import { describe, expect, it } from "vitest";

import { BUILTINS, evaluateUnit } from "../src/functions";
import { fitKernelRidge, parseCsv } from "../src/fitted";

describe("built-in functions", () => {
  it("simple-1 at (0.5, 0.2)", () => {
    expect(evaluateUnit(BUILTINS["simple-1"], [0.5, 0.2])).toBe(0.45);
  });

  it("simple-2 at all ones", () => {
    expect(evaluateUnit(BUILTINS["simple-2"], [1, 1, 1, 1])).toBe(1);
  });

  it("ackley vanishes at the native origin (unit 0.5)", () => {
    expect(evaluateUnit(BUILTINS.ackley, Array(6).fill(0.5))).toBeCloseTo(0, 12);
  });

  it("levy vanishes at native all-ones", () => {
    const u = Array(6).fill((1 - -10) / 20); // native 1 on [-10, 10]
    expect(evaluateUnit(BUILTINS.levy, u)).toBeCloseTo(0, 12);
  });

  it("detpep108d vanishes at all halves", () => {
    expect(evaluateUnit(BUILTINS.detpep108d, Array(8).fill(0.5))).toBeCloseTo(0, 12);
  });

  it("branin global minimum", () => {
    const u = [(Math.PI + 5) / 15, 2.275 / 15];
    expect(evaluateUnit(BUILTINS.branin, u)).toBeCloseTo(0.397887, 6);
  });

  it("declares the documented dimensions", () => {
    const dims = Object.fromEntries(
      Object.values(BUILTINS).map((f) => [f.name, f.dim]),
    );
    expect(dims).toEqual({
      franke: 2,
      branin: 2,
      "simple-1": 2,
      "simple-2": 4,
      levy: 6,
      ackley: 6,
      detpep108d: 8,
    });
  });
});

describe("csv parsing and kernel ridge", () => {
  it("parses the shared csv schema (response last)", () => {
    const { inputs, responses } = parseCsv("a,b,y\n0.1,0.2,1\n0.3,0.4,2\n");
    expect(inputs).toEqual([
      [0.1, 0.2],
      [0.3, 0.4],
    ]);
    expect(responses).toEqual([1, 2]);
  });

  it("rejects non-numeric cells", () => {
    expect(() => parseCsv("a,y\n1,2\nx,3\n")).toThrow(/non-numeric/);
  });

  it("interpolates a smooth surface and keeps local slopes alive", () => {
    // train on f = 0.5 + x1^2 + 0.3 x2 over a grid
    const inputs: number[][] = [];
    const responses: number[] = [];
    for (let i = 0; i <= 12; i++) {
      for (let j = 0; j <= 12; j++) {
        const x1 = i / 12;
        const x2 = j / 12;
        inputs.push([x1, x2]);
        responses.push(0.5 + x1 * x1 + 0.3 * x2);
      }
    }
    const model = fitKernelRidge(inputs, responses);
    for (const [x1, x2] of [
      [0.3, 0.4],
      [0.55, 0.8],
      [0.05, 0.95],
    ]) {
      const expected = 0.5 + x1 * x1 + 0.3 * x2;
      expect(Math.abs(model.predict([x1, x2]) - expected)).toBeLessThan(0.01);
    }
    // central difference at the probe scale hosts actually use
    const delta = 0.01;
    const slope =
      (model.predict([0.5 + delta / 2, 0.5]) - model.predict([0.5 - delta / 2, 0.5])) /
      delta;
    expect(Math.abs(slope - 1.0)).toBeLessThan(0.1);
  });
});
