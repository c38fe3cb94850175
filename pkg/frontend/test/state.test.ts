import { describe, expect, it } from "vitest";

import type { History } from "../src/api.js";
import { frameFor, horizontalLine, stepPath, toX, toY } from "../src/charts.js";
import { auditPoints, fromHistory, meanAbsoluteError } from "../src/state.js";

const history: History = {
  trajectory: [[0, 0.8], [2, 0.85], [3, 0.9]],
  ledger: {
    total: 10,
    spent: 4,
    entries: [
      [0, 0, "missing_values", 1, false],
      [0, 1, "missing_values", 1, true],
      [1, 1, "missing_values", 2, true],
    ],
  },
  discrepancy_log: { "1:missing_values": [[0.86, 0.85]] },
  iterations: [
    {
      index: 0,
      accepted: true,
      duration_s: 0.5,
      attempts: [
        { feature: 0, error_type: "missing_values", predicted_f1: 0.82,
          uncertainty: 0.01, score: 0.81, cost: 1, from_buffer: false,
          fallback: false, cells_cleaned: 4, actual_f1: 0.79,
          accepted: false },
        { feature: 1, error_type: "missing_values", predicted_f1: 0.86,
          uncertainty: 0.02, score: 0.84, cost: 1, from_buffer: false,
          fallback: false, cells_cleaned: 4, actual_f1: 0.85,
          accepted: true },
      ],
    },
  ],
  current_f1: 0.9,
  terminal: null,
  version: 3,
  features: [
    { name: "income", kind: "numerical", fully_clean: false },
    { name: "age", kind: "numerical", fully_clean: true },
  ],
  model: { algorithm: "logreg", seed: 0 },
  budget: 10,
  audit: [],
};

describe("fromHistory", () => {
  it("reconstructs the full view from the history payload alone", () => {
    const view = fromHistory(history);
    expect(view.trajectory).toEqual([[0, 0.8], [2, 0.85], [3, 0.9]]);
    expect(view.spent).toBe(4);
    expect(view.remaining).toBe(6);
    expect(view.features[1].fullyClean).toBe(true);
    expect(view.model).toBe("logreg");
    expect(view.version).toBe(3);
  });

  it("maps ledger feature indices to names", () => {
    const view = fromHistory(history);
    expect(view.ledger.map((r) => r.feature)).toEqual(
      ["income", "age", "age"]);
    expect(view.ledger[0].accepted).toBe(false);
  });

  it("keeps unknown feature indices readable", () => {
    const mangled = {
      ...history,
      ledger: { ...history.ledger,
                entries: [[0, -1, "scaling", 1, true]] as
                  [number, number, string, number, boolean][] },
    };
    expect(fromHistory(mangled).ledger[0].feature).toBe("#-1");
  });

  it("collects predicted-vs-actual pairs across iterations", () => {
    const view = fromHistory(history);
    expect(view.audit).toHaveLength(2);
    expect(view.audit[0].predicted).toBe(0.82);
    expect(view.audit[0].actual).toBe(0.79);
    expect(view.acceptedSteps).toBe(1);
    expect(view.rejectedSteps).toBe(1);
  });

  it("is idempotent: the same payload yields the same view", () => {
    expect(fromHistory(history)).toEqual(fromHistory(history));
  });
});

describe("audit helpers", () => {
  it("computes the mean absolute error of the shown pairs", () => {
    const points = auditPoints(history.iterations);
    const mae = meanAbsoluteError(points)!;
    expect(mae).toBeCloseTo((0.03 + 0.01) / 2, 10);
  });

  it("returns null when nothing was executed", () => {
    expect(meanAbsoluteError([])).toBeNull();
  });
});

describe("charts", () => {
  const points: [number, number][] = [[0, 0.5], [2, 0.7], [3, 0.65]];

  it("maps data space monotonically into the frame", () => {
    const frame = frameFor(points);
    expect(toX(frame, 0)).toBeLessThan(toX(frame, 3));
    expect(toY(frame, 0.5)).toBeGreaterThan(toY(frame, 0.7));
  });

  it("builds a step path that holds values between points", () => {
    const frame = frameFor(points);
    const path = stepPath(frame, points);
    expect(path.startsWith("M ")).toBe(true);
    // two interior points -> two horizontal + two vertical segments + hold
    expect(path.match(/L /g)!.length).toBe(5);
  });

  it("renders the cleaned-reference line horizontally", () => {
    const frame = frameFor(points);
    const d = horizontalLine(frame, 0.72);
    const ys = d.match(/[\d.]+(?=\s*(?:L|$))/g);
    const parts = d.split(" ");
    expect(parts[2]).toBe(parts[5]);
    expect(ys).toBeTruthy();
  });

  it("handles empty trajectories", () => {
    const frame = frameFor([[0, 0.5]]);
    expect(stepPath(frame, [])).toBe("");
  });
});
