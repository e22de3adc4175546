// The dashboard never recomputes statistics: every rendered cell must be a
// service payload value, formatted to two decimals.

import { describe, expect, it } from "vitest";
import { ReportPayload } from "../src/api.js";
import { formatNumber, formatReport } from "../src/dashboard.js";

const payload: ReportPayload = {
  means: [
    { model: "gpt-x", metric: "bleu", mean: 0.4204482, count: 36 },
    { model: "gpt-x", metric: "human_usability", mean: 3.5, count: 10 },
    { model: "gpt-x", metric: "rouge1_f", mean: null, count: 0 },
  ],
  correlation: {
    cells: [
      {
        metric: "bleu",
        dimension: "usability",
        model: "gpt-x",
        spearman: 1.0,
        kendall: 0.94868,
        n: 10,
      },
    ],
    omitted: [
      {
        metric: "rouge1_f",
        dimension: "usability",
        model: "gpt-x",
        reason: "constant values",
        n: 10,
      },
    ],
  },
};

describe("formatReport", () => {
  it("renders every number from the payload, verbatim at two decimals", () => {
    const model = formatReport(payload);
    for (const [i, row] of payload.means.entries()) {
      expect(model.meansRows[i][0]).toBe(row.model);
      expect(model.meansRows[i][1]).toBe(row.metric);
      expect(model.meansRows[i][2]).toBe(row.mean === null ? "-" : row.mean.toFixed(2));
      expect(model.meansRows[i][3]).toBe(String(row.count));
    }
    const cell = payload.correlation!.cells[0];
    expect(model.correlationRows![0]).toEqual([
      cell.metric,
      cell.dimension,
      cell.model,
      cell.spearman.toFixed(2),
      cell.kendall.toFixed(2),
      String(cell.n),
    ]);
  });

  it("formats rho 1.0 as 1.00", () => {
    expect(formatNumber(1.0)).toBe("1.00");
    const model = formatReport(payload);
    expect(model.correlationRows![0][3]).toBe("1.00");
  });

  it("keeps omitted cells as notes", () => {
    const model = formatReport(payload);
    expect(model.omittedNotes).toEqual([
      "rouge1_f/usability/gpt-x: constant values (n=10)",
    ]);
  });

  it("flags the empty state", () => {
    const model = formatReport({ means: [], correlation: null });
    expect(model.empty).toBe(true);
    expect(model.correlationRows).toBeNull();
  });

  it("handles a means-only report", () => {
    const model = formatReport({ means: payload.means, correlation: null });
    expect(model.empty).toBe(false);
    expect(model.correlationRows).toBeNull();
  });
});
