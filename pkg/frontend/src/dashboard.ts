// Pure formatting of the service's report payload into table rows. No
// statistics are recomputed here: every displayed number is a service
// value rendered to two decimals, which the tests assert by comparing the
// rows back to the payload.

import { ReportPayload } from "./api.js";

export interface DashboardModel {
  empty: boolean;
  meansHeader: string[];
  meansRows: string[][];
  correlationHeader: string[];
  correlationRows: string[][] | null;
  omittedNotes: string[];
}

export function formatNumber(value: number): string {
  return value.toFixed(2);
}

export function formatReport(report: ReportPayload): DashboardModel {
  const meansRows = report.means.map((row) => [
    row.model,
    row.metric,
    row.mean === null ? "-" : formatNumber(row.mean),
    String(row.count),
  ]);

  let correlationRows: string[][] | null = null;
  const omittedNotes: string[] = [];
  if (report.correlation) {
    correlationRows = report.correlation.cells.map((cell) => [
      cell.metric,
      cell.dimension,
      cell.model,
      formatNumber(cell.spearman),
      formatNumber(cell.kendall),
      String(cell.n),
    ]);
    for (const omitted of report.correlation.omitted) {
      omittedNotes.push(
        `${omitted.metric}/${omitted.dimension}/${omitted.model}: ${omitted.reason} (n=${omitted.n})`,
      );
    }
  }

  return {
    empty: meansRows.length === 0,
    meansHeader: ["model", "metric", "mean", "n"],
    meansRows,
    correlationHeader: ["metric", "dimension", "model", "spearman", "kendall", "n"],
    correlationRows,
    omittedNotes,
  };
}
