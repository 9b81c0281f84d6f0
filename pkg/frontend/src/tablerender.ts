// Render-model for table payloads: resolves the label table into header and
// row-label strings so the DOM layer just prints grids, nested tables
// included as indented sub-grids.

import type { TableCellPayload, TablePayload } from "./api.js";

export type RenderedTable = {
  tableId: string;
  caption: string;
  headers: string[];
  rows: { label: string; cells: { text: string; nested: RenderedTable | null }[] }[];
};

export function renderTableModel(payload: TablePayload): RenderedTable {
  const labels = payload.labels.map((l) => l.raw);
  const headers = payload.hmd.map((i) => labels[i] ?? "");
  const rowLabels = payload.vmd.map((i) => labels[i] ?? "");
  const rows = payload.cells.map((row, i) => ({
    label: rowLabels[i] ?? "",
    cells: row.map((cell) => renderCell(cell)),
  }));
  return { tableId: payload.table_id, caption: payload.caption, headers, rows };
}

function renderCell(cell: TableCellPayload): { text: string; nested: RenderedTable | null } {
  if (typeof cell === "string") return { text: cell, nested: null };
  return { text: cell.text, nested: renderTableModel(cell.nested_table) };
}
