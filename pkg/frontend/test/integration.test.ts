// End-to-end UI contract against a live fixture service. Runs only when
// CKG_UI_BASE points at one (scripts/e2e.sh starts a service and sets it);
// otherwise the suite skips.

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { autofillPredicates } from "../src/chatmodel.js";
import { drilldownPayload, toggleBar } from "../src/metaprofile.js";
import { deserializeState, initialState, serializeState } from "../src/state.js";
import { expandPath, indexTree, visibleNodes } from "../src/tree.js";

const BASE = process.env.CKG_UI_BASE ?? "";

const UMBRELLA_QUESTION =
  "output all latest information available about risk factors and " +
  "predictive models for metastatic colorectal cancer with tumor in " +
  "lymph node, size 8.45";

describe.skipIf(!BASE)("ui contract against the fixture service", () => {
  const api = new ApiClient(BASE);

  it("expands the seeded metastasis path and opens show-all-tables", async () => {
    const doc = await api.getKg();
    const tree = indexTree(doc);
    const search = await api.searchKg("colorectal cancer treatment");
    expect(search.results.length).toBeGreaterThan(0);
    const path = search.results[0].path;
    const labels = search.results[0].labels.map((l) => l.toLowerCase());
    expect(labels).toContain("metastasis");
    expect(labels).toContain("liver");

    let expanded = new Set<string>();
    expanded = expandPath(expanded, path);
    const visible = visibleNodes(tree, expanded);
    expect(visible).toContain(search.results[0].node_id);

    // the treatment node's chemotherapy leaf carries the regimen cluster
    const chemo = await api.searchKg("chemotherapy options");
    const tables = await api.nodeTables(chemo.results[0].node_id);
    expect(tables.cluster_id).toBe("regimen-trials");
    expect(tables.tables.length).toBe(6);
  });

  it("chat auto-fills the table-search form from the figure question", async () => {
    const resp = await api.chat(UMBRELLA_QUESTION, "ALL", "stub");
    const form = autofillPredicates(resp);
    expect(form).toEqual([
      { attribute: "lymph node", value: "" },
      { attribute: "size", value: "8.45" },
    ]);
    // submitting the auto-filled form surfaces the transcribed table first
    const hits = await api.searchTables(
      form.map((f) => ({
        attribute_query: f.attribute,
        value: f.value ? { kind: "EQ_NUM" as const, number: Number(f.value) } : null,
      })),
    );
    expect(hits.hits[0].table_id).toBe("umbrella-risk:t0");
  });

  it("study-design drilldown shows exactly the backend membership", async () => {
    const node = await api.searchKg("summaries case studies");
    const nodeId = node.results[0].node_id;
    const profile = await api.nodeMetaprofile(nodeId);
    const bar = profile.bars.find((b) => b.label === "Study design" && b.axis === "HMD");
    expect(bar).toBeDefined();
    let selection = toggleBar([], { label: bar!.label, axis: bar!.axis });
    const result = await api.drilldown(nodeId, drilldownPayload(selection));
    expect(new Set(result.cluster.member_table_ids)).toEqual(new Set(bar!.table_ids));
    expect(result.kg_node_id).toBeTruthy();
  });

  it("view state survives a reload through the url hash", async () => {
    const doc = await api.getKg();
    const state = initialState();
    state.pane = "metaprofile";
    state.selectedNode = doc.root;
    state.expanded = new Set([doc.root]);
    state.selectedBars = [{ label: "Study design", axis: "HMD" }];
    const restored = deserializeState(serializeState(state));
    expect(serializeState(restored)).toBe(serializeState(state));
  });
});
