// ViewState and its URL round-trip: reloading a deep link restores the same
// pane, selected node, expansion set and meta-profile bar selection.

export type Pane = "kg" | "pubs-search" | "table-search" | "metaprofile" | "chat" | "review";

export type BarKey = { label: string; axis: "HMD" | "VMD" };

export type ViewState = {
  pane: Pane;
  selectedNode: string | null;
  expanded: Set<string>;
  selectedBars: BarKey[];
  chatQuestion: string;
};

export const PANES: Pane[] = ["kg", "pubs-search", "table-search", "metaprofile", "chat", "review"];

export function initialState(): ViewState {
  return {
    pane: "kg",
    selectedNode: null,
    expanded: new Set(),
    selectedBars: [],
    chatQuestion: "",
  };
}

export function serializeState(state: ViewState): string {
  const params = new URLSearchParams();
  params.set("pane", state.pane);
  if (state.selectedNode) params.set("node", state.selectedNode);
  if (state.expanded.size) params.set("open", [...state.expanded].sort().join(","));
  if (state.selectedBars.length) {
    params.set(
      "bars",
      state.selectedBars.map((b) => `${b.axis}:${b.label}`).join("|"),
    );
  }
  if (state.chatQuestion) params.set("q", state.chatQuestion);
  return "#" + params.toString();
}

export function deserializeState(hash: string): ViewState {
  const state = initialState();
  const raw = hash.startsWith("#") ? hash.slice(1) : hash;
  if (!raw) return state;
  const params = new URLSearchParams(raw);
  const pane = params.get("pane");
  if (pane && (PANES as string[]).includes(pane)) state.pane = pane as Pane;
  state.selectedNode = params.get("node");
  const open = params.get("open");
  if (open) state.expanded = new Set(open.split(",").filter(Boolean));
  const bars = params.get("bars");
  if (bars) {
    state.selectedBars = bars
      .split("|")
      .filter(Boolean)
      .map((entry) => {
        const idx = entry.indexOf(":");
        return { axis: entry.slice(0, idx) as "HMD" | "VMD", label: entry.slice(idx + 1) };
      });
  }
  state.chatQuestion = params.get("q") ?? "";
  return state;
}

export function statesEqual(a: ViewState, b: ViewState): boolean {
  return serializeState(a) === serializeState(b);
}
