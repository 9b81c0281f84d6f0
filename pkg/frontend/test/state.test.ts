import { describe, expect, it } from "vitest";

import {
  deserializeState,
  initialState,
  serializeState,
  statesEqual,
  type ViewState,
} from "../src/state.js";

describe("view state url round trip", () => {
  it("restores pane, node, expansion and bars from the hash", () => {
    const state: ViewState = {
      pane: "metaprofile",
      selectedNode: "n0007",
      expanded: new Set(["n0001", "n0002", "n0003"]),
      selectedBars: [
        { label: "Study design", axis: "HMD" },
        { label: "Arm x", axis: "VMD" },
      ],
      chatQuestion: "tumor in lymph node, size 8.45",
    };
    const restored = deserializeState(serializeState(state));
    expect(restored.pane).toBe("metaprofile");
    expect(restored.selectedNode).toBe("n0007");
    expect([...restored.expanded].sort()).toEqual(["n0001", "n0002", "n0003"]);
    expect(restored.selectedBars).toEqual(state.selectedBars);
    expect(restored.chatQuestion).toBe(state.chatQuestion);
    expect(statesEqual(state, restored)).toBe(true);
  });

  it("empty hash yields the initial state", () => {
    expect(statesEqual(deserializeState(""), initialState())).toBe(true);
    expect(statesEqual(deserializeState("#"), initialState())).toBe(true);
  });

  it("bar labels with separators survive", () => {
    const state = initialState();
    state.selectedBars = [{ label: "Effect size (95% CI)*", axis: "HMD" }];
    const restored = deserializeState(serializeState(state));
    expect(restored.selectedBars).toEqual(state.selectedBars);
  });

  it("unknown pane names fall back to the kg pane", () => {
    const restored = deserializeState("#pane=bogus");
    expect(restored.pane).toBe("kg");
  });
});
