// DOM wiring for the single-page UI. All data arrives through ApiClient;
// ViewState round-trips through the URL hash so reloads restore the view.

import { ApiClient, ApiError } from "./api.js";
import type { Bar, ChatResponse, KgNode, PublicationHit, TableHit } from "./api.js";
import {
  autofillPredicates,
  narrativeState,
  sourceLinks,
  synonymsBoxText,
} from "./chatmodel.js";
import {
  drilldownPayload,
  hitTest,
  layoutChart,
  toggleBar,
  type ChartLayout,
} from "./metaprofile.js";
import {
  deserializeState,
  serializeState,
  type Pane,
  type ViewState,
} from "./state.js";
import { renderTableModel, type RenderedTable } from "./tablerender.js";
import {
  expandPath,
  highlightSets,
  indexTree,
  nodeMenuActions,
  toggleExpanded,
  visibleNodes,
  type TreeIndex,
} from "./tree.js";

const api = new ApiClient("");

let state: ViewState = deserializeState(location.hash);
let tree: TreeIndex | null = null;
let highlighted = { matches: new Set<string>(), onPath: new Set<string>() };
let currentProfileNode: string | null = null;
let currentBars: Bar[] = [];
let chartLayout: ChartLayout | null = null;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  cls?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

function byId(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

function pushState() {
  const hash = serializeState(state);
  if (location.hash !== hash) history.replaceState(null, "", hash);
}

function banner(message: string) {
  const box = byId("banner");
  box.textContent = message;
  box.classList.add("visible");
  setTimeout(() => box.classList.remove("visible"), 6000);
}

async function guarded<T>(work: () => Promise<T>): Promise<T | null> {
  try {
    return await work();
  } catch (err) {
    if (err instanceof ApiError) banner(`${err.code}: ${err.message}`);
    else banner(String(err));
    return null;
  }
}

// --- pane switching -------------------------------------------------------

function showPane(pane: Pane) {
  state.pane = pane;
  for (const section of document.querySelectorAll<HTMLElement>(".pane")) {
    section.classList.toggle("active", section.dataset.pane === pane);
  }
  for (const tab of document.querySelectorAll<HTMLElement>(".tab")) {
    tab.classList.toggle("active", tab.dataset.pane === pane);
  }
  pushState();
}

// --- knowledge graph pane -------------------------------------------------

async function loadTree() {
  const doc = await guarded(() => api.getKg());
  if (!doc) return;
  tree = indexTree(doc);
  renderTree();
}

function renderTree() {
  if (!tree) return;
  const host = byId("kg-tree");
  host.textContent = "";
  for (const nodeId of visibleNodes(tree, state.expanded)) {
    const node = tree.byId.get(nodeId)!;
    const row = el("div", "tree-node");
    row.dataset.nodeId = nodeId;
    let depth = 0;
    let cur: KgNode | undefined = node;
    while (cur && cur.parent) {
      depth += 1;
      cur = tree.byId.get(cur.parent);
    }
    row.style.paddingLeft = `${depth * 18 + 6}px`;
    const toggle = el("span", "tree-toggle", node.children.length ? (state.expanded.has(nodeId) ? "▾" : "▸") : "•");
    const label = el("span", "tree-label", node.label);
    if (highlighted.matches.has(nodeId)) label.classList.add("match");
    else if (highlighted.onPath.has(nodeId)) label.classList.add("on-path");
    if (state.selectedNode === nodeId) row.classList.add("selected");
    if (node.cluster_ref) row.classList.add("has-cluster");
    row.appendChild(toggle);
    row.appendChild(label);
    row.addEventListener("click", () => {
      state.expanded = toggleExpanded(state.expanded, nodeId);
      state.selectedNode = nodeId;
      pushState();
      renderTree();
    });
    row.addEventListener("contextmenu", (event) => {
      event.preventDefault();
      openMenu(node, event.clientX, event.clientY);
    });
    host.appendChild(row);
  }
}

function openMenu(node: KgNode, x: number, y: number) {
  closeMenu();
  const actions = nodeMenuActions(node);
  if (!actions.length) return;
  const menu = el("div", "context-menu");
  menu.id = "context-menu";
  menu.style.left = `${x}px`;
  menu.style.top = `${y}px`;
  const entries: [string, () => void][] = [];
  if (actions.includes("show-tables")) {
    entries.push(["Show all tables", () => void showAllTables(node.id)]);
  }
  if (actions.includes("metaprofile")) {
    entries.push(["3D-meta profile", () => void openMetaprofile(node.id)]);
  }
  for (const [label, run] of entries) {
    const item = el("div", "menu-item", label);
    item.addEventListener("click", () => {
      closeMenu();
      run();
    });
    menu.appendChild(item);
  }
  document.body.appendChild(menu);
}

function closeMenu() {
  document.getElementById("context-menu")?.remove();
}

document.addEventListener("click", closeMenu);

async function showAllTables(nodeId: string) {
  state.selectedNode = nodeId;
  pushState();
  const payload = await guarded(() => api.nodeTables(nodeId));
  if (!payload) return;
  const frame = byId("kg-tables-frame");
  frame.textContent = "";
  frame.appendChild(
    el("h3", "", `Tables of cluster ${payload.cluster_id} (${payload.tables.length})`),
  );
  for (const table of payload.tables) {
    frame.appendChild(renderTableElement(renderTableModel(table)));
  }
}

function renderTableElement(model: RenderedTable): HTMLElement {
  const wrap = el("div", "table-wrap");
  if (model.caption) wrap.appendChild(el("div", "table-caption", model.caption));
  const table = el("table", "data-table");
  const head = el("tr");
  for (const header of model.headers) head.appendChild(el("th", "", header));
  table.appendChild(head);
  for (const row of model.rows) {
    const tr = el("tr");
    for (const cell of row.cells) {
      const td = el("td", "", cell.text);
      if (cell.nested) td.appendChild(renderTableElement(cell.nested));
      tr.appendChild(td);
    }
    table.appendChild(tr);
  }
  wrap.appendChild(table);
  return wrap;
}

async function runKgSearch() {
  const input = byId("kg-search-input") as HTMLInputElement;
  if (!input.value.trim()) return;
  const payload = await guarded(() => api.searchKg(input.value));
  if (!payload) return;
  highlighted = highlightSets(payload.results);
  for (const result of payload.results) {
    state.expanded = expandPath(state.expanded, result.path);
  }
  pushState();
  renderTree();
}

// --- publication search pane ----------------------------------------------

const FIELD_IDS = [
  "TITLE",
  "ABSTRACT",
  "BODY",
  "TABLE_CAPTION",
  "TABLE_DATA",
  "TABLE_META",
  "FIGURE_CAPTION",
  "FIGURE_CONTENT",
];

function buildFieldedForm() {
  const host = byId("fielded-form");
  for (const fid of FIELD_IDS) {
    const row = el("label", "field-row");
    row.appendChild(el("span", "field-name", fid.toLowerCase().replace("_", " ")));
    const input = el("input");
    input.dataset.field = fid;
    row.appendChild(input);
    host.appendChild(row);
  }
}

function renderPubHits(hits: PublicationHit[], host: HTMLElement) {
  host.textContent = "";
  if (!hits.length) {
    host.appendChild(el("div", "empty-state", "no matching publications"));
    return;
  }
  for (const hit of hits) {
    const card = el("div", "hit-card");
    card.appendChild(el("div", "hit-score", hit.score.toFixed(4)));
    if (hit.render) {
      // table captions first, then title and authors, then the abstract
      for (const caption of hit.render.table_captions) {
        card.appendChild(el("div", "hit-caption", caption));
      }
      card.appendChild(el("div", "hit-title", hit.render.title));
      card.appendChild(el("div", "hit-authors", hit.render.authors.join(", ")));
      const abstractSection = collapsible("abstract", hit.render.abstract);
      card.appendChild(abstractSection);
    } else {
      card.appendChild(el("div", "hit-title", hit.doc_id));
      for (const snippet of hit.snippets) {
        const block = el("div", "snippet");
        block.appendChild(el("span", "snippet-field", snippet.field.toLowerCase() + ": "));
        block.appendChild(renderHighlighted(snippet.text, snippet.highlight_spans));
        card.appendChild(block);
      }
    }
    host.appendChild(card);
  }
}

function collapsible(title: string, body: string): HTMLElement {
  const wrap = el("div", "collapsible");
  const head = el("div", "collapsible-head", `▸ ${title}`);
  const content = el("div", "collapsible-body", body);
  content.style.display = "none";
  head.addEventListener("click", () => {
    const open = content.style.display !== "none";
    content.style.display = open ? "none" : "block";
    head.textContent = `${open ? "▸" : "▾"} ${title}`;
  });
  wrap.appendChild(head);
  wrap.appendChild(content);
  return wrap;
}

function renderHighlighted(text: string, spans: [number, number][]): HTMLElement {
  const out = el("span", "snippet-text");
  let pos = 0;
  for (const [start, end] of spans) {
    if (start > pos) out.appendChild(document.createTextNode(text.slice(pos, start)));
    out.appendChild(el("mark", "", text.slice(start, end)));
    pos = end;
  }
  if (pos < text.length) out.appendChild(document.createTextNode(text.slice(pos)));
  return out;
}

async function runAllFieldsSearch() {
  const input = byId("pubs-all-input") as HTMLInputElement;
  const payload = await guarded(() => api.searchPublicationsAll(input.value));
  if (payload) renderPubHits(payload.hits, byId("pubs-results"));
}

async function runFieldedSearch() {
  const fields: Record<string, string> = {};
  for (const input of document.querySelectorAll<HTMLInputElement>("#fielded-form input")) {
    if (input.value.trim()) fields[input.dataset.field!] = input.value;
  }
  const payload = await guarded(() => api.searchPublicationsFielded(fields));
  if (payload) renderPubHits(payload.hits, byId("pubs-results"));
}

// --- table search pane ------------------------------------------------------

export function addPredicateRow(attribute = "", value = "") {
  const host = byId("predicate-rows");
  const row = el("div", "predicate-row");
  const attr = el("input");
  attr.placeholder = "attribute";
  attr.className = "pred-attr";
  attr.value = attribute;
  const val = el("input");
  val.placeholder = "value (number, optional)";
  val.className = "pred-value";
  val.value = value;
  const remove = el("button", "", "×");
  remove.addEventListener("click", () => row.remove());
  row.appendChild(attr);
  row.appendChild(val);
  row.appendChild(remove);
  host.appendChild(row);
}

function collectPredicates() {
  const predicates = [];
  for (const row of document.querySelectorAll<HTMLElement>(".predicate-row")) {
    const attr = (row.querySelector(".pred-attr") as HTMLInputElement).value.trim();
    const value = (row.querySelector(".pred-value") as HTMLInputElement).value.trim();
    if (!attr) continue;
    predicates.push({
      attribute_query: attr,
      value: value ? { kind: "EQ_NUM" as const, number: Number(value) } : null,
    });
  }
  return predicates;
}

function renderTableHits(hits: TableHit[], host: HTMLElement) {
  host.textContent = "";
  if (!hits.length) {
    host.appendChild(el("div", "empty-state", "no matching tables"));
    return;
  }
  for (const hit of hits) {
    const card = el("div", "hit-card");
    card.appendChild(el("div", "hit-score", hit.score.toFixed(4)));
    card.appendChild(el("div", "hit-title", hit.table_id));
    for (const binding of hit.bindings) {
      const literal = binding.matched_literal !== null ? ` = ${binding.matched_literal}` : "";
      card.appendChild(
        el(
          "div",
          "binding",
          `${binding.axis} ${binding.label}${literal} (confidence ${binding.confidence.toFixed(2)})`,
        ),
      );
    }
    host.appendChild(card);
  }
}

async function runTableSearch() {
  const predicates = collectPredicates();
  if (!predicates.length) {
    banner("add at least one predicate");
    return;
  }
  const payload = await guarded(() => api.searchTables(predicates));
  if (payload) renderTableHits(payload.hits, byId("table-results"));
}

// --- meta-profile pane --------------------------------------------------------

async function openMetaprofile(nodeId: string) {
  currentProfileNode = nodeId;
  state.selectedNode = nodeId;
  state.selectedBars = [];
  showPane("metaprofile");
  const profile = await guarded(() => api.nodeMetaprofile(nodeId));
  if (!profile) return;
  currentBars = profile.bars;
  byId("metaprofile-title").textContent = `Meta-profile of cluster ${profile.cluster_id}`;
  drawChart();
}

function drawChart() {
  const canvas = byId("metaprofile-canvas") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  chartLayout = layoutChart(currentBars, state.selectedBars, canvas.width, canvas.height);
  for (const bar of chartLayout.bars) {
    const alpha = bar.selected ? 1.0 : 0.75;
    ctx.globalAlpha = alpha;
    ctx.fillStyle = bar.color;
    fillPoly(ctx, bar.left);
    ctx.fillStyle = shade(bar.color, -25);
    fillPoly(ctx, bar.right);
    ctx.fillStyle = shade(bar.color, 25);
    fillPoly(ctx, bar.top);
    ctx.globalAlpha = 1.0;
    if (bar.selected) {
      ctx.strokeStyle = "#111";
      ctx.lineWidth = 2;
      strokePoly(ctx, bar.left);
    }
    ctx.fillStyle = "#333";
    ctx.font = "11px sans-serif";
    ctx.textAlign = "center";
    ctx.fillText(bar.key.label.slice(0, 18), bar.labelAnchor[0], bar.labelAnchor[1]);
    ctx.fillText(bar.score.toFixed(2), bar.labelAnchor[0], bar.hitBox.y - 4);
  }
  const button = byId("drilldown-button") as HTMLButtonElement;
  button.disabled = state.selectedBars.length === 0;
  pushState();
}

function fillPoly(ctx: CanvasRenderingContext2D, points: [number, number][]) {
  ctx.beginPath();
  ctx.moveTo(points[0][0], points[0][1]);
  for (const [x, y] of points.slice(1)) ctx.lineTo(x, y);
  ctx.closePath();
  ctx.fill();
}

function strokePoly(ctx: CanvasRenderingContext2D, points: [number, number][]) {
  ctx.beginPath();
  ctx.moveTo(points[0][0], points[0][1]);
  for (const [x, y] of points.slice(1)) ctx.lineTo(x, y);
  ctx.closePath();
  ctx.stroke();
}

function shade(hex: string, delta: number): string {
  const n = parseInt(hex.slice(1), 16);
  const clamp = (v: number) => Math.max(0, Math.min(255, v));
  const r = clamp((n >> 16) + delta);
  const g = clamp(((n >> 8) & 0xff) + delta);
  const b = clamp((n & 0xff) + delta);
  return `rgb(${r}, ${g}, ${b})`;
}

async function runDrilldown() {
  if (!currentProfileNode || !state.selectedBars.length) return;
  const payload = await guarded(() =>
    api.drilldown(currentProfileNode!, drilldownPayload(state.selectedBars)),
  );
  if (!payload) return;
  const host = byId("drilldown-result");
  host.textContent = "";
  if (payload.empty) {
    host.appendChild(el("div", "empty-state", "the selected bars share no tables"));
  } else {
    host.appendChild(
      el(
        "div",
        "",
        `Sub-cluster ${payload.cluster.cluster_id}: ${payload.cluster.member_table_ids.length} tables`,
      ),
    );
    for (const tid of payload.cluster.member_table_ids) {
      host.appendChild(el("div", "member-id", tid));
    }
  }
  if (payload.kg_node_id && tree) {
    await loadTree();
    state.selectedNode = payload.kg_node_id;
    pushState();
  }
}

// --- chat pane -----------------------------------------------------------------

async function runChat() {
  const input = byId("chat-input") as HTMLInputElement;
  const question = input.value.trim();
  if (!question) return;
  state.chatQuestion = question;
  pushState();
  const transcript = byId("chat-transcript");
  transcript.appendChild(el("div", "chat-user", question));
  let httpStatus = 200;
  let resp: ChatResponse | null = null;
  try {
    resp = await api.chat(question);
  } catch (err) {
    if (err instanceof ApiError && err.status === 503) httpStatus = 503;
    else {
      banner(String(err));
      return;
    }
  }
  if (!resp) return;

  // auto-fill the structural search form from the parsed predicates
  byId("predicate-rows").textContent = "";
  for (const pred of autofillPredicates(resp)) addPredicateRow(pred.attribute, pred.value);

  const synonyms = synonymsBoxText(resp);
  const box = byId("chat-synonyms");
  box.textContent = synonyms;
  box.classList.toggle("visible", Boolean(synonyms));

  const reply = el("div", "chat-reply");
  if (resp.tables.length) {
    const tablesHost = el("div", "chat-tables");
    renderTableHits(resp.tables, tablesHost);
    reply.appendChild(tablesHost);
  }
  const narrative = narrativeState(resp, httpStatus);
  const text = el("div", narrative.unavailable ? "chat-narrative unavailable" : "chat-narrative");
  text.textContent = narrative.text;
  reply.appendChild(text);
  const links = el("div", "chat-sources");
  for (const link of sourceLinks(resp)) {
    const a = el("a", "source-link", link.sourceId);
    a.addEventListener("click", () => {
      if (link.kind === "kg") {
        showPane("kg");
      }
    });
    links.appendChild(a);
  }
  reply.appendChild(links);
  transcript.appendChild(reply);
}

// --- review pane -----------------------------------------------------------------

async function loadReviews() {
  const payload = await guarded(() => api.reviewList());
  if (!payload) return;
  const host = byId("review-items");
  host.textContent = "";
  if (!payload.items.length) {
    host.appendChild(el("div", "empty-state", "no pending review items"));
    return;
  }
  for (const item of payload.items) {
    const card = el("div", "hit-card");
    const subtreeText = `${item.decision.subtree.root.label} \u2192 ${item.decision.subtree.root.children
      .map((c) => c.label)
      .join(", ")}`;
    card.appendChild(el("div", "hit-title", `${item.item_id}: ${subtreeText}`));
    card.appendChild(
      el(
        "div",
        "binding",
        `${item.decision.action}, confidence ${item.decision.confidence.toFixed(2)}: ${item.decision.rationale}`,
      ),
    );
    for (const verdict of ["APPROVED", "REJECTED"]) {
      const btn = el("button", "", verdict.toLowerCase());
      btn.style.marginRight = "8px";
      btn.addEventListener("click", () => {
        void guarded(() => api.reviewApply(item.item_id, verdict)).then(() => loadReviews());
      });
      card.appendChild(btn);
    }
    host.appendChild(card);
  }
}

// --- bootstrap -------------------------------------------------------------------

function bind(id: string, event: string, handler: () => void) {
  byId(id).addEventListener(event, handler);
}

export async function start() {
  buildFieldedForm();
  addPredicateRow();
  for (const tab of document.querySelectorAll<HTMLElement>(".tab")) {
    tab.addEventListener("click", () => showPane(tab.dataset.pane as Pane));
  }
  bind("kg-search-button", "click", () => void runKgSearch());
  bind("pubs-all-button", "click", () => void runAllFieldsSearch());
  bind("fielded-button", "click", () => void runFieldedSearch());
  bind("add-predicate", "click", () => addPredicateRow());
  bind("table-search-button", "click", () => void runTableSearch());
  bind("drilldown-button", "click", () => void runDrilldown());
  bind("chat-send", "click", () => void runChat());
  bind("review-refresh", "click", () => void loadReviews());
  (byId("metaprofile-canvas") as HTMLCanvasElement).addEventListener("click", (event) => {
    const canvas = byId("metaprofile-canvas") as HTMLCanvasElement;
    if (!chartLayout) return;
    const rect = canvas.getBoundingClientRect();
    const key = hitTest(chartLayout, event.clientX - rect.left, event.clientY - rect.top);
    if (key) {
      state.selectedBars = toggleBar(state.selectedBars, key);
      drawChart();
    }
  });

  await loadTree();
  // restore the deep link: pane, selection, chat question
  if (state.chatQuestion) {
    (byId("chat-input") as HTMLInputElement).value = state.chatQuestion;
  }
  showPane(state.pane);
  renderTree();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  void start();
}
