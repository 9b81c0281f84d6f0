// Pure knowledge-graph tree logic behind the browser view: visibility under
// an expansion set, path expansion for search highlighting, and the context
// menu actions a node offers.

import type { KgDocument, KgNode } from "./api.js";

export type TreeIndex = {
  root: string;
  byId: Map<string, KgNode>;
};

export function indexTree(doc: KgDocument): TreeIndex {
  const byId = new Map<string, KgNode>();
  for (const node of doc.nodes) byId.set(node.id, node);
  return { root: doc.root, byId };
}

export function toggleExpanded(expanded: Set<string>, nodeId: string): Set<string> {
  const next = new Set(expanded);
  if (next.has(nodeId)) next.delete(nodeId);
  else next.add(nodeId);
  return next;
}

export function expandPath(expanded: Set<string>, path: string[]): Set<string> {
  // every ancestor on the path opens; the terminal node itself stays as-is
  const next = new Set(expanded);
  for (const nodeId of path.slice(0, -1)) next.add(nodeId);
  return next;
}

export function visibleNodes(tree: TreeIndex, expanded: Set<string>): string[] {
  // depth-first order of nodes whose every ancestor is expanded
  const out: string[] = [];
  const walk = (nodeId: string) => {
    out.push(nodeId);
    if (!expanded.has(nodeId)) return;
    const node = tree.byId.get(nodeId);
    if (node) for (const child of node.children) walk(child);
  };
  walk(tree.root);
  return out;
}

export function depthOf(tree: TreeIndex, nodeId: string): number {
  let depth = 0;
  let current = tree.byId.get(nodeId);
  while (current && current.parent !== null) {
    depth += 1;
    current = tree.byId.get(current.parent);
  }
  return depth;
}

export type MenuAction = "show-tables" | "metaprofile";

export function nodeMenuActions(node: KgNode): MenuAction[] {
  // cluster actions exist only where a cluster is attached
  if (!node.cluster_ref) return [];
  return ["show-tables", "metaprofile"];
}

export function highlightSets(results: { node_id: string; path: string[] }[]): {
  matches: Set<string>;
  onPath: Set<string>;
} {
  const matches = new Set<string>();
  const onPath = new Set<string>();
  for (const r of results) {
    matches.add(r.node_id);
    for (const nodeId of r.path) onPath.add(nodeId);
  }
  return { matches, onPath };
}
